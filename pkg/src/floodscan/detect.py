"""SYN-flood and footprinting detection over ordered flow events.

Both detectors run in one pass. Trace time is cut into fixed,
wall-aligned intervals (``interval_seconds`` wide); counters, ledgers
and alert dedup marks all reset at every boundary, so each interval is
judged on its own.

SYN-flood: a filter keyed by destination (ip, port) is incremented for
every pure SYN and decremented for a FIN in either direction of a
connection to that service (the reverse direction is recognized by the
set of services that received SYNs this interval). The first time a
key's estimate reaches the threshold inside an interval, one alert is
emitted for it, snapshotting the estimate at that moment.

Footprinting: a filter keyed by (source ip, destination ip) counts SYN
probes minus completing ACKs; scanners never complete, so their pair
counter grows. When a pair's estimate reaches the watch level, an exact
ledger entry is created for it, reconstructed from the probes already
seen in the current interval, and tracks distinct destination ports and
SYN-ACK responses from then on. A pair whose distinct-port count
reaches the scan threshold yields one alert per interval; the alert is
finalized at the interval boundary so its count covers every distinct
port the pair probed in the interval, not just those up to the
crossing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .flow import EventClass, FlowEvent, classify
from .pcf import Pcf, PcfConfig, dest_key, pair_key

logger = logging.getLogger(__name__)

_Ts = tuple[int, int]


class AlertKind(Enum):
    SYN_FLOOD = "SYN_FLOOD"
    FOOTPRINTING = "FOOTPRINTING"


@dataclass(frozen=True)
class Alert:
    """One detection verdict; count meaning depends on kind.

    SYN_FLOOD: count is the filter estimate when the threshold was
    reached. FOOTPRINTING: count is the number of distinct destination
    ports the pair probed within the interval.
    """

    kind: AlertKind
    affected_ip: str
    count: int
    first_ts: float
    last_ts: float
    affected_port: Optional[int] = None
    source_ip: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "affected_ip": self.affected_ip,
            "affected_port": self.affected_port,
            "source_ip": self.source_ip,
            "count": self.count,
            "first_ts": self.first_ts,
            "last_ts": self.last_ts,
        }


@dataclass(frozen=True)
class DetectorConfig:
    synflood_threshold: int = 512
    synflood_stages: int = 3
    synflood_buckets: int = 1024
    footprint_scan_threshold: int = 4
    footprint_watch_level: Optional[int] = None
    interval_seconds: int = 60
    seeds: Optional[tuple[int, ...]] = None
    rst_decrements: bool = False

    def __post_init__(self) -> None:
        if self.synflood_threshold < 1:
            raise ValueError("synflood threshold must be >= 1")
        if self.footprint_scan_threshold < 1:
            raise ValueError("scan threshold must be >= 1")
        if self.footprint_watch_level is not None and self.footprint_watch_level < 1:
            raise ValueError("watch level must be >= 1")
        if self.interval_seconds < 1:
            raise ValueError("interval_seconds must be >= 1")
        if self.seeds is not None:
            object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def watch_level(self) -> int:
        if self.footprint_watch_level is not None:
            return self.footprint_watch_level
        return self.footprint_scan_threshold

    @classmethod
    def from_dict(cls, data: dict) -> "DetectorConfig":
        """Build from the nested config-file layout.

        Top level: synflood, footprint, interval_seconds, seeds,
        rst_decrements. Unknown keys are rejected.
        """
        known_top = {"synflood", "footprint", "interval_seconds", "seeds", "rst_decrements"}
        unknown = set(data) - known_top
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict = {}
        synflood = data.get("synflood", {})
        unknown = set(synflood) - {"threshold", "stages", "buckets"}
        if unknown:
            raise ValueError(f"unknown synflood config keys: {sorted(unknown)}")
        if "threshold" in synflood:
            kwargs["synflood_threshold"] = int(synflood["threshold"])
        if "stages" in synflood:
            kwargs["synflood_stages"] = int(synflood["stages"])
        if "buckets" in synflood:
            kwargs["synflood_buckets"] = int(synflood["buckets"])
        footprint = data.get("footprint", {})
        unknown = set(footprint) - {"scan_threshold", "watch_level"}
        if unknown:
            raise ValueError(f"unknown footprint config keys: {sorted(unknown)}")
        if "scan_threshold" in footprint:
            kwargs["footprint_scan_threshold"] = int(footprint["scan_threshold"])
        if "watch_level" in footprint:
            kwargs["footprint_watch_level"] = int(footprint["watch_level"])
        if "interval_seconds" in data:
            kwargs["interval_seconds"] = int(data["interval_seconds"])
        if "seeds" in data and data["seeds"] is not None:
            kwargs["seeds"] = tuple(int(s) for s in data["seeds"])
        if "rst_decrements" in data:
            kwargs["rst_decrements"] = bool(data["rst_decrements"])
        return cls(**kwargs)


@dataclass(frozen=True)
class IntervalSummary:
    start_sec: int
    events: int
    alerts: int
    skipped: int = 0
    corrupt: int = 0


def _ts_float(ts: _Ts) -> float:
    return ts[0] + ts[1] / 1e6


class SynFloodDetector:
    """Destination-keyed half-open connection counter with one alert per key."""

    def __init__(self, config: DetectorConfig):
        self.config = config
        self.pcf = Pcf(
            PcfConfig(
                stages=config.synflood_stages,
                buckets=config.synflood_buckets,
                threshold=config.synflood_threshold,
                seeds=config.seeds,
            )
        )
        self._services: set[tuple[str, int]] = set()
        self._spans: dict[bytes, tuple[_Ts, _Ts]] = {}
        self._alerted: set[bytes] = set()

    def _touch(self, key: bytes, ts: _Ts) -> None:
        span = self._spans.get(key)
        self._spans[key] = (span[0], ts) if span else (ts, ts)

    def ingest(self, event: FlowEvent) -> Optional[Alert]:
        kind = classify(event)
        ts = (event.ts_sec, event.ts_usec)
        if kind is EventClass.PURE_SYN:
            key = dest_key(event.dip, event.dp)
            self._services.add((event.dip, event.dp))
            self.pcf.update(key, +1)
            self._touch(key, ts)
            if key not in self._alerted and self.pcf.exceeds(key):
                self._alerted.add(key)
                first, last = self._spans[key]
                return Alert(
                    kind=AlertKind.SYN_FLOOD,
                    affected_ip=event.dip,
                    affected_port=event.dp,
                    count=self.pcf.estimate(key),
                    first_ts=_ts_float(first),
                    last_ts=_ts_float(last),
                )
        elif kind is EventClass.FIN or (
            kind is EventClass.RST and self.config.rst_decrements
        ):
            # Either endpoint's FIN signals completion; key stays the service.
            if (event.dip, event.dp) in self._services:
                key = dest_key(event.dip, event.dp)
            elif (event.sip, event.sp) in self._services:
                key = dest_key(event.sip, event.sp)
            else:
                return None
            self.pcf.update(key, -1)
            self._touch(key, ts)
        return None

    def reset(self) -> None:
        self.pcf.reset()
        self._services.clear()
        self._spans.clear()
        self._alerted.clear()


@dataclass
class LedgerEntry:
    """Exact per-pair accounting, kept only for pairs past the watch level."""

    sip: str
    dip: str
    ports: set[int]
    synacks: int
    first: _Ts
    last: _Ts
    alerted: bool = False
    seq: int = -1


class FootprintDetector:
    """Pair-keyed probe counter with exact distinct-port tracking on top."""

    def __init__(self, config: DetectorConfig):
        self.config = config
        self.pcf = Pcf(
            PcfConfig(
                stages=config.synflood_stages,
                buckets=config.synflood_buckets,
                threshold=config.watch_level,
                seeds=config.seeds,
            )
        )
        self.ledger: dict[tuple[str, str], LedgerEntry] = {}
        # Probe retention for the current interval, so a pair activating
        # mid-interval still gets an exact distinct-port count.
        self._probes: list[tuple[str, str, str, int, _Ts]] = []

    def ingest(self, event: FlowEvent) -> Optional[LedgerEntry]:
        """Feed one event; returns the ledger entry if it just crossed
        the scan threshold (the engine stamps emission order on it)."""
        kind = classify(event)
        ts = (event.ts_sec, event.ts_usec)
        if kind is EventClass.PURE_SYN:
            self._probes.append(("syn", event.sip, event.dip, event.dp, ts))
            key = pair_key(event.sip, event.dip)
            self.pcf.update(key, +1)
            entry = self.ledger.get((event.sip, event.dip))
            if entry is not None:
                entry.ports.add(event.dp)
                entry.last = ts
            elif self.pcf.exceeds(key):
                entry = self._activate(event.sip, event.dip)
            if (
                entry is not None
                and not entry.alerted
                and len(entry.ports) >= self.config.footprint_scan_threshold
            ):
                entry.alerted = True
                return entry
        elif kind is EventClass.ACK_ONLY:
            # The completing ACK: a real client finishes its handshake,
            # a scanner never does.
            self.pcf.update(pair_key(event.sip, event.dip), -1)
        elif kind is EventClass.SYN_ACK:
            self._probes.append(("synack", event.sip, event.dip, event.dp, ts))
            entry = self.ledger.get((event.dip, event.sip))
            if entry is not None:
                entry.synacks += 1
        return None

    def _activate(self, sip: str, dip: str) -> LedgerEntry:
        ports: set[int] = set()
        synacks = 0
        first: Optional[_Ts] = None
        last: Optional[_Ts] = None
        for kind, psip, pdip, pdp, pts in self._probes:
            if kind == "syn" and psip == sip and pdip == dip:
                ports.add(pdp)
                if first is None:
                    first = pts
                last = pts
            elif kind == "synack" and psip == dip and pdip == sip:
                synacks += 1
        assert first is not None and last is not None
        entry = LedgerEntry(sip=sip, dip=dip, ports=ports, synacks=synacks, first=first, last=last)
        self.ledger[(sip, dip)] = entry
        return entry

    def finalize(self) -> list[LedgerEntry]:
        """Ledger entries that alerted this interval, in emission order."""
        return sorted(
            (e for e in self.ledger.values() if e.alerted), key=lambda e: e.seq
        )

    def reset(self) -> None:
        self.pcf.reset()
        self.ledger.clear()
        self._probes.clear()


class DetectionEngine:
    """Single pass over an ordered event stream, driving both detectors.

    Single writer: feed events from one thread. Interval boundaries are
    derived from event timestamps; ``tick`` advances trace time without
    an event.
    """

    def __init__(self, config: Optional[DetectorConfig] = None):
        self.config = config or DetectorConfig()
        self.synflood = SynFloodDetector(self.config)
        self.footprint = FootprintDetector(self.config)
        self.summaries: list[IntervalSummary] = []
        self.events_processed = 0
        self.disorder = 0
        self.clock_regressions = 0
        self.skipped = 0  # pipeline-level counts, set by the caller
        self.corrupt = 0
        self._alerts: list[tuple[int, Alert]] = []
        self._interval: Optional[int] = None
        self._interval_events = 0
        self._interval_alerts = 0
        self._last_ts: Optional[_Ts] = None
        self._seq = 0
        self._finished = False

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def process(self, event: FlowEvent) -> list[Alert]:
        """Feed one event; returns any alerts it caused (boundary
        flushes included)."""
        if self._finished:
            raise RuntimeError("engine already finished")
        ts = (event.ts_sec, event.ts_usec)
        if self._last_ts is not None and _ts_float(self._last_ts) - _ts_float(ts) > 1.0:
            self.disorder += 1
            logger.warning(
                "event at %.6f arrived after %.6f (beyond 1s jitter)",
                _ts_float(ts),
                _ts_float(self._last_ts),
            )
        emitted = self._advance(event.ts_sec)

        alert = self.synflood.ingest(event)
        if alert is not None:
            self._alerts.append((self._next_seq(), alert))
            self._interval_alerts += 1
            emitted.append(alert)
        entry = self.footprint.ingest(event)
        if entry is not None:
            entry.seq = self._next_seq()

        self._interval_events += 1
        self.events_processed += 1
        if self._last_ts is None or ts > self._last_ts:
            self._last_ts = ts
        return emitted

    def tick(self, ts_sec: int, ts_usec: int = 0) -> list[IntervalSummary]:
        """Advance trace time; closes intervals the clock has passed.

        A regression (earlier than the last event) is counted and the
        tick ignored rather than raised.
        """
        if self._last_ts is not None and (ts_sec, ts_usec) < self._last_ts:
            self.clock_regressions += 1
            logger.warning(
                "tick at %.6f precedes last event %.6f; ignored",
                _ts_float((ts_sec, ts_usec)),
                _ts_float(self._last_ts),
            )
            return []
        before = len(self.summaries)
        self._advance(ts_sec)
        self._last_ts = (ts_sec, ts_usec)
        return self.summaries[before:]

    def _advance(self, ts_sec: int) -> list[Alert]:
        idx = ts_sec // self.config.interval_seconds
        if self._interval is None:
            self._interval = idx
            return []
        if idx <= self._interval:
            return []
        flushed = self._close_interval(reset=True)
        self._interval = idx
        return flushed

    def _close_interval(self, reset: bool) -> list[Alert]:
        assert self._interval is not None
        flushed: list[Alert] = []
        for entry in self.footprint.finalize():
            alert = Alert(
                kind=AlertKind.FOOTPRINTING,
                affected_ip=entry.dip,
                source_ip=entry.sip,
                count=len(entry.ports),
                first_ts=_ts_float(entry.first),
                last_ts=_ts_float(entry.last),
            )
            self._alerts.append((entry.seq, alert))
            self._interval_alerts += 1
            flushed.append(alert)
        self.summaries.append(
            IntervalSummary(
                start_sec=self._interval * self.config.interval_seconds,
                events=self._interval_events,
                alerts=self._interval_alerts,
                skipped=self.skipped,
                corrupt=self.corrupt,
            )
        )
        if reset:
            self.synflood.reset()
            self.footprint.reset()
        self._interval_events = 0
        self._interval_alerts = 0
        return flushed

    def finish(self) -> list[Alert]:
        """Close the open interval; detectors stay inspectable afterwards."""
        if self._finished:
            return []
        self._finished = True
        if self._interval is None:
            return []
        return self._close_interval(reset=False)

    @property
    def alerts(self) -> list[Alert]:
        """All alerts so far, in emission order."""
        return [alert for _, alert in sorted(self._alerts, key=lambda pair: pair[0])]


def run_detection(
    events: Iterable[FlowEvent], config: Optional[DetectorConfig] = None
) -> list[Alert]:
    """Feed every event to both detectors in order; returns all alerts."""
    engine = DetectionEngine(config)
    for event in events:
        engine.process(event)
    engine.finish()
    return engine.alerts
