"""Synthetic, ground-truth-labeled TCP traffic.

Three scenario kinds plus a timestamp-merge of any mix:

* benign: complete connections (handshake, one request segment, full
  FIN/ACK teardown) that must never alert;
* syn flood: a burst of pure SYNs to one destination (ip, port) from
  distinct spoofed-looking source ports, never completed;
* port scan: one SYN probe per target port from a single scanner
  socket; open ports answer SYN-ACK, closed ones RST, and the scanner
  never completes a handshake.

Every generator returns the event list together with a manifest that
declares the expected alerts and exact per-key tallies, computed by a
brute-force recount of the emitted events (independent of the sketch
path), so any detector run can be checked against it.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .detect import DetectorConfig
from .flow import EventClass, FlowEvent, classify
from .pcap import TcpFlags

DEFAULT_START_TS = 1_000_000_000.0
DEFAULT_GAP_US = 1000

# Events per benign connection: SYN, SYN-ACK, ACK, request ACK,
# FIN-ACK, ACK, FIN-ACK, ACK.
BENIGN_CONNECTION_EVENTS = 8

_EPHEMERAL_BASE = 10000
_EPHEMERAL_SPAN = 55000


class InvalidSpec(ValueError):
    """Scenario parameters are unusable."""


class ScenarioKind(Enum):
    BENIGN = "BENIGN"
    SYN_FLOOD = "SYN_FLOOD"
    PORT_SCAN = "PORT_SCAN"
    MIXED = "MIXED"


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind
    src_ip: str = "192.168.1.50"
    dst_ip: str = "192.168.1.100"
    dst_port: Optional[int] = None
    ports: tuple[int, ...] = ()
    open_ports: tuple[int, ...] = ()
    count: int = 0
    start_ts: float = DEFAULT_START_TS
    gap_us: int = DEFAULT_GAP_US
    rng_seed: int = 0
    scenarios: tuple["ScenarioSpec", ...] = ()

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        """Parse the scenario file layout; see README for the schema."""
        if not isinstance(data, dict):
            raise InvalidSpec("scenario spec must be a JSON object")
        known = {
            "kind",
            "src_ip",
            "dst_ip",
            "dst_port",
            "ports",
            "port_range",
            "open_ports",
            "count",
            "start_ts",
            "inter_packet_gap_us",
            "rng_seed",
            "scenarios",
        }
        unknown = set(data) - known
        if unknown:
            raise InvalidSpec(f"unknown scenario keys: {sorted(unknown)}")
        try:
            kind = ScenarioKind(str(data["kind"]).upper())
        except KeyError:
            raise InvalidSpec("scenario spec missing 'kind'") from None
        except ValueError:
            raise InvalidSpec(f"unknown scenario kind: {data['kind']!r}") from None

        if kind is ScenarioKind.MIXED:
            subs = tuple(cls.from_dict(sub) for sub in data.get("scenarios", []))
            return cls(kind=kind, scenarios=subs)

        if "dst_ip" not in data:
            raise InvalidSpec("scenario spec missing 'dst_ip'")

        ports: tuple[int, ...] = ()
        if "ports" in data and "port_range" in data:
            raise InvalidSpec("give either 'ports' or 'port_range', not both")
        if "ports" in data:
            ports = tuple(int(p) for p in data["ports"])
        elif "port_range" in data:
            lo, hi = (int(v) for v in data["port_range"])
            if hi < lo:
                raise InvalidSpec(f"empty port_range [{lo}, {hi}]")
            ports = tuple(range(lo, hi + 1))

        kwargs = dict(
            kind=kind,
            dst_ip=str(data["dst_ip"]),
            ports=ports,
            open_ports=tuple(int(p) for p in data.get("open_ports", [])),
            count=int(data.get("count", 0)),
            start_ts=float(data.get("start_ts", DEFAULT_START_TS)),
            gap_us=int(data.get("inter_packet_gap_us", DEFAULT_GAP_US)),
            rng_seed=int(data.get("rng_seed", 0)),
        )
        if "src_ip" in data:
            kwargs["src_ip"] = str(data["src_ip"])
        if data.get("dst_port") is not None:
            kwargs["dst_port"] = int(data["dst_port"])
        return cls(**kwargs)


@dataclass
class Manifest:
    """Ground truth for one generated trace."""

    scenario: str
    events: int
    expected_alerts: list[dict]
    dest_net: dict[str, int]
    pair_ports: dict[str, list[int]]
    synack_responses: dict[str, int]
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "events": self.events,
            "expected_alerts": self.expected_alerts,
            "dest_net": self.dest_net,
            "pair_ports": self.pair_ports,
            "synack_responses": self.synack_responses,
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


class _Clock:
    """Strictly increasing microsecond clock."""

    def __init__(self, start_ts: float, gap_us: int):
        if gap_us < 1:
            raise InvalidSpec(f"inter-packet gap must be >= 1 us, got {gap_us}")
        self._usec = round(start_ts * 1e6)
        self._gap = gap_us

    def next(self) -> tuple[int, int]:
        ts = (self._usec // 1_000_000, self._usec % 1_000_000)
        self._usec += self._gap
        return ts


def _event(ts: tuple[int, int], sip: str, dip: str, sp: int, dp: int, flags: TcpFlags) -> FlowEvent:
    return FlowEvent(ts_sec=ts[0], ts_usec=ts[1], sip=sip, dip=dip, sp=sp, dp=dp, flags=flags)


# --- exact recount (the manifests' ground truth; no sketch involved) ---


def _expected_alerts(events: Sequence[FlowEvent], config: DetectorConfig) -> list[dict]:
    """Brute-force per-interval recount of what must alert.

    SYN flood: the running net SYN-FIN count per destination (ip, port)
    reaching the threshold, FINs mapped through the same either-direction
    service rule the detector uses. Footprinting: distinct destination
    ports per (source, destination) pair reaching the scan threshold; the
    declared count covers the whole interval. Assumes generated scanners
    never complete handshakes.
    """
    interval = config.interval_seconds
    crossings: list[tuple[int, dict]] = []

    net: dict[tuple[str, int], int] = {}
    services: set[tuple[str, int]] = set()
    flood_alerted: set[tuple[str, int]] = set()
    ports: dict[tuple[str, str], set[int]] = {}
    scan_alerted: dict[tuple[str, str], dict] = {}
    current: Optional[int] = None

    for pos, event in enumerate(events):
        idx = event.ts_sec // interval
        if current is None:
            current = idx
        elif idx > current:
            net.clear()
            services.clear()
            flood_alerted.clear()
            ports.clear()
            scan_alerted.clear()
            current = idx
        kind = classify(event)
        if kind is EventClass.PURE_SYN:
            dest = (event.dip, event.dp)
            services.add(dest)
            net[dest] = net.get(dest, 0) + 1
            if dest not in flood_alerted and net[dest] >= config.synflood_threshold:
                flood_alerted.add(dest)
                crossings.append(
                    (
                        pos,
                        {
                            "kind": "SYN_FLOOD",
                            "affected_ip": dest[0],
                            "affected_port": dest[1],
                            "count": net[dest],
                        },
                    )
                )
            pair = (event.sip, event.dip)
            pair_ports = ports.setdefault(pair, set())
            pair_ports.add(event.dp)
            if pair not in scan_alerted and len(pair_ports) >= config.footprint_scan_threshold:
                alert = {
                    "kind": "FOOTPRINTING",
                    "affected_ip": pair[1],
                    "source_ip": pair[0],
                    "count": len(pair_ports),
                }
                scan_alerted[pair] = alert
                crossings.append((pos, alert))
            elif pair in scan_alerted:
                scan_alerted[pair]["count"] = len(pair_ports)
        elif kind is EventClass.FIN:
            if (event.dip, event.dp) in services:
                net[(event.dip, event.dp)] -= 1
            elif (event.sip, event.sp) in services:
                net[(event.sip, event.sp)] -= 1

    crossings.sort(key=lambda item: item[0])
    return [alert for _, alert in crossings]


def _tally(events: Sequence[FlowEvent]) -> tuple[dict, dict, dict]:
    """Whole-trace exact tallies: service-keyed net SYN-FIN, distinct
    ports probed per pair, SYN-ACK responses per pair."""
    net: dict[str, int] = {}
    services: set[tuple[str, int]] = set()
    pair_ports: dict[str, set[int]] = {}
    synacks: dict[str, int] = {}

    def dest_label(ip: str, port: int) -> str:
        return f"{ip}:{port}"

    def pair_label(sip: str, dip: str) -> str:
        return f"{sip}->{dip}"

    for event in events:
        kind = classify(event)
        if kind is EventClass.PURE_SYN:
            services.add((event.dip, event.dp))
            label = dest_label(event.dip, event.dp)
            net[label] = net.get(label, 0) + 1
            pair_ports.setdefault(pair_label(event.sip, event.dip), set()).add(event.dp)
        elif kind is EventClass.FIN:
            if (event.dip, event.dp) in services:
                label = dest_label(event.dip, event.dp)
            elif (event.sip, event.sp) in services:
                label = dest_label(event.sip, event.sp)
            else:
                continue
            net[label] = net.get(label, 0) - 1
        elif kind is EventClass.SYN_ACK:
            label = pair_label(event.dip, event.sip)
            synacks[label] = synacks.get(label, 0) + 1

    ports_out = {label: sorted(values) for label, values in pair_ports.items()}
    synacks_out = {label: count for label, count in synacks.items() if label in ports_out}
    return net, ports_out, synacks_out


def _build_manifest(
    events: Sequence[FlowEvent], kind: ScenarioKind, config: DetectorConfig
) -> Manifest:
    net, pair_ports, synacks = _tally(events)
    return Manifest(
        scenario=kind.value,
        events=len(events),
        expected_alerts=_expected_alerts(events, config),
        dest_net=net,
        pair_ports=pair_ports,
        synack_responses=synacks,
        params={
            "synflood_threshold": config.synflood_threshold,
            "scan_threshold": config.footprint_scan_threshold,
            "interval_seconds": config.interval_seconds,
        },
    )


# --- generators ---


def gen_benign(
    spec: ScenarioSpec, config: Optional[DetectorConfig] = None
) -> tuple[list[FlowEvent], Manifest]:
    """count complete connections from one client to one service."""
    if spec.kind is not ScenarioKind.BENIGN:
        raise InvalidSpec(f"expected BENIGN spec, got {spec.kind.value}")
    if spec.count < 0:
        raise InvalidSpec("count must be >= 0")
    config = config or DetectorConfig()
    client, server = spec.src_ip, spec.dst_ip
    port = spec.dst_port if spec.dst_port is not None else 80
    clock = _Clock(spec.start_ts, spec.gap_us)

    events: list[FlowEvent] = []
    for i in range(spec.count):
        eph = _EPHEMERAL_BASE + i % _EPHEMERAL_SPAN
        c2s = dict(sip=client, dip=server, sp=eph, dp=port)
        s2c = dict(sip=server, dip=client, sp=port, dp=eph)
        events.append(_event(clock.next(), flags=TcpFlags.SYN, **c2s))
        events.append(_event(clock.next(), flags=TcpFlags.SYN | TcpFlags.ACK, **s2c))
        events.append(_event(clock.next(), flags=TcpFlags.ACK, **c2s))
        events.append(_event(clock.next(), flags=TcpFlags.ACK, **c2s))  # request
        events.append(_event(clock.next(), flags=TcpFlags.FIN | TcpFlags.ACK, **c2s))
        events.append(_event(clock.next(), flags=TcpFlags.ACK, **s2c))
        events.append(_event(clock.next(), flags=TcpFlags.FIN | TcpFlags.ACK, **s2c))
        events.append(_event(clock.next(), flags=TcpFlags.ACK, **c2s))
    return events, _build_manifest(events, ScenarioKind.BENIGN, config)


def gen_syn_flood(
    spec: ScenarioSpec, config: Optional[DetectorConfig] = None
) -> tuple[list[FlowEvent], Manifest]:
    """count pure SYNs to one (ip, port), distinct source ports, no FINs."""
    if spec.kind is not ScenarioKind.SYN_FLOOD:
        raise InvalidSpec(f"expected SYN_FLOOD spec, got {spec.kind.value}")
    if spec.count < 0:
        raise InvalidSpec("count must be >= 0")
    if spec.dst_port is None:
        raise InvalidSpec("SYN_FLOOD needs dst_port")
    config = config or DetectorConfig()
    rng = random.Random(spec.rng_seed)
    span = 65536 - 1024
    if spec.count <= span:
        source_ports = rng.sample(range(1024, 65536), k=spec.count)
    else:
        start = rng.randrange(span)
        source_ports = [1024 + (start + i) % span for i in range(spec.count)]
    clock = _Clock(spec.start_ts, spec.gap_us)
    events = [
        _event(clock.next(), spec.src_ip, spec.dst_ip, sp, spec.dst_port, TcpFlags.SYN)
        for sp in source_ports
    ]
    return events, _build_manifest(events, ScenarioKind.SYN_FLOOD, config)


def gen_port_scan(
    spec: ScenarioSpec, config: Optional[DetectorConfig] = None
) -> tuple[list[FlowEvent], Manifest]:
    """One SYN probe per port; open ports answer SYN-ACK, closed RST."""
    if spec.kind is not ScenarioKind.PORT_SCAN:
        raise InvalidSpec(f"expected PORT_SCAN spec, got {spec.kind.value}")
    if not spec.ports:
        raise InvalidSpec("PORT_SCAN needs a non-empty port range")
    config = config or DetectorConfig()
    rng = random.Random(spec.rng_seed)
    scanner_port = rng.randrange(1024, 65536)  # one socket per scan
    open_ports = set(spec.open_ports)
    clock = _Clock(spec.start_ts, spec.gap_us)

    events: list[FlowEvent] = []
    for port in spec.ports:
        events.append(
            _event(clock.next(), spec.src_ip, spec.dst_ip, scanner_port, port, TcpFlags.SYN)
        )
        reply = TcpFlags.SYN | TcpFlags.ACK if port in open_ports else TcpFlags.RST
        events.append(
            _event(clock.next(), spec.dst_ip, spec.src_ip, port, scanner_port, reply)
        )
    return events, _build_manifest(events, ScenarioKind.PORT_SCAN, config)


def gen_mixed(
    spec: ScenarioSpec, config: Optional[DetectorConfig] = None
) -> tuple[list[FlowEvent], Manifest]:
    """Merge sub-scenarios by timestamp; the manifest is their union.

    Sub-scenarios are assumed not to share destination services or
    prober pairs; tallies are summed and alert expectations concatenated.
    """
    if spec.kind is not ScenarioKind.MIXED:
        raise InvalidSpec(f"expected MIXED spec, got {spec.kind.value}")
    config = config or DetectorConfig()
    streams: list[list[FlowEvent]] = []
    manifests: list[Manifest] = []
    for sub in spec.scenarios:
        events, manifest = generate(sub, config)
        streams.append(events)
        manifests.append(manifest)

    merged = list(heapq.merge(*streams, key=lambda e: (e.ts_sec, e.ts_usec)))
    union = Manifest(
        scenario=ScenarioKind.MIXED.value,
        events=len(merged),
        expected_alerts=[a for m in manifests for a in m.expected_alerts],
        dest_net={},
        pair_ports={},
        synack_responses={},
        params={
            "synflood_threshold": config.synflood_threshold,
            "scan_threshold": config.footprint_scan_threshold,
            "interval_seconds": config.interval_seconds,
        },
    )
    for manifest in manifests:
        for label, value in manifest.dest_net.items():
            union.dest_net[label] = union.dest_net.get(label, 0) + value
        for label, values in manifest.pair_ports.items():
            merged_ports = set(union.pair_ports.get(label, [])) | set(values)
            union.pair_ports[label] = sorted(merged_ports)
        for label, value in manifest.synack_responses.items():
            union.synack_responses[label] = union.synack_responses.get(label, 0) + value
    return merged, union


_GENERATORS = {
    ScenarioKind.BENIGN: gen_benign,
    ScenarioKind.SYN_FLOOD: gen_syn_flood,
    ScenarioKind.PORT_SCAN: gen_port_scan,
    ScenarioKind.MIXED: gen_mixed,
}


def generate(
    spec: ScenarioSpec, config: Optional[DetectorConfig] = None
) -> tuple[list[FlowEvent], Manifest]:
    """Dispatch on scenario kind."""
    return _GENERATORS[spec.kind](spec, config)
