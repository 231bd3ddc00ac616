"""Line-oriented event spool: append now, drain exactly once later.

The spool is the optional persistence stage between extraction and
detection. Each event is one JSON object per line with fixed keys
(ts_sec, ts_usec, sip, dip, sp, dp, flags as an array of flag names);
draining returns everything in append order and empties the file.

Single writer, single drainer. Concurrent append and drain on one
spool is unsupported; callers must serialize.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, TextIO, Union

from .flow import FlowEvent
from .pcap import flag_names, flags_from_names

logger = logging.getLogger(__name__)

_REQUIRED_KEYS = {"ts_sec", "ts_usec", "sip", "dip", "sp", "dp", "flags"}


@dataclass(frozen=True)
class CorruptLine:
    """A spool line that failed to parse during a drain."""

    line_no: int
    text: str
    error: str


def event_to_line(event: FlowEvent) -> str:
    payload = {
        "ts_sec": event.ts_sec,
        "ts_usec": event.ts_usec,
        "sip": event.sip,
        "dip": event.dip,
        "sp": event.sp,
        "dp": event.dp,
        "flags": flag_names(event.flags),
    }
    return json.dumps(payload, separators=(",", ":"))


def event_from_line(line: str) -> FlowEvent:
    data = json.loads(line)
    if not isinstance(data, dict):
        raise ValueError("spool line is not a JSON object")
    missing = _REQUIRED_KEYS - data.keys()
    if missing:
        raise ValueError(f"spool line missing keys: {sorted(missing)}")
    return FlowEvent(
        ts_sec=int(data["ts_sec"]),
        ts_usec=int(data["ts_usec"]),
        sip=str(data["sip"]),
        dip=str(data["dip"]),
        sp=int(data["sp"]),
        dp=int(data["dp"]),
        flags=flags_from_names(data["flags"]),
    )


class Spool:
    """File-backed FIFO of flow events with drain-and-delete semantics."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.corrupt_lines: list[CorruptLine] = []
        self._append_fh: Optional[TextIO] = None
        self._pending = self._count_existing()

    def _count_existing(self) -> int:
        try:
            with open(self.path, "r", encoding="utf-8") as fh:
                return sum(1 for line in fh if line.strip())
        except FileNotFoundError:
            return 0

    @property
    def pending(self) -> int:
        return self._pending

    def append(self, event: FlowEvent) -> None:
        if self._append_fh is None:
            self._append_fh = open(self.path, "a", encoding="utf-8")
        self._append_fh.write(event_to_line(event) + "\n")
        self._append_fh.flush()
        self._pending += 1

    def drain(self) -> list[FlowEvent]:
        """Return all pending events in order and empty the backing file.

        Lines that fail to parse are reported in ``corrupt_lines`` with
        their line number and skipped; the rest still drain.
        """
        self.close()
        self.corrupt_lines = []
        events: list[FlowEvent] = []
        try:
            with open(self.path, "r", encoding="utf-8") as fh:
                for line_no, raw in enumerate(fh, start=1):
                    text = raw.strip()
                    if not text:
                        continue
                    try:
                        events.append(event_from_line(text))
                    except ValueError as exc:
                        self.corrupt_lines.append(CorruptLine(line_no, text, str(exc)))
                        logger.warning("spool %s line %d corrupt: %s", self.path, line_no, exc)
        except FileNotFoundError:
            self._pending = 0
            return []
        with open(self.path, "w", encoding="utf-8"):
            pass  # truncate: processed entries are deleted
        self._pending = 0
        return events

    def close(self) -> None:
        if self._append_fh is not None:
            self._append_fh.close()
            self._append_fh = None

    def __enter__(self) -> "Spool":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
