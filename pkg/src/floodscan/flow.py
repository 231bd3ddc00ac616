"""Flow events: the 5-tuple-plus-flags view of TCP traffic.

Direction is never normalized; the detectors key on the literal source
and destination of each packet.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto

from .pcap import FLAG_MASK, PacketRecord, TcpFlags, _check_port, ip_to_bytes


@dataclass(frozen=True)
class FlowEvent:
    """One TCP packet reduced to what the detectors need."""

    ts_sec: int
    ts_usec: int
    sip: str
    dip: str
    sp: int
    dp: int
    flags: TcpFlags

    def __post_init__(self) -> None:
        if self.ts_sec < 0:
            raise ValueError(f"ts_sec {self.ts_sec} negative")
        if not 0 <= self.ts_usec < 1_000_000:
            raise ValueError(f"ts_usec {self.ts_usec} outside 0..999999")
        ip_to_bytes(self.sip)
        ip_to_bytes(self.dip)
        _check_port(self.sp, "sp")
        _check_port(self.dp, "dp")
        if int(self.flags) & ~int(FLAG_MASK):
            raise ValueError(f"flags 0x{int(self.flags):02x} outside SYN/ACK/FIN/RST")

    @property
    def ts(self) -> float:
        return self.ts_sec + self.ts_usec / 1e6


class EventClass(Enum):
    PURE_SYN = auto()
    SYN_ACK = auto()
    FIN = auto()
    RST = auto()
    ACK_ONLY = auto()
    OTHER = auto()


def extract(record: PacketRecord) -> FlowEvent:
    """Copy a packet record's fields verbatim into a FlowEvent."""
    return FlowEvent(
        ts_sec=record.ts_sec,
        ts_usec=record.ts_usec,
        sip=record.src_ip,
        dip=record.dst_ip,
        sp=record.src_port,
        dp=record.dst_port,
        flags=record.flags,
    )


def to_record(event: FlowEvent, payload_len: int = 0) -> PacketRecord:
    """Inverse of extract, for writing generated events back out as pcap."""
    return PacketRecord(
        ts_sec=event.ts_sec,
        ts_usec=event.ts_usec,
        src_ip=event.sip,
        dst_ip=event.dip,
        src_port=event.sp,
        dst_port=event.dp,
        flags=event.flags,
        payload_len=payload_len,
    )


def classify(event: FlowEvent) -> EventClass:
    """Map a flag set onto the class the detectors branch on.

    Priority: pure SYN, SYN-ACK, FIN (even with ACK, since FIN drives
    the counter decrement), RST, lone ACK, other.
    """
    flags = event.flags
    syn = TcpFlags.SYN in flags
    ack = TcpFlags.ACK in flags
    if syn and not ack:
        return EventClass.PURE_SYN
    if syn and ack:
        return EventClass.SYN_ACK
    if TcpFlags.FIN in flags:
        return EventClass.FIN
    if TcpFlags.RST in flags:
        return EventClass.RST
    if ack:
        return EventClass.ACK_ONLY
    return EventClass.OTHER
