"""Classic pcap file I/O and Ethernet/IPv4/TCP frame decoding.

Implements the original libpcap container only (magic 0xa1b2c3d4,
version 2.4): a 24-byte global header followed by 16-byte per-record
headers and raw link-layer frames. Both byte orders are accepted on
read; files are always written little-endian with the Ethernet link
type. pcapng input is rejected with BadMagic.

Only Ethernet/IPv4/TCP frames decode into PacketRecords. Everything
else (ARP, UDP, IPv6, non-first IPv4 fragments) is skipped and counted,
never raised. IPv4 and TCP options are honored on read and never
emitted on write.
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass
from enum import IntFlag
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

PCAP_MAGIC = 0xA1B2C3D4
PCAP_VERSION_MAJOR = 2
PCAP_VERSION_MINOR = 4
PCAP_SNAPLEN = 65535
LINKTYPE_ETHERNET = 1

ETHERTYPE_IPV4 = 0x0800
IP_PROTO_TCP = 6

_ETH_HEADER_LEN = 14
_IPV4_MIN_LEN = 20
_TCP_MIN_LEN = 20

_GLOBAL_LE = struct.Struct("<IHHiIII")
_RECORD_LE = struct.Struct("<IIII")
_RECORD_BE = struct.Struct(">IIII")

# Largest TCP payload that still fits inside one IPv4 total length.
MAX_PAYLOAD = 65535 - _IPV4_MIN_LEN - _TCP_MIN_LEN


class PcapError(Exception):
    """Base class for capture file and frame decoding failures."""


class BadMagic(PcapError):
    """First four bytes are not a classic pcap magic number."""


class Truncated(PcapError):
    """File ends before the bytes its headers promise."""


class UnsupportedLinkType(PcapError):
    """Capture uses a link type other than Ethernet."""


class MalformedFrame(PcapError):
    """Frame is shorter than the headers it declares."""


class TcpFlags(IntFlag):
    """The four control flags the detectors consume, at wire positions."""

    FIN = 0x01
    SYN = 0x02
    RST = 0x04
    ACK = 0x10


FLAG_MASK = TcpFlags.FIN | TcpFlags.SYN | TcpFlags.RST | TcpFlags.ACK
_FLAG_ORDER = (TcpFlags.SYN, TcpFlags.ACK, TcpFlags.FIN, TcpFlags.RST)


def flag_names(flags: TcpFlags) -> list[str]:
    """Canonical list form of a flag set, as used by the spool line format."""
    return [f.name for f in _FLAG_ORDER if f in flags]


def flags_from_names(names: Iterable[str]) -> TcpFlags:
    flags = TcpFlags(0)
    for name in names:
        try:
            flags |= TcpFlags[name]
        except KeyError:
            raise ValueError(f"unknown TCP flag name: {name!r}") from None
    return flags


def ip_to_bytes(address: str) -> bytes:
    """Strict dotted-quad parse; rejects shorthand and leading zeros."""
    parts = address.split(".")
    if len(parts) != 4:
        raise ValueError(f"not a dotted-quad IPv4 address: {address!r}")
    out = bytearray(4)
    for i, part in enumerate(parts):
        if not part.isdigit() or str(int(part)) != part or int(part) > 255:
            raise ValueError(f"not a dotted-quad IPv4 address: {address!r}")
        out[i] = int(part)
    return bytes(out)


def _check_port(port: int, what: str) -> None:
    if not 0 <= port <= 65535:
        raise ValueError(f"{what} {port} outside 0..65535")


@dataclass(frozen=True)
class PacketRecord:
    """One decoded Ethernet/IPv4/TCP frame with its capture timestamp."""

    ts_sec: int
    ts_usec: int
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    flags: TcpFlags
    payload_len: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.ts_sec <= 0xFFFFFFFF:
            raise ValueError(f"ts_sec {self.ts_sec} outside 32-bit range")
        if not 0 <= self.ts_usec < 1_000_000:
            raise ValueError(f"ts_usec {self.ts_usec} outside 0..999999")
        ip_to_bytes(self.src_ip)
        ip_to_bytes(self.dst_ip)
        _check_port(self.src_port, "src_port")
        _check_port(self.dst_port, "dst_port")
        if int(self.flags) & ~int(FLAG_MASK):
            raise ValueError(f"flags 0x{int(self.flags):02x} outside SYN/ACK/FIN/RST")
        if not 0 <= self.payload_len <= MAX_PAYLOAD:
            raise ValueError(f"payload_len {self.payload_len} outside 0..{MAX_PAYLOAD}")

    @property
    def ts(self) -> float:
        return self.ts_sec + self.ts_usec / 1e6


# Any ordered producer of PacketRecords works as a capture source; the
# file-backed one is PcapReader.
CaptureSource = Iterable[PacketRecord]


@dataclass
class ReadStats:
    packets: int = 0    # raw records consumed from the file
    decoded: int = 0    # yielded as PacketRecords
    skipped: int = 0    # not Ethernet/IPv4/TCP, or a later fragment
    malformed: int = 0  # frame shorter than its own headers declare


def _inet_checksum(data: bytes) -> int:
    if len(data) & 1:
        data += b"\x00"
    total = 0
    for (word,) in struct.iter_unpack("!H", data):
        total += word
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def _mac_for(ip_bytes: bytes) -> bytes:
    # Locally administered MAC derived from the IPv4 address; keeps the
    # writer deterministic without a MAC field on PacketRecord.
    return b"\x02\x00" + ip_bytes


def encode_frame(record: PacketRecord) -> bytes:
    """Synthesize the Ethernet/IPv4/TCP bytes for one record.

    Headers are minimal (no options), the IPv4 and TCP checksums are
    valid, and the payload is payload_len zero bytes.
    """
    src = ip_to_bytes(record.src_ip)
    dst = ip_to_bytes(record.dst_ip)
    eth = _mac_for(dst) + _mac_for(src) + struct.pack("!H", ETHERTYPE_IPV4)

    total_len = _IPV4_MIN_LEN + _TCP_MIN_LEN + record.payload_len
    ip_fields = (0x45, 0, total_len, 0, 0, 64, IP_PROTO_TCP)
    ip_sum = _inet_checksum(struct.pack("!BBHHHBBH4s4s", *ip_fields, 0, src, dst))
    ip = struct.pack("!BBHHHBBH4s4s", *ip_fields, ip_sum, src, dst)

    payload = bytes(record.payload_len)
    tcp_fields = (record.src_port, record.dst_port, 0, 0, 5 << 4, int(record.flags), 65535)
    pseudo = src + dst + struct.pack("!BBH", 0, IP_PROTO_TCP, _TCP_MIN_LEN + record.payload_len)
    tcp_sum = _inet_checksum(pseudo + struct.pack("!HHIIBBHHH", *tcp_fields, 0, 0) + payload)
    tcp = struct.pack("!HHIIBBHHH", *tcp_fields, tcp_sum, 0)

    return eth + ip + tcp + payload


def decode_frame(data: bytes, ts_sec: int, ts_usec: int) -> Optional[PacketRecord]:
    """Decode one captured frame; None means "not ours", i.e. skip.

    Never reads past len(data). Raises MalformedFrame when the frame is
    shorter than the lengths its own headers declare; that is distinct
    from a skip.
    """
    if len(data) < _ETH_HEADER_LEN:
        raise MalformedFrame(f"{len(data)}-byte frame is shorter than an Ethernet header")
    ethertype = struct.unpack_from("!H", data, 12)[0]
    if ethertype != ETHERTYPE_IPV4:
        return None

    ip = memoryview(data)[_ETH_HEADER_LEN:]
    if len(ip) < _IPV4_MIN_LEN:
        raise MalformedFrame("IPv4 header truncated")
    if ip[0] >> 4 != 4:
        return None
    ihl = (ip[0] & 0x0F) * 4
    if ihl < _IPV4_MIN_LEN:
        raise MalformedFrame(f"IPv4 header length {ihl} below minimum")
    if len(ip) < ihl:
        raise MalformedFrame("IPv4 options truncated")
    total_len = struct.unpack_from("!H", ip, 2)[0]
    if total_len < ihl:
        raise MalformedFrame("IPv4 total length smaller than its header")
    if total_len > len(ip):
        raise MalformedFrame(f"IPv4 declares {total_len} bytes, frame carries {len(ip)}")
    if struct.unpack_from("!H", ip, 6)[0] & 0x1FFF:
        return None  # later fragment: no TCP header present
    if ip[9] != IP_PROTO_TCP:
        return None

    tcp = ip[ihl:total_len]
    if len(tcp) < _TCP_MIN_LEN:
        raise MalformedFrame("TCP header truncated")
    offset = (tcp[12] >> 4) * 4
    if offset < _TCP_MIN_LEN:
        raise MalformedFrame(f"TCP data offset {offset} below minimum")
    if len(tcp) < offset:
        raise MalformedFrame("TCP options truncated")

    src_port, dst_port = struct.unpack_from("!HH", tcp, 0)
    return PacketRecord(
        ts_sec=ts_sec,
        ts_usec=ts_usec,
        src_ip=socket.inet_ntoa(bytes(ip[12:16])),
        dst_ip=socket.inet_ntoa(bytes(ip[16:20])),
        src_port=src_port,
        dst_port=dst_port,
        flags=TcpFlags(tcp[13] & int(FLAG_MASK)),
        payload_len=len(tcp) - offset,
    )


class PcapReader:
    """Capture source over one classic pcap file.

    Iterating yields PacketRecords in file order. Frames that are not
    Ethernet/IPv4/TCP are skipped; counts accumulate in ``stats``.
    Single consumer: one reader must not be shared between threads, but
    distinct readers over distinct files may run concurrently.
    """

    def __init__(self, path: Union[str, Path], max_packets: Optional[int] = None):
        self.path = Path(path)
        self.max_packets = max_packets
        self.stats = ReadStats()
        self._fh = open(self.path, "rb")
        try:
            self._record_struct = self._read_global_header()
        except Exception:
            self._fh.close()
            raise

    def _read_global_header(self) -> struct.Struct:
        magic = self._fh.read(4)
        if len(magic) < 4:
            raise BadMagic("file shorter than a pcap magic number")
        if magic == b"\xd4\xc3\xb2\xa1":
            order, record_struct = "<", _RECORD_LE
        elif magic == b"\xa1\xb2\xc3\xd4":
            order, record_struct = ">", _RECORD_BE
        else:
            raise BadMagic(f"0x{magic.hex()} is not a classic pcap magic")
        rest = self._fh.read(20)
        if len(rest) < 20:
            raise Truncated("global header cut short")
        linktype = struct.unpack(order + "HHiIII", rest)[5]
        if linktype != LINKTYPE_ETHERNET:
            raise UnsupportedLinkType(f"link type {linktype}; only Ethernet (1) is supported")
        return record_struct

    def __iter__(self) -> Iterator[PacketRecord]:
        while True:
            if self.max_packets is not None and self.stats.packets >= self.max_packets:
                return
            header = self._fh.read(16)
            if not header:
                return
            if len(header) < 16:
                raise Truncated("record header cut short")
            ts_sec, ts_usec, incl_len, _orig_len = self._record_struct.unpack(header)
            data = self._fh.read(incl_len)
            if len(data) < incl_len:
                raise Truncated(f"record promised {incl_len} bytes, file had {len(data)}")
            self.stats.packets += 1
            if ts_usec >= 1_000_000:
                self.stats.malformed += 1
                continue
            try:
                record = decode_frame(data, ts_sec, ts_usec)
            except MalformedFrame:
                self.stats.malformed += 1
                continue
            if record is None:
                self.stats.skipped += 1
                continue
            self.stats.decoded += 1
            yield record

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "PcapReader":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_pcap(
    path: Union[str, Path], max_packets: Optional[int] = None
) -> tuple[list[PacketRecord], ReadStats]:
    """Read a whole file; returns the records plus skip statistics."""
    with PcapReader(path, max_packets=max_packets) as reader:
        records = list(reader)
        return records, reader.stats


def write_pcap(records: Iterable[PacketRecord], path: Union[str, Path]) -> int:
    """Write records as a little-endian Ethernet pcap; returns the count."""
    count = 0
    with open(path, "wb") as fh:
        fh.write(
            _GLOBAL_LE.pack(
                PCAP_MAGIC,
                PCAP_VERSION_MAJOR,
                PCAP_VERSION_MINOR,
                0,
                0,
                PCAP_SNAPLEN,
                LINKTYPE_ETHERNET,
            )
        )
        for record in records:
            frame = encode_frame(record)
            fh.write(_RECORD_LE.pack(record.ts_sec, record.ts_usec, len(frame), len(frame)))
            fh.write(frame)
            count += 1
    return count
