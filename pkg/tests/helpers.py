"""Shared builders for tests; kept independent of library internals."""

from __future__ import annotations

import struct

from floodscan import FlowEvent, TcpFlags


def mk_event(
    ts_sec=1000,
    ts_usec=0,
    sip="10.0.0.1",
    dip="10.0.0.2",
    sp=1234,
    dp=80,
    flags=TcpFlags.SYN,
) -> FlowEvent:
    return FlowEvent(
        ts_sec=ts_sec, ts_usec=ts_usec, sip=sip, dip=dip, sp=sp, dp=dp, flags=flags
    )


def build_frame(
    src=b"\x0a\x00\x00\x01",
    dst=b"\x0a\x00\x00\x02",
    sport=1234,
    dport=80,
    flags_octet=0x02,
    proto=6,
    ethertype=0x0800,
    payload=b"",
    ip_options=b"",
    tcp_options=b"",
    version=4,
    frag=0,
    total_length=None,
    pad=b"",
):
    """Hand-assembled Ethernet/IPv4/TCP frame; written independently of
    the library's encoder so it can serve as its oracle."""
    assert len(ip_options) % 4 == 0 and len(tcp_options) % 4 == 0
    eth = b"\xaa" * 6 + b"\xbb" * 6 + struct.pack("!H", ethertype)
    ihl = 5 + len(ip_options) // 4
    tcp_off = 5 + len(tcp_options) // 4
    if total_length is None:
        total_length = ihl * 4 + tcp_off * 4 + len(payload)
    ip = (
        struct.pack("!BBHHHBBH", (version << 4) | ihl, 0, total_length, 1, frag, 64, proto, 0)
        + src
        + dst
        + ip_options
    )
    tcp = (
        struct.pack("!HHIIBBHHH", sport, dport, 0, 0, tcp_off << 4, flags_octet, 1024, 0, 0)
        + tcp_options
    )
    return eth + ip + tcp + payload + pad


def write_raw_pcap(path, frames, order="<", linktype=1, magic=0xA1B2C3D4):
    """Minimal pcap writer used as the reader's independent counterpart."""
    with open(path, "wb") as fh:
        fh.write(struct.pack(order + "IHHiIII", magic, 2, 4, 0, 0, 65535, linktype))
        for i, frame in enumerate(frames):
            fh.write(struct.pack(order + "IIII", 1000 + i, i, len(frame), len(frame)))
            fh.write(frame)
