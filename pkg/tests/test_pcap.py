import random
import struct

import pytest

from floodscan import (
    BadMagic,
    MalformedFrame,
    PacketRecord,
    PcapReader,
    TcpFlags,
    Truncated,
    UnsupportedLinkType,
    decode_frame,
    read_pcap,
    write_pcap,
)
from helpers import build_frame, write_raw_pcap


def mk_record(i=0, **overrides):
    fields = dict(
        ts_sec=1000 + i,
        ts_usec=(i * 37) % 1_000_000,
        src_ip=f"10.0.{i % 250}.1",
        dst_ip="192.168.1.100",
        src_port=1024 + i,
        dst_port=80,
        flags=TcpFlags.SYN,
        payload_len=i % 5,
    )
    fields.update(overrides)
    return PacketRecord(**fields)


def test_round_trip_three_records(tmp_path):
    records = [
        mk_record(0, flags=TcpFlags.SYN),
        mk_record(1, flags=TcpFlags.SYN | TcpFlags.ACK),
        mk_record(2, flags=TcpFlags.FIN | TcpFlags.ACK, payload_len=11),
    ]
    path = tmp_path / "three.pcap"
    write_pcap(records, path)
    back, stats = read_pcap(path)
    assert back == records
    assert stats.decoded == 3 and stats.skipped == 0 and stats.malformed == 0


def test_round_trip_512_records(tmp_path):
    records = [mk_record(i) for i in range(512)]
    path = tmp_path / "many.pcap"
    assert write_pcap(records, path) == 512
    back, _ = read_pcap(path)
    assert len(back) == 512
    assert back == records


def test_order_preserved(tmp_path):
    records = [mk_record(i, src_port=2000 + i) for i in range(50)]
    path = tmp_path / "order.pcap"
    write_pcap(records, path)
    back, _ = read_pcap(path)
    assert [r.src_port for r in back] == [2000 + i for i in range(50)]


def test_bad_magic_zero_bytes(tmp_path):
    path = tmp_path / "junk.pcap"
    path.write_bytes(b"\x00\x00\x00\x00" + b"\x00" * 40)
    with pytest.raises(BadMagic):
        read_pcap(path)


def test_pcapng_rejected(tmp_path):
    path = tmp_path / "ng.pcapng"
    path.write_bytes(struct.pack("<I", 0x0A0D0D0A) + b"\x00" * 40)
    with pytest.raises(BadMagic):
        read_pcap(path)


def test_file_shorter_than_magic(tmp_path):
    path = tmp_path / "tiny.pcap"
    path.write_bytes(b"\xd4\xc3")
    with pytest.raises(BadMagic):
        read_pcap(path)


def test_truncated_global_header(tmp_path):
    path = tmp_path / "short.pcap"
    path.write_bytes(b"\xd4\xc3\xb2\xa1" + b"\x00" * 10)
    with pytest.raises(Truncated):
        read_pcap(path)


def test_truncated_record_body(tmp_path):
    path = tmp_path / "cut.pcap"
    write_pcap([mk_record(0)], path)
    data = path.read_bytes()
    path.write_bytes(data[:-5])
    with pytest.raises(Truncated):
        read_pcap(path)


def test_truncated_record_header(tmp_path):
    path = tmp_path / "cuthdr.pcap"
    write_pcap([], path)
    with open(path, "ab") as fh:
        fh.write(b"\x01\x02\x03")
    with pytest.raises(Truncated):
        read_pcap(path)


def test_unsupported_linktype(tmp_path):
    path = tmp_path / "raw.pcap"
    write_raw_pcap(path, [], linktype=101)
    with pytest.raises(UnsupportedLinkType):
        read_pcap(path)


def test_udp_skipped_and_counted(tmp_path):
    # 2 TCP frames and 1 UDP frame, counted independently by protocol.
    frames = [
        build_frame(sport=1111, proto=6),
        build_frame(sport=2222, proto=17),
        build_frame(sport=3333, proto=6),
    ]
    path = tmp_path / "mixed.pcap"
    write_raw_pcap(path, frames)
    records, stats = read_pcap(path)
    assert [r.src_port for r in records] == [1111, 3333]
    assert stats.packets == 3
    assert stats.skipped == 1
    assert stats.malformed == 0


def test_non_ipv4_ethertype_skipped(tmp_path):
    path = tmp_path / "arp.pcap"
    write_raw_pcap(path, [build_frame(ethertype=0x0806), build_frame()])
    records, stats = read_pcap(path)
    assert len(records) == 1 and stats.skipped == 1


def test_empty_write_is_global_header_only(tmp_path):
    path = tmp_path / "empty.pcap"
    write_pcap([], path)
    data = path.read_bytes()
    assert len(data) == 24
    magic, major, minor, zone, sigfigs, snaplen, linktype = struct.unpack("<IHHiIII", data)
    assert magic == 0xA1B2C3D4
    assert (major, minor) == (2, 4)
    assert (zone, sigfigs) == (0, 0)
    assert snaplen >= 65535
    assert linktype == 1


def test_syn_flag_byte_position(tmp_path):
    # TCP flags octet sits at offset 13 of the TCP header:
    # 24 (global) + 16 (record) + 14 (eth) + 20 (ip) + 13.
    path = tmp_path / "syn.pcap"
    write_pcap([mk_record(0, flags=TcpFlags.SYN, payload_len=0)], path)
    data = path.read_bytes()
    assert data[24 + 16 + 14 + 20 + 13] == 0x02


def test_ipv4_checksum_valid_on_write(tmp_path):
    path = tmp_path / "sum.pcap"
    write_pcap([mk_record(0)], path)
    frame = path.read_bytes()[40:]
    ip_header = frame[14:34]
    total = sum(struct.unpack("!10H", ip_header))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    assert total == 0xFFFF


def test_big_endian_file_read(tmp_path):
    path = tmp_path / "be.pcap"
    write_raw_pcap(path, [build_frame(sport=4242)], order=">")
    records, _ = read_pcap(path)
    assert len(records) == 1
    assert records[0].src_port == 4242
    assert records[0].ts_sec == 1000


def test_max_packets(tmp_path):
    path = tmp_path / "cap.pcap"
    write_pcap([mk_record(i) for i in range(10)], path)
    records, stats = read_pcap(path, max_packets=4)
    assert len(records) == 4
    assert stats.packets == 4


def test_decode_synack_flags():
    record = decode_frame(build_frame(flags_octet=0x12), 1, 2)
    assert record is not None
    assert record.flags == TcpFlags.SYN | TcpFlags.ACK
    assert (record.ts_sec, record.ts_usec) == (1, 2)


def test_decode_extra_flag_bits_masked():
    # PSH (0x08) and URG (0x20) are outside the tracked set and dropped.
    record = decode_frame(build_frame(flags_octet=0x3A), 0, 0)
    assert record.flags == TcpFlags.SYN | TcpFlags.ACK


def test_decode_udp_is_skip():
    assert decode_frame(build_frame(proto=17), 0, 0) is None


def test_decode_ipv6_version_is_skip():
    assert decode_frame(build_frame(version=6), 0, 0) is None


def test_decode_short_frame_claiming_ipv4_is_malformed():
    with pytest.raises(MalformedFrame):
        decode_frame(b"\x00" * 10, 0, 0)


def test_decode_truncated_tcp_is_malformed():
    frame = build_frame()
    with pytest.raises(MalformedFrame):
        decode_frame(frame[:40], 0, 0)


def test_decode_fragment_skipped():
    assert decode_frame(build_frame(frag=0x0003), 0, 0) is None
    # first fragment (offset 0, MF set) still carries the TCP header
    assert decode_frame(build_frame(frag=0x2000), 0, 0) is not None


def test_decode_options_tolerated():
    record = decode_frame(
        build_frame(sport=7777, ip_options=b"\x01" * 4, tcp_options=b"\x01" * 8), 0, 0
    )
    assert record.src_port == 7777
    assert record.payload_len == 0


def test_decode_padding_excluded_from_payload():
    # Ethernet pads short frames; payload length must come from the
    # IPv4 total length, not the captured byte count.
    record = decode_frame(build_frame(payload=b"ab", pad=b"\x00" * 10), 0, 0)
    assert record.payload_len == 2


def test_decode_overdeclared_total_length_malformed():
    with pytest.raises(MalformedFrame):
        decode_frame(build_frame(total_length=2000), 0, 0)


def test_decode_fuzz_never_crashes():
    rng = random.Random(0xF00D)
    eth_ipv4_prefix = build_frame()[:14]
    for i in range(600):
        n = rng.randrange(0, 120)
        blob = bytes(rng.randrange(256) for _ in range(n))
        if i % 3 == 0:
            blob = eth_ipv4_prefix + blob  # bias toward deeper code paths
        try:
            result = decode_frame(blob, 0, 0)
        except MalformedFrame:
            continue
        assert result is None or isinstance(result, PacketRecord)


def test_malformed_record_counted_not_fatal(tmp_path):
    path = tmp_path / "mal.pcap"
    write_raw_pcap(path, [build_frame(sport=1), b"\x00" * 6, build_frame(sport=2)])
    records, stats = read_pcap(path)
    assert [r.src_port for r in records] == [1, 2]
    assert stats.malformed == 1


def test_record_validation():
    with pytest.raises(ValueError):
        mk_record(0, ts_usec=1_000_000)
    with pytest.raises(ValueError):
        mk_record(0, src_port=70000)
    with pytest.raises(ValueError):
        mk_record(0, dst_ip="999.1.2.3")
    with pytest.raises(ValueError):
        mk_record(0, dst_ip="10.0.0")
    with pytest.raises(ValueError):
        mk_record(0, flags=TcpFlags(0x08))
    with pytest.raises(ValueError):
        mk_record(0, payload_len=-1)


def test_reader_is_reusable_as_capture_source(tmp_path):
    path = tmp_path / "src.pcap"
    write_pcap([mk_record(i) for i in range(3)], path)
    with PcapReader(path) as reader:
        count = sum(1 for _ in reader)
    assert count == 3
