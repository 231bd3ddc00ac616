import json
import subprocess
import sys

import pytest

from floodscan import Alert, AlertKind, read_pcap
from floodscan.cli import format_alert, main


def write_spec(path, **fields):
    path.write_text(json.dumps(fields))
    return path


def flood_spec_file(tmp_path, count=600, **extra):
    fields = dict(
        kind="SYN_FLOOD",
        src_ip="10.9.0.1",
        dst_ip="10.0.0.5",
        dst_port=80,
        count=count,
        start_ts=1_000_000_000.0,
        inter_packet_gap_us=500,
        rng_seed=3,
    )
    fields.update(extra)
    return write_spec(tmp_path / "flood.json", **fields)


def scan_spec_file(tmp_path):
    return write_spec(
        tmp_path / "scan.json",
        kind="PORT_SCAN",
        src_ip="192.168.1.50",
        dst_ip="192.168.1.100",
        port_range=[21, 24],
        open_ports=[22],
        rng_seed=1,
    )


def benign_spec_file(tmp_path, count=50):
    return write_spec(
        tmp_path / "benign.json",
        kind="BENIGN",
        src_ip="10.1.0.2",
        dst_ip="10.1.0.3",
        dst_port=80,
        count=count,
    )


def gen(tmp_path, spec_path, name="trace.pcap"):
    out = tmp_path / name
    assert main(["generate", "--spec", str(spec_path), "--out", str(out)]) == 0
    return out


# --- format_alert ---


def test_format_footprinting_golden():
    alert = Alert(
        kind=AlertKind.FOOTPRINTING,
        affected_ip="192.168.1.100",
        count=4,
        first_ts=0.0,
        last_ts=1.0,
        source_ip="192.168.1.50",
    )
    assert (
        format_alert(alert)
        == "Spam/Worm Affected IP: 192.168.1.100 AttckName:FOOT PRINTING ATTACK Detected No.of.Scans:4"
    )


def test_format_synflood_golden():
    alert = Alert(
        kind=AlertKind.SYN_FLOOD,
        affected_ip="10.0.0.5",
        count=512,
        first_ts=0.0,
        last_ts=1.0,
        affected_port=80,
    )
    assert (
        format_alert(alert)
        == "Spam/Worm Affected IP: 10.0.0.5 AttckName:SYN FLOOD ATTACK Detected No.of.Scans:512"
    )


def test_format_no_dedup():
    alert = Alert(
        kind=AlertKind.SYN_FLOOD, affected_ip="1.1.1.1", count=5, first_ts=0.0, last_ts=0.0
    )
    assert format_alert(alert) == format_alert(alert)


# --- generate ---


def test_generate_port_scan_pcap_and_manifest(tmp_path):
    out = gen(tmp_path, scan_spec_file(tmp_path))
    records, _ = read_pcap(out)
    assert len(records) == 8  # 4 probes + 4 responses
    syn_probes = [r for r in records if r.flags == 0x02 and r.dst_ip == "192.168.1.100"]
    assert len(syn_probes) == 4
    manifest = json.loads(out.with_suffix(".manifest.json").read_text())
    assert manifest["scenario"] == "PORT_SCAN"
    assert manifest["expected_alerts"][0]["count"] == 4


def test_generate_missing_dst_ip_fails(tmp_path, capsys):
    spec = write_spec(tmp_path / "bad.json", kind="SYN_FLOOD", dst_port=80, count=10)
    assert main(["generate", "--spec", str(spec), "--out", str(tmp_path / "x.pcap")]) == 1
    assert "dst_ip" in capsys.readouterr().err


def test_generate_same_seed_byte_identical(tmp_path):
    spec = flood_spec_file(tmp_path, count=100)
    a = gen(tmp_path, spec, "a.pcap")
    b = gen(tmp_path, spec, "b.pcap")
    assert a.read_bytes() == b.read_bytes()


def test_generate_bad_json_fails(tmp_path, capsys):
    spec = tmp_path / "broken.json"
    spec.write_text("{not json")
    assert main(["generate", "--spec", str(spec), "--out", str(tmp_path / "x.pcap")]) == 1


# --- analyze ---


def test_analyze_benign_exit_zero_empty_log(tmp_path, capsys):
    pcap = gen(tmp_path, benign_spec_file(tmp_path))
    log = tmp_path / "alerts.log"
    code = main(["analyze", "--input", str(pcap), "--out-log", str(log)])
    out = capsys.readouterr().out
    assert code == 0
    assert log.read_text() == ""
    assert "packets read: 400" in out
    assert "alerts: 0" in out


def test_analyze_flood_exit_two_one_line(tmp_path, capsys):
    pcap = gen(tmp_path, flood_spec_file(tmp_path))
    log = tmp_path / "alerts.log"
    json_out = tmp_path / "alerts.json"
    code = main(
        ["analyze", "--input", str(pcap), "--out-log", str(log), "--out-json", str(json_out)]
    )
    assert code == 2
    lines = log.read_text().splitlines()
    assert lines == [
        "Spam/Worm Affected IP: 10.0.0.5 AttckName:SYN FLOOD ATTACK Detected No.of.Scans:512"
    ]
    alerts = json.loads(json_out.read_text())
    assert len(alerts) == len(lines)  # text log lines match the JSON array
    assert alerts[0]["kind"] == "SYN_FLOOD"
    assert alerts[0]["count"] == 512
    assert alerts[0]["affected_port"] == 80
    stdout = capsys.readouterr().out
    assert lines[0] in stdout


def test_analyze_scan_reproduces_log_line(tmp_path):
    pcap = gen(tmp_path, scan_spec_file(tmp_path))
    log = tmp_path / "alerts.log"
    assert main(["analyze", "--input", str(pcap), "--out-log", str(log)]) == 2
    assert log.read_text() == (
        "Spam/Worm Affected IP: 192.168.1.100 "
        "AttckName:FOOT PRINTING ATTACK Detected No.of.Scans:4\n"
    )


def test_analyze_truncated_file_exit_one(tmp_path, capsys):
    pcap = gen(tmp_path, flood_spec_file(tmp_path, count=10))
    data = pcap.read_bytes()
    pcap.write_bytes(data[:-7])
    assert main(["analyze", "--input", str(pcap)]) == 1
    assert "Truncated" in capsys.readouterr().err


def test_analyze_bad_magic_exit_one(tmp_path, capsys):
    junk = tmp_path / "junk.pcap"
    junk.write_bytes(b"\x00" * 64)
    assert main(["analyze", "--input", str(junk)]) == 1
    assert "BadMagic" in capsys.readouterr().err


def test_analyze_missing_file_exit_one(tmp_path, capsys):
    assert main(["analyze", "--input", str(tmp_path / "nope.pcap")]) == 1
    assert "error" in capsys.readouterr().err


def test_analyze_spool_equivalent(tmp_path, capsys):
    pcap = gen(tmp_path, flood_spec_file(tmp_path))
    direct_log = tmp_path / "direct.log"
    spool_log = tmp_path / "spooled.log"
    assert main(["analyze", "--input", str(pcap), "--out-log", str(direct_log)]) == 2
    assert main(["analyze", "--input", str(pcap), "--out-log", str(spool_log), "--spool"]) == 2
    assert direct_log.read_bytes() == spool_log.read_bytes()
    assert "corrupt spool lines: 0" in capsys.readouterr().out


def test_analyze_max_packets(tmp_path, capsys):
    pcap = gen(tmp_path, flood_spec_file(tmp_path))
    code = main(["analyze", "--input", str(pcap), "--max-packets", "100"])
    assert code == 0  # only 100 SYNs read: below threshold
    assert "packets read: 100" in capsys.readouterr().out


def test_analyze_out_fig(tmp_path):
    pcap = gen(tmp_path, flood_spec_file(tmp_path, count=50))
    fig = tmp_path / "activity.png"
    main(["analyze", "--input", str(pcap), "--out-fig", str(fig)])
    data = fig.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"


def test_config_file_and_flag_override(tmp_path):
    pcap = gen(tmp_path, flood_spec_file(tmp_path, count=50))
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"synflood": {"threshold": 10}}))
    assert main(["analyze", "--input", str(pcap), "--config", str(config)]) == 2
    code = main(
        [
            "analyze",
            "--input",
            str(pcap),
            "--config",
            str(config),
            "--synflood-threshold",
            "600",
        ]
    )
    assert code == 0  # the flag wins over the file


def test_unknown_config_key_rejected(tmp_path, capsys):
    pcap = gen(tmp_path, flood_spec_file(tmp_path, count=5))
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"sinflood": {"threshold": 10}}))
    assert main(["analyze", "--input", str(pcap), "--config", str(config)]) == 1
    assert "unknown config keys" in capsys.readouterr().err


def test_scan_threshold_flag(tmp_path):
    pcap = gen(tmp_path, scan_spec_file(tmp_path))
    assert main(["analyze", "--input", str(pcap), "--scan-threshold", "5"]) == 0
    assert main(["analyze", "--input", str(pcap), "--scan-threshold", "4"]) == 2


def test_module_entry_point(tmp_path):
    spec = scan_spec_file(tmp_path)
    out = tmp_path / "cli.pcap"
    result = subprocess.run(
        [sys.executable, "-m", "floodscan", "generate", "--spec", str(spec), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stderr
    result = subprocess.run(
        [sys.executable, "-m", "floodscan", "analyze", "--input", str(out)],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 2
    assert "FOOT PRINTING ATTACK" in result.stdout
