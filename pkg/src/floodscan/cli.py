"""Command line front end: generate labeled traffic, analyze traces.

Exit codes: 0 clean run with no alerts, 2 when alerts were raised,
1 on input or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .detect import Alert, AlertKind, DetectionEngine, DetectorConfig
from .flow import extract, to_record
from .gen import InvalidSpec, ScenarioSpec, generate
from .pcap import PcapError, PcapReader, write_pcap
from .spool import Spool

ATTACK_NAMES = {
    AlertKind.SYN_FLOOD: "SYN FLOOD ATTACK",
    AlertKind.FOOTPRINTING: "FOOT PRINTING ATTACK",
}


def format_alert(alert: Alert) -> str:
    """Render one alert as the fixed log line; byte-stable."""
    return (
        f"Spam/Worm Affected IP: {alert.affected_ip} "
        f"AttckName:{ATTACK_NAMES[alert.kind]} Detected No.of.Scans:{alert.count}"
    )


@dataclass
class RunConfig:
    input: Path
    out_log: Optional[Path] = None
    out_json: Optional[Path] = None
    out_fig: Optional[Path] = None
    spool: bool = False
    max_packets: Optional[int] = None
    detector: DetectorConfig = field(default_factory=DetectorConfig)


def load_detector_config(
    path: Optional[Path],
    interval_seconds: Optional[int] = None,
    synflood_threshold: Optional[int] = None,
    scan_threshold: Optional[int] = None,
) -> DetectorConfig:
    """Config file plus flag overrides (flags win)."""
    data: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    if interval_seconds is not None:
        data["interval_seconds"] = interval_seconds
    if synflood_threshold is not None:
        data.setdefault("synflood", {})["threshold"] = synflood_threshold
    if scan_threshold is not None:
        data.setdefault("footprint", {})["scan_threshold"] = scan_threshold
    return DetectorConfig.from_dict(data)


def run_analyze(config: RunConfig) -> int:
    with PcapReader(config.input, max_packets=config.max_packets) as reader:
        events = [extract(record) for record in reader]
        stats = reader.stats

    corrupt = 0
    if config.spool:
        with tempfile.TemporaryDirectory(prefix="floodscan-spool-") as tmp:
            spool = Spool(Path(tmp) / "events.jsonl")
            for event in events:
                spool.append(event)
            events = spool.drain()
            corrupt = len(spool.corrupt_lines)

    engine = DetectionEngine(config.detector)
    engine.skipped = stats.skipped
    engine.corrupt = corrupt
    for event in events:
        engine.process(event)
    engine.finish()
    alerts = engine.alerts

    lines = [format_alert(alert) for alert in alerts]
    for line in lines:
        print(line)
    text_log = "".join(line + "\n" for line in lines)
    if config.out_log is not None:
        config.out_log.write_text(text_log, encoding="utf-8")
    if config.out_json is not None:
        payload = json.dumps([a.to_dict() for a in alerts], indent=2, sort_keys=True)
        config.out_json.write_text(payload + "\n", encoding="utf-8")
    if config.out_fig is not None:
        from . import plots  # matplotlib import deferred to the report path

        plots.save_activity_plot(
            events, alerts, config.detector.interval_seconds, config.out_fig
        )

    print(f"packets read: {stats.packets}")
    print(f"packets skipped: {stats.skipped}")
    if stats.malformed:
        print(f"malformed frames: {stats.malformed}")
    print(f"events: {len(events)}")
    if config.spool:
        print(f"corrupt spool lines: {corrupt}")
    print(f"alerts: {len(alerts)}")
    return 2 if alerts else 0


def run_generate(spec_path: Path, out_path: Path) -> int:
    with open(spec_path, "r", encoding="utf-8") as fh:
        spec = ScenarioSpec.from_dict(json.load(fh))
    events, manifest = generate(spec)
    write_pcap((to_record(event) for event in events), out_path)
    manifest_path = out_path.with_suffix(".manifest.json")
    manifest_path.write_text(manifest.to_json(), encoding="utf-8")
    print(f"wrote {len(events)} packets to {out_path}")
    print(f"wrote manifest to {manifest_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floodscan",
        description="SYN-flood and footprinting detection over pcap traces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="run detection over a pcap trace")
    analyze.add_argument("--input", required=True, type=Path, help="pcap file to analyze")
    analyze.add_argument("--config", type=Path, help="detector config JSON")
    analyze.add_argument("--out-log", type=Path, help="write alert lines here")
    analyze.add_argument("--out-json", type=Path, help="write the alert array here")
    analyze.add_argument("--out-fig", type=Path, help="render an activity figure here")
    analyze.add_argument(
        "--spool", action="store_true", help="persist events through a drain-once spool file"
    )
    analyze.add_argument("--max-packets", type=int, help="stop after this many packet records")
    analyze.add_argument("--interval-seconds", type=int, help="override the reset interval")
    analyze.add_argument("--synflood-threshold", type=int, help="override the flood threshold")
    analyze.add_argument("--scan-threshold", type=int, help="override the scan threshold")

    gen = sub.add_parser("generate", help="fabricate labeled traffic as a pcap + manifest")
    gen.add_argument("--spec", required=True, type=Path, help="scenario spec JSON")
    gen.add_argument("--out", required=True, type=Path, help="pcap output path")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            detector = load_detector_config(
                args.config,
                interval_seconds=args.interval_seconds,
                synflood_threshold=args.synflood_threshold,
                scan_threshold=args.scan_threshold,
            )
            return run_analyze(
                RunConfig(
                    input=args.input,
                    out_log=args.out_log,
                    out_json=args.out_json,
                    out_fig=args.out_fig,
                    spool=args.spool,
                    max_packets=args.max_packets,
                    detector=detector,
                )
            )
        return run_generate(args.spec, args.out)
    except PcapError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (InvalidSpec, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
