"""floodscan: SYN-flood and footprinting detection over pcap traces.

Pipeline: pcap capture source -> flow-event extraction -> optional
spool -> partial-completion-filter detectors -> alert log, plus a
synthetic traffic generator whose manifests make every detection claim
checkable offline.
"""

from .detect import (
    Alert,
    AlertKind,
    DetectionEngine,
    DetectorConfig,
    IntervalSummary,
    run_detection,
)
from .flow import EventClass, FlowEvent, classify, extract, to_record
from .gen import (
    InvalidSpec,
    Manifest,
    ScenarioKind,
    ScenarioSpec,
    gen_benign,
    gen_mixed,
    gen_port_scan,
    gen_syn_flood,
    generate,
)
from .pcap import (
    BadMagic,
    CaptureSource,
    MalformedFrame,
    PacketRecord,
    PcapError,
    PcapReader,
    ReadStats,
    TcpFlags,
    Truncated,
    UnsupportedLinkType,
    decode_frame,
    read_pcap,
    write_pcap,
)
from .pcf import (
    InvalidConfig,
    Pcf,
    PcfConfig,
    collision_free_seeds,
    default_seeds,
    dest_key,
    pair_key,
)
from .spool import CorruptLine, Spool

__version__ = "0.1.0"

__all__ = [
    "Alert",
    "AlertKind",
    "BadMagic",
    "CaptureSource",
    "CorruptLine",
    "DetectionEngine",
    "DetectorConfig",
    "EventClass",
    "FlowEvent",
    "IntervalSummary",
    "InvalidConfig",
    "InvalidSpec",
    "MalformedFrame",
    "Manifest",
    "PacketRecord",
    "Pcf",
    "PcfConfig",
    "PcapError",
    "PcapReader",
    "ReadStats",
    "ScenarioKind",
    "ScenarioSpec",
    "Spool",
    "TcpFlags",
    "Truncated",
    "UnsupportedLinkType",
    "classify",
    "collision_free_seeds",
    "decode_frame",
    "default_seeds",
    "dest_key",
    "extract",
    "gen_benign",
    "gen_mixed",
    "gen_port_scan",
    "gen_syn_flood",
    "generate",
    "pair_key",
    "read_pcap",
    "run_detection",
    "to_record",
    "write_pcap",
]
