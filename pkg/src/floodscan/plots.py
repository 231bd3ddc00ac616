"""Trace activity figure rendered next to the text/JSON alert outputs."""

from __future__ import annotations

from collections import Counter
from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .detect import Alert, AlertKind
from .flow import FlowEvent

_ALERT_STYLE = {
    AlertKind.SYN_FLOOD: ("tab:red", "SYN flood alert"),
    AlertKind.FOOTPRINTING: ("tab:orange", "footprinting alert"),
}


def save_activity_plot(
    events: Sequence[FlowEvent],
    alerts: Sequence[Alert],
    interval_seconds: int,
    path: Union[str, Path],
) -> None:
    """Per-second event counts with alert markers and interval boundaries."""
    fig, ax = plt.subplots(figsize=(9.0, 3.4))

    if events:
        per_second = Counter(e.ts_sec for e in events)
        t0 = min(per_second)
        t1 = max(per_second)
        xs = list(range(t0, t1 + 1))
        ys = [per_second.get(x, 0) for x in xs]
        ax.plot([x - t0 for x in xs], ys, drawstyle="steps-mid", color="tab:blue", lw=1.2)
        ax.fill_between(
            [x - t0 for x in xs], ys, step="mid", alpha=0.25, color="tab:blue"
        )
        boundary = (t0 // interval_seconds + 1) * interval_seconds
        while boundary <= t1:
            ax.axvline(boundary - t0, color="0.75", lw=0.8, ls=":")
            boundary += interval_seconds
        labeled = set()
        for alert in alerts:
            color, label = _ALERT_STYLE[alert.kind]
            ax.axvline(
                alert.last_ts - t0,
                color=color,
                lw=1.4,
                label=None if alert.kind in labeled else label,
            )
            labeled.add(alert.kind)
        if labeled:
            ax.legend(loc="upper right", fontsize=8)
    else:
        ax.text(0.5, 0.5, "no TCP events", ha="center", va="center", transform=ax.transAxes)

    ax.set_xlabel("trace time (s)")
    ax.set_ylabel("TCP events / s")
    ax.set_title("trace activity")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
