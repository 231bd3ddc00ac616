"""Partial completion filter: parallel stages of signed counter buckets.

Each stage hashes a key into its own bucket row with its own seed; one
update lands once per stage. The readout for a key is the minimum
counter across stages. Collisions can only inflate that minimum while
every key's true net count is non-negative, which makes the filter a
one-sided overestimator for half-open connection counting.

Counters are plain Python ints, so FIN-heavy collisions may drive them
negative without wrapping.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .pcap import ip_to_bytes

_MASK64 = (1 << 64) - 1

DEFAULT_STAGES = 3
DEFAULT_BUCKETS = 1024
DEFAULT_THRESHOLD = 512


class InvalidConfig(ValueError):
    """Filter geometry or seeding is unusable."""


def default_seeds(stages: int) -> tuple[int, ...]:
    """Fixed per-stage seeds (golden-ratio multiples); deterministic runs."""
    return tuple(((i + 1) * 0x9E3779B97F4A7C15) & _MASK64 for i in range(stages))


@dataclass(frozen=True)
class PcfConfig:
    stages: int = DEFAULT_STAGES
    buckets: int = DEFAULT_BUCKETS
    threshold: int = DEFAULT_THRESHOLD
    seeds: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        if self.stages < 1:
            raise InvalidConfig(f"stages must be >= 1, got {self.stages}")
        if self.buckets < 1:
            raise InvalidConfig(f"buckets must be >= 1, got {self.buckets}")
        if self.threshold < 1:
            raise InvalidConfig(f"threshold must be >= 1, got {self.threshold}")
        if self.seeds is None:
            object.__setattr__(self, "seeds", default_seeds(self.stages))
        else:
            seeds = tuple(int(s) for s in self.seeds)
            object.__setattr__(self, "seeds", seeds)
            if len(seeds) != self.stages:
                raise InvalidConfig(f"{len(seeds)} seeds for {self.stages} stages")
            if any(not 0 <= s <= _MASK64 for s in seeds):
                raise InvalidConfig("seeds must fit in 64 bits")
            if self.stages > 1 and len(set(seeds)) != len(seeds):
                raise InvalidConfig("seeds must be pairwise distinct")


def dest_key(ip: str, port: int) -> bytes:
    """Key for SYN-flood counting: same destination IP, same port."""
    return b"\x01" + ip_to_bytes(ip) + port.to_bytes(2, "big")


def pair_key(sip: str, dip: str) -> bytes:
    """Key for footprinting: one prober against one target host."""
    return b"\x02" + ip_to_bytes(sip) + ip_to_bytes(dip)


def _stage_hash(seed: int, key: bytes) -> int:
    digest = hashlib.blake2b(key, digest_size=8, salt=seed.to_bytes(8, "little")).digest()
    return int.from_bytes(digest, "little")


class Pcf:
    """Single-writer sketch; distinct instances may run concurrently."""

    def __init__(self, config: Optional[PcfConfig] = None):
        self.config = config or PcfConfig()
        self._counters = [[0] * self.config.buckets for _ in range(self.config.stages)]

    def _bucket(self, stage: int, key: bytes) -> int:
        return _stage_hash(self.config.seeds[stage], key) % self.config.buckets

    def update(self, key: bytes, delta: int) -> None:
        if delta not in (1, -1):
            raise ValueError(f"delta must be +1 or -1, got {delta}")
        for stage, row in enumerate(self._counters):
            row[self._bucket(stage, key)] += delta

    def estimate(self, key: bytes) -> int:
        """Minimum-over-stages counter for this key; read-only."""
        return min(
            row[self._bucket(stage, key)] for stage, row in enumerate(self._counters)
        )

    def exceeds(self, key: bytes) -> bool:
        return self.estimate(key) >= self.config.threshold

    def reset(self) -> None:
        for row in self._counters:
            for i in range(len(row)):
                row[i] = 0

    def stage_totals(self) -> list[int]:
        """Per-stage counter sums; each equals the net of applied deltas."""
        return [sum(row) for row in self._counters]


def collision_free_seeds(
    keys: Iterable[bytes],
    buckets: int = DEFAULT_BUCKETS,
    stages: int = DEFAULT_STAGES,
    start_seed: int = 1,
) -> tuple[int, ...]:
    """Search seeds under which every stage hashes the keys injectively.

    With such seeds the filter is exact over that key set: the estimate
    equals the true net count for every key. Used by tests to separate
    sketch error from counting logic.
    """
    key_list = list(dict.fromkeys(keys))
    if len(key_list) > buckets:
        raise InvalidConfig(f"{len(key_list)} keys cannot map injectively into {buckets} buckets")
    found: list[int] = []
    seed = start_seed
    while len(found) < stages:
        if seed > start_seed + 1_000_000:
            raise InvalidConfig("no collision-free seed found in search budget")
        used = {_stage_hash(seed, k) % buckets for k in key_list}
        if len(used) == len(key_list):
            found.append(seed)
        seed += 1
    return tuple(found)
