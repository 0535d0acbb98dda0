"""Flat run configuration: built-in defaults < config file < command-line flags.

Config files are ``key = value`` lines; ``#`` starts a comment.
"""

from __future__ import annotations

import os
from dataclasses import MISSING, asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from .association import AssociationConfig, ConfidenceBands
from .geometry import SimilarityConfig
from .motion import MotionConfig


@dataclass(frozen=True)
class RunConfig:
    # association
    match_threshold: float = 0.25
    stage_decrement: float = 0.08
    min_hits: int = 3
    max_age: int = 30
    threshold_high: float = 0.25
    threshold_low: float = 0.1
    # similarity
    expansion_scale: float = 2.0
    use_expansion: bool = True
    use_distance_penalty: bool = True
    # motion
    ema_alpha: float = 0.8
    direction_cost_weight: float = 0.2
    use_ema: bool = True
    delta_t: int = 3
    std_weight_position: float = 1.0 / 20
    std_weight_velocity: float = 1.0 / 160
    # slicing
    tile: int = 1280
    overlap: float = 0.2
    min_visibility: float = 0.5
    # evaluation
    s_norm: Optional[float] = None
    # paths
    dets: Optional[str] = None
    out: Optional[str] = None
    gt: Optional[str] = None
    pred: Optional[str] = None
    images: Optional[str] = None
    ann: Optional[str] = None

    def association(self) -> AssociationConfig:
        return AssociationConfig(
            match_threshold=self.match_threshold,
            stage_decrement=self.stage_decrement,
            min_hits=self.min_hits,
            max_age=self.max_age,
            bands=ConfidenceBands(self.threshold_high, self.threshold_low),
            sim=self.similarity(),
            motion=MotionConfig(
                ema_alpha=self.ema_alpha,
                direction_cost_weight=self.direction_cost_weight,
                use_ema=self.use_ema,
                delta_t=self.delta_t,
                std_weight_position=self.std_weight_position,
                std_weight_velocity=self.std_weight_velocity,
            ),
        )

    def similarity(self) -> SimilarityConfig:
        return SimilarityConfig(self.expansion_scale, self.use_expansion, self.use_distance_penalty)

    def validate(self) -> "RunConfig":
        self.association()
        if self.tile <= 0:
            raise ValueError(f"tile must be positive, got {self.tile}")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError(f"overlap must be in [0, 1), got {self.overlap}")
        if not 0.0 < self.min_visibility <= 1.0:
            raise ValueError(f"min_visibility must be in (0, 1], got {self.min_visibility}")
        if self.s_norm is not None and not self.s_norm > 0:
            raise ValueError(f"s_norm must be positive, got {self.s_norm}")
        return self

    def as_dict(self) -> dict:
        return asdict(self)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def coerce(key: str, raw, types=None):
    """Convert a config-file string to the type declared for ``key``."""
    types = _TYPES if types is None else types
    if key not in types:
        raise ValueError(f"unknown config key {key!r}")
    if not isinstance(raw, str):
        return raw
    kind = str(types[key])
    text = raw.strip()
    if "Optional" in kind and text.lower() in ("", "none", "null"):
        return None
    if "bool" in kind:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if "int" in kind:
            return int(text)
        if "float" in kind:
            return float(text)
    except ValueError:
        raise ValueError(f"{key}: expected {kind.replace('Optional', '').strip('[]')}, got {raw!r}") from None
    return text


def read_kv_file(path, types=None) -> dict:
    """Parse a flat ``key = value`` file; unknown keys are rejected."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        try:
            out[key] = coerce(key, value, types)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def build_config(file_values: dict | None = None, flag_values: dict | None = None) -> RunConfig:
    merged = {}
    for layer in (file_values or {}, flag_values or {}):
        for key, value in layer.items():
            merged[key] = coerce(key, value)
    return RunConfig(**merged).validate()


def thread_count() -> int:
    """Worker cap from ``SMOTKIT_THREADS`` (defaults to the CPU count)."""
    raw = os.environ.get("SMOTKIT_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
