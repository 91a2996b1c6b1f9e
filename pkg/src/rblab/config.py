"""Run configuration: key = value files, validation and a stable hash."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigInvalid
from .germ import GermSpec, load_germ, parse_germ_text

__all__ = ["RunConfig", "load_config", "parse_config_text", "FORMATS"]

FORMATS = ("json", "csv", "pgm")
_GERM_KEYS = {"dimension", "k", "alphas", "l", "term"}
_TOLERANCES = ("tol_psi", "tol_sigma", "resonance", "stagnation")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    beta: float = 0.3
    theta: float = math.pi / 4
    R: float | None = None               # None: calibrate per germ
    l: int = 15
    samples: int = 1000
    horizon: int = 10_000
    basin_horizon: int = 20_000
    grid: int = 200
    pairs: int = 10_000
    tol_psi: float = 1e-8
    tol_sigma: float = 1e-8
    resonance: float = 1e-12
    stagnation: float = 1e-3
    kmax: int = 12
    degree_bound: int = 6
    format: str = "json"
    germ_file: str | None = None
    germ: GermSpec | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        for name in _TOLERANCES:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigInvalid(f"tolerance {name} must be > 0, got {v!r}")
        if not 0 < self.beta < 0.5:
            raise ConfigInvalid("beta must lie in (0, 1/2)")
        if not 0 < self.theta < math.pi / 2:
            raise ConfigInvalid("theta must lie in (0, pi/2)")
        if self.R is not None and not self.R > 0:
            raise ConfigInvalid("R must be positive")
        for name in ("samples", "horizon", "basin_horizon", "grid", "pairs", "degree_bound"):
            if getattr(self, name) < 1:
                raise ConfigInvalid(f"{name} must be >= 1")
        if self.kmax < 2:
            raise ConfigInvalid("kmax must be >= 2")
        if self.seed < 0:
            raise ConfigInvalid("seed must be >= 0")
        if self.format not in FORMATS:
            raise ConfigInvalid(f"format must be one of {FORMATS}")
        if self.grid > 4096:
            raise ConfigInvalid("grid resolution is capped at 4096")

    def with_overrides(self, **kw) -> RunConfig:
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("germ")
        d["germ_digest"] = self.germ.digest() if self.germ is not None else None
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_CASTS = {f.name: f.type for f in fields(RunConfig)}
_KEYS = {name.lower(): name for name in _CASTS}


def _cast(key: str, raw: str):
    kind = _CASTS[key]
    if raw.lower() in ("none", "auto", "") and "None" in kind:
        return None
    try:
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
    except ValueError as exc:
        raise ConfigInvalid(f"{key}: cannot parse {raw!r}") from exc
    return raw


def parse_config_text(text: str, base_dir: Path | None = None) -> RunConfig:
    """Parse ``key = value`` lines; germ keys (dimension, alphas, l, term)
    may be embedded and define the custom germ."""
    values: dict = {}
    germ_lines: list[str] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigInvalid(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in body.split("=", 1))
        key = key.lower()
        if key in _GERM_KEYS:
            germ_lines.append(body)
            if key == "l":
                values["l"] = _cast("l", val)
            continue
        if key == "germ":
            key = "germ_file"
        if key not in _KEYS or key == "germ":
            raise ConfigInvalid(f"line {lineno}: unknown key {key!r}")
        key = _KEYS[key]
        values[key] = _cast(key, val)
    germ = None
    if values.get("germ_file"):
        path = Path(values["germ_file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigInvalid(f"germ file not found: {path}")
        germ = load_germ(path)
    if germ_lines:
        if germ is not None:
            raise ConfigInvalid("give either a germ file or embedded germ keys, not both")
        germ = parse_germ_text("\n".join(germ_lines))
    return RunConfig(**values, germ=germ)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, path.parent)
