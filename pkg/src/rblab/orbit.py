"""Orbit iteration, invariance checks, tail asymptotics and the regression for c."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import DegenerateTrace, IllConditioned
from .germ import GermSpec
from .regions import BasinParams, first_exit, in_W, sample_B

__all__ = [
    "ESCAPE_RADIUS",
    "OrbitTrace",
    "iterate",
    "u_recursion",
    "InvarianceReport",
    "check_invariance",
    "AsymptoticsReport",
    "asymptotics_report",
    "w_entry_step",
    "CEstimate",
    "estimate_c",
]

ESCAPE_RADIUS = 10.0
_STATUS = {0: "completed", 1: "escaped", 2: "hit_zero"}


@dataclass
class OrbitTrace:
    points: np.ndarray          # (n+1, k)
    status: str                 # completed | escaped | hit_zero
    stop_step: int

    @cached_property
    def u_seq(self) -> np.ndarray:
        return np.prod(self.points, axis=1)

    @cached_property
    def U_seq(self) -> np.ndarray:
        u = self.u_seq
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(u != 0, 1.0 / np.where(u != 0, u, 1.0), np.inf + 0j)

    @property
    def terminated(self) -> str:
        return self.status if self.status == "completed" else f"{self.status}({self.stop_step})"

    def __len__(self) -> int:
        return self.points.shape[0]


def iterate(spec: GermSpec, p, n_max: int, escape_radius: float = ESCAPE_RADIUS) -> OrbitTrace:
    """Apply F up to n_max times, stopping on escape or on u becoming exactly 0."""
    if n_max < 0 or escape_radius <= 0:
        raise ValueError("need n_max >= 0 and escape_radius > 0")
    p = np.ascontiguousarray(p, dtype=np.complex128)
    if p.shape != (spec.k,):
        raise ValueError(f"point must have shape ({spec.k},)")
    tgt, coef, exps = spec.kernel_terms
    pts, status, stop = _kernels.trace(p, int(n_max), float(escape_radius), spec.lam, tgt, coef, exps)
    return OrbitTrace(points=np.array(pts), status=_STATUS[int(status)], stop_step=int(stop))


def u_recursion(u0: complex, n: int, k: int) -> np.ndarray:
    """u_{m+1} = u_m (1 - u_m/k)^k, the exact resonant-product law of the model."""
    out = np.empty(n + 1, dtype=np.complex128)
    out[0] = u0
    for m in range(n):
        out[m + 1] = out[m] * (1 - out[m] / k) ** k
    return out


@dataclass
class InvarianceReport:
    n_samples: int
    horizon: int
    seed: int
    params: dict
    violators: list[tuple[int, int]] = field(default_factory=list)   # (sample index, first exit)

    @property
    def violation_fraction(self) -> float:
        return len(self.violators) / self.n_samples

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "horizon": self.horizon,
            "seed": self.seed,
            "params": self.params,
            "violation_fraction": self.violation_fraction,
            "violators": [{"index": i, "first_exit": s} for i, s in self.violators],
        }


def check_invariance(spec: GermSpec, bp: BasinParams, n_samples: int, horizon: int,
                     seed: int) -> InvarianceReport:
    P = sample_B(bp, n_samples, seed, spec.k)
    exits = first_exit(spec, bp, P, horizon)
    bad = np.flatnonzero(exits >= 0)
    return InvarianceReport(
        n_samples=n_samples,
        horizon=horizon,
        seed=seed,
        params={"beta": bp.beta, "R": bp.R, "theta": bp.theta},
        violators=[(int(i), int(exits[i])) for i in bad],
    )


@dataclass
class AsymptoticsReport:
    n: np.ndarray                   # common index range [n_min, n_max]
    n_u_n: np.ndarray
    scaled_moduli: np.ndarray       # (len(n), k): n^{1/k} |z_{j,n}|
    ratio_bounds: dict[tuple[int, int], tuple[float, float]]
    arg_u: np.ndarray

    @property
    def n_min(self) -> int:
        return int(self.n[0])

    @property
    def n_max(self) -> int:
        return int(self.n[-1])

    @property
    def sup_deviation(self) -> float:
        return float(np.max(np.abs(self.n_u_n - 1)))

    @property
    def sup_arg(self) -> float:
        return float(np.max(np.abs(self.arg_u)))

    def band_ratios(self) -> np.ndarray:
        """max/min of n^{1/k}|z_{j,n}| over the tail, per coordinate."""
        return self.scaled_moduli.max(axis=0) / self.scaled_moduli.min(axis=0)

    def to_dict(self) -> dict:
        return {
            "n_min": self.n_min,
            "n_max": self.n_max,
            "sup_abs_n_u_n_minus_1": self.sup_deviation,
            "sup_abs_arg_u": self.sup_arg,
            "band_ratios": self.band_ratios().tolist(),
            "ratio_bounds": {f"{i + 1}/{j + 1}": list(b) for (i, j), b in self.ratio_bounds.items()},
        }


def asymptotics_report(trace: OrbitTrace, tail_start: int, tail_end: int | None = None) -> AsymptoticsReport:
    if trace.status != "completed":
        raise ValueError(f"trace not completed: {trace.terminated}")
    last = len(trace) - 1 if tail_end is None else tail_end
    if not 0 <= tail_start < last + 1 <= len(trace):
        raise ValueError("tail window outside the trace")
    sl = slice(tail_start, last + 1)
    u = trace.u_seq[sl]
    if np.any(u == 0):
        raise DegenerateTrace("u_n = 0 inside the tail window")
    n = np.arange(tail_start, last + 1)
    pts = trace.points[sl]
    k = pts.shape[1]
    mod = np.abs(pts)
    ratio_bounds = {}
    for i in range(k):
        for j in range(i + 1, k):
            r = mod[:, i] / mod[:, j]
            ratio_bounds[(i, j)] = (float(r.min()), float(r.max()))
    return AsymptoticsReport(
        n=n,
        n_u_n=n * u,
        scaled_moduli=(np.maximum(n, 1) ** (1.0 / k))[:, None] * mod,
        ratio_bounds=ratio_bounds,
        arg_u=np.angle(u),
    )


def w_entry_step(trace: OrbitTrace, gamma: float) -> int | None:
    """First n such that every later point of the trace lies in W(gamma)."""
    inside = np.asarray(in_W(trace.points, gamma))
    if not inside[-1]:
        return None
    outside = np.flatnonzero(~inside)
    return 0 if outside.size == 0 else int(outside[-1] + 1)


@dataclass
class CEstimate:
    c: float
    imag: float
    width: float          # 95% bootstrap interval width for the real part
    n_obs: int
    flagged: bool         # |imaginary part| above the diagnostic threshold
    coefficients: tuple[complex, ...] = ()

    def to_dict(self) -> dict:
        return {"c": self.c, "imag": self.imag, "width": self.width, "n_obs": self.n_obs,
                "flagged_imaginary": self.flagged}


def estimate_c(spec: GermSpec, traces: Sequence[OrbitTrace], tail_start: int,
               quadratic: bool = False, n_boot: int = 200, seed: int = 0,
               imag_flag: float = 1e-3) -> CEstimate:
    """Pooled least squares of U_{n+1} - U_n - 1 on 1/U_n over the tails.

    With ``quadratic`` an extra 1/U_n^2 column absorbs the next-order term.
    The width comes from a bootstrap over blocks (whole traces, or 20
    segments when a single trace is given).
    """
    blocks: list[tuple[np.ndarray, np.ndarray]] = []
    for tr in traces:
        if tr.status != "completed" or len(tr) - 1 - tail_start < 100:
            continue
        U = tr.U_seq[tail_start:]
        if not np.all(np.isfinite(U)):
            raise DegenerateTrace("u_n = 0 inside the regression tail")
        y = U[1:] - U[:-1] - 1.0
        x = 1.0 / U[:-1]
        X = np.stack([x, x * x], axis=1) if quadratic else x[:, None]
        blocks.append((X, y))
    if not blocks:
        raise ValueError("estimate_c needs a completed trace with tail length >= 100")
    if len(blocks) == 1:
        X, y = blocks[0]
        blocks = list(zip(np.array_split(X, 20), np.array_split(y, 20)))
    gram = np.array([X.conj().T @ X for X, _ in blocks])
    rhs = np.array([X.conj().T @ y for X, y in blocks])
    n_obs = int(sum(len(y) for _, y in blocks))
    if np.sqrt(gram[:, 0, 0].real.sum()) < 1e-14:
        raise IllConditioned("regressor norm below 1e-14")
    coef = np.linalg.solve(gram.sum(axis=0), rhs.sum(axis=0))
    rng = np.random.default_rng(seed)
    boot = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, len(blocks), len(blocks))
        boot[b] = np.linalg.solve(gram[idx].sum(axis=0), rhs[idx].sum(axis=0))[0].real
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return CEstimate(
        c=float(coef[0].real),
        imag=float(coef[0].imag),
        width=float(hi - lo),
        n_obs=n_obs,
        flagged=abs(coef[0].imag) > imag_flag,
        coefficients=tuple(complex(v) for v in coef),
    )
