"""Global basin: classification by B-hitting, the ratio oracle, raster slices,
the extended coordinates g_1, g_j and the fibration transition functions.

For p in the basin with hitting step h (F^h p in B):

    g_1(p) = psi(F^h p) - h
    g_j(p) = Lambda_j^{-h} exp(e_j sum_{m<h} 1/(g_1(p) + m)) sigma_j(F^h p)

which is independent of h and satisfies the same functional equations as
psi and sigma_j.  In the planar case Lambda_2^{-1} = lambda and e_2 = 1/2.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, NotInBasin
from .fatou import DEFAULT_TOL, _multiplier_phase, _unit, default_c, fatou_batch
from .germ import GermSpec
from .orbit import ESCAPE_RADIUS
from .regions import BasinParams, SectorParams

__all__ = [
    "BasinVerdict",
    "classify",
    "classify_batch",
    "classify_by_ratio",
    "classify_by_ratio_batch",
    "SliceSpec",
    "ClassificationGrid",
    "raster_slice",
    "GlobalCoordinates",
    "global_coordinates",
    "g1",
    "g_j",
    "transition",
    "two_step_multiplier",
    "T_map",
    "t_iteration",
    "sample_overlap",
]

DEFAULT_HORIZON = 100_000
RATIO_DECAY = 0.05
RATIO_BAND = 1.5
RATIO_CAP = 1e4
RATIO_WINDOW = 64

_REASONS = {
    _kernels.AXIS: "axis",
    _kernels.ESCAPED: "escaped",
    _kernels.RATIO_VIOLATION: "ratio_violation",
}
PGM_LEVELS = {"not_in_basin": 0, "undetermined": 128, "in_basin": 255}


@dataclass(frozen=True)
class BasinVerdict:
    status: str                     # in_basin | not_in_basin | undetermined
    step: int                       # hitting step, or step at which the verdict was reached
    reason: str | None = None       # escaped | axis | ratio_violation | horizon_exhausted

    @classmethod
    def from_code(cls, code: int, step: int) -> BasinVerdict:
        if code == _kernels.IN_BASIN:
            return cls("in_basin", step)
        if code == _kernels.UNDETERMINED:
            return cls("undetermined", step, "horizon_exhausted")
        return cls("not_in_basin", step, _REASONS[code])

    @property
    def hit_step(self) -> int | None:
        return self.step if self.status == "in_basin" else None

    @property
    def decided(self) -> bool:
        return self.status != "undetermined"


def _status_codes(codes: np.ndarray) -> np.ndarray:
    """Collapse kernel codes to 0 not_in_basin, 1 undetermined, 2 in_basin."""
    out = np.zeros(codes.shape, dtype=np.int8)
    out[codes == _kernels.UNDETERMINED] = 1
    out[codes == _kernels.IN_BASIN] = 2
    return out


def classify_batch(spec: GermSpec, P, bp: BasinParams, n_max: int = DEFAULT_HORIZON,
                   escape_radius: float = ESCAPE_RADIUS) -> tuple[np.ndarray, np.ndarray]:
    """Kernel codes and steps for every row of P (first hit of B)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    P = np.ascontiguousarray(np.atleast_2d(P), dtype=np.complex128)
    tgt, coef, exps = spec.kernel_terms
    return _kernels.classify_hits(P, int(n_max), float(escape_radius), float(bp.beta),
                                  float(bp.R), bp.sector.slope, spec.lam, tgt, coef, exps)


def classify(spec: GermSpec, p, bp: BasinParams, n_max: int = DEFAULT_HORIZON) -> BasinVerdict:
    codes, steps = classify_batch(spec, np.asarray(p)[None, :], bp, n_max)
    return BasinVerdict.from_code(int(codes[0]), int(steps[0]))


def classify_by_ratio_batch(spec: GermSpec, P, n_max: int = DEFAULT_HORIZON,
                            ratio_window: int = RATIO_WINDOW, decay: float = RATIO_DECAY,
                            band: float = RATIO_BAND, cap: float = RATIO_CAP,
                            escape_radius: float = ESCAPE_RADIUS) -> tuple[np.ndarray, np.ndarray]:
    if n_max < 1 or ratio_window < 1:
        raise ValueError("n_max and ratio_window must be >= 1")
    if not (decay > 0 and band >= 1 and cap >= band):
        raise ValueError("need decay > 0 and 1 <= band <= cap")
    P = np.ascontiguousarray(np.atleast_2d(P), dtype=np.complex128)
    tgt, coef, exps = spec.kernel_terms
    return _kernels.classify_ratio(P, int(n_max), float(escape_radius), float(decay),
                                   int(ratio_window), float(band), float(cap),
                                   spec.lam, tgt, coef, exps)


def classify_by_ratio(spec: GermSpec, p, n_max: int = DEFAULT_HORIZON,
                      ratio_window: int = RATIO_WINDOW, **kw) -> BasinVerdict:
    """Independent oracle: decay to 0 with comparable coordinate moduli."""
    codes, steps = classify_by_ratio_batch(spec, np.asarray(p)[None, :], n_max, ratio_window, **kw)
    return BasinVerdict.from_code(int(codes[0]), int(steps[0]))


# raster slices --------------------------------------------------------------

@dataclass(frozen=True)
class SliceSpec:
    """Affine real 2-plane p = origin + s e1 + t e2 with s, t in [-extent, extent)."""
    origin: tuple[complex, ...]
    e1: tuple[complex, ...]
    e2: tuple[complex, ...]
    extent: float = 0.9

    def __post_init__(self) -> None:
        if not (len(self.origin) == len(self.e1) == len(self.e2)):
            raise ValueError("origin and directions must have equal length")
        if not self.extent > 0:
            raise ValueError("extent must be positive")

    @property
    def k(self) -> int:
        return len(self.origin)

    @classmethod
    def real(cls, k: int = 2, extent: float = 0.9) -> SliceSpec:
        """(s, t, ..., t): contains both an axis line s = 0 and t = 0."""
        e1 = tuple(complex(j == 0) for j in range(k))
        e2 = tuple(complex(j > 0) for j in range(k))
        return cls((0j,) * k, e1, e2, extent)

    @classmethod
    def conjugate(cls, extent: float = 0.9) -> SliceSpec:
        """The planar slice w = conj(z), on which u = |z|^2."""
        return cls((0j, 0j), (1 + 0j, 1 + 0j), (1j, -1j), extent)

    @classmethod
    def parse(cls, text: str, k: int, extent: float = 0.9) -> SliceSpec:
        """'real', 'conj', or 'o=a,b;e1=c,d;e2=e,f' with Python complex literals."""
        text = text.strip()
        if text == "real":
            return cls.real(k, extent)
        if text == "conj":
            if k != 2:
                raise ValueError("the conj slice is planar")
            return cls.conjugate(extent)
        parts = {}
        for item in text.split(";"):
            key, _, val = item.partition("=")
            parts[key.strip()] = tuple(complex(v.strip().replace(" ", "")) for v in val.split(","))
        try:
            return cls(parts["o"], parts["e1"], parts["e2"], extent)
        except KeyError as exc:
            raise ValueError(f"slice needs o, e1, e2: {text!r}") from exc

    def grid(self, resolution: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(s, t, points) with points[row, col] at s[col], t[row]; row 0 is the largest t."""
        a = self.extent
        # exact zero at the middle column so axis lines are hit exactly
        s = a * (2 * np.arange(resolution) - resolution) / resolution
        t = s[::-1].copy()
        o, e1, e2 = (np.array(v, dtype=np.complex128) for v in (self.origin, self.e1, self.e2))
        pts = o + s[None, :, None] * e1 + t[:, None, None] * e2
        return s, t, pts


@dataclass
class ClassificationGrid:
    slice: SliceSpec
    s: np.ndarray
    t: np.ndarray
    codes: np.ndarray          # kernel codes, shape (res, res)
    steps: np.ndarray
    axis: np.ndarray = field(repr=False)

    @property
    def status(self) -> np.ndarray:
        return _status_codes(self.codes)

    def counts(self) -> dict[str, int]:
        st = self.status
        return {
            "in_basin": int(np.count_nonzero(st == 2)),
            "not_in_basin": int(np.count_nonzero(st == 0)),
            "undetermined": int(np.count_nonzero(st == 1)),
            "axis": int(np.count_nonzero(self.codes == _kernels.AXIS)),
            "escaped": int(np.count_nonzero(self.codes == _kernels.ESCAPED)),
            "ratio_violation": int(np.count_nonzero(self.codes == _kernels.RATIO_VIOLATION)),
        }

    def pgm_bytes(self) -> bytes:
        lut = np.array([PGM_LEVELS["not_in_basin"], PGM_LEVELS["undetermined"],
                        PGM_LEVELS["in_basin"]], dtype=np.uint8)
        img = lut[self.status]
        h, w = img.shape
        return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()

    def write_pgm(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.pgm_bytes())


def raster_slice(spec: GermSpec, sl: SliceSpec, bp: BasinParams, resolution: int = 200,
                 n_max: int = DEFAULT_HORIZON, oracle: str = "hits",
                 **ratio_kw) -> ClassificationGrid:
    """Classify every cell of a slice; ``oracle`` is 'hits' or 'ratio'."""
    if not 1 <= resolution <= 4096:
        raise ValueError("resolution must lie in [1, 4096]")
    if sl.k != spec.k:
        raise ValueError("slice dimension does not match the germ")
    s, t, pts = sl.grid(resolution)
    flat = pts.reshape(-1, spec.k)
    if oracle == "hits":
        codes, steps = classify_batch(spec, flat, bp, n_max)
    elif oracle == "ratio":
        codes, steps = classify_by_ratio_batch(spec, flat, n_max, **ratio_kw)
    else:
        raise ValueError(f"unknown oracle {oracle!r}")
    axis = np.any(flat == 0, axis=1).reshape(resolution, resolution)
    return ClassificationGrid(sl, s, t, codes.reshape(resolution, resolution),
                              steps.reshape(resolution, resolution), axis)


# global coordinates ------------------------------------------------------------

@dataclass
class GlobalCoordinates:
    g1: np.ndarray              # (N,)
    g: np.ndarray               # (N, k-1): g_2 .. g_k
    hit_step: np.ndarray
    h_gap: np.ndarray           # max |value(h) - value(h+1)| over all coordinates
    converged: np.ndarray

    @property
    def in_domain(self) -> np.ndarray:
        """Rows with Re g_1 > 0, where the g_j formula is asserted."""
        return self.g1.real > 0

    @property
    def images(self) -> np.ndarray:
        return np.column_stack([self.g1, self.g])


def _harmonic(z: np.ndarray, h: np.ndarray) -> np.ndarray:
    """sum_{m<h} 1/(z+m) per row."""
    out = np.zeros(z.shape, dtype=np.complex128)
    for i in np.flatnonzero(h > 0):
        out[i] = np.sum(1.0 / (z[i] + np.arange(h[i])))
    return out


def _coords_at(spec: GermSpec, P: np.ndarray, h: np.ndarray, c: float, tol: float):
    Ph = _kernels.advance(P, h, spec.lam, *spec.kernel_terms)
    b = fatou_batch(spec, Ph, c, tol)
    G1 = b.psi - h
    k = spec.k
    G = np.empty((P.shape[0], k - 1), dtype=np.complex128)
    S = _harmonic(G1, h)
    for a, j in enumerate(range(1, k)):
        num, den = _multiplier_phase(spec, j)
        twist = np.array([_unit(den - num, den, int(n)) for n in h])
        G[:, a] = twist * np.exp((k - j) / k * S) * b.sigma[:, a]
    return G1, G, b.converged


def global_coordinates(spec: GermSpec, P, bp: BasinParams, tol: float = DEFAULT_TOL,
                       n_max: int = DEFAULT_HORIZON, c: float | None = None,
                       check_h: bool = True) -> GlobalCoordinates:
    """g_1 and g_2..g_k for points of the basin; raises NotInBasin otherwise.

    g_j is evaluated on every row; rows outside ``in_domain`` (Re g_1 <= 0)
    are returned as computed but carry no guarantee.
    """
    P = np.ascontiguousarray(np.atleast_2d(P), dtype=np.complex128)
    c = default_c(spec) if c is None else c
    codes, steps = classify_batch(spec, P, bp, n_max)
    bad = np.flatnonzero(codes != _kernels.IN_BASIN)
    if bad.size:
        v = BasinVerdict.from_code(int(codes[bad[0]]), int(steps[bad[0]]))
        raise NotInBasin(f"{bad.size} point(s) not classified in_basin, first row {bad[0]}: {v}")
    h = steps.astype(np.int64)
    G1, G, conv = _coords_at(spec, P, h, c, tol)
    gap = np.zeros(P.shape[0])
    if check_h:
        G1b, Gb, convb = _coords_at(spec, P, h + 1, c, tol)
        gap = np.maximum(np.abs(G1b - G1), np.max(np.abs(Gb - G), axis=1))
        conv = conv & convb
    return GlobalCoordinates(G1, G, h, gap, conv)


def g1(spec: GermSpec, p, bp: BasinParams, tol: float = DEFAULT_TOL,
       n_max: int = DEFAULT_HORIZON) -> complex:
    gc = global_coordinates(spec, np.asarray(p)[None, :], bp, tol, n_max, check_h=False)
    return complex(gc.g1[0])


def g_j(spec: GermSpec, p, bp: BasinParams, j: int, tol: float = DEFAULT_TOL,
        n_max: int = DEFAULT_HORIZON) -> complex:
    """g_j for 2 <= j <= k (1-based)."""
    if not 2 <= j <= spec.k:
        raise ValueError("need 2 <= j <= k")
    gc = global_coordinates(spec, np.asarray(p)[None, :], bp, tol, n_max, check_h=False)
    if not gc.in_domain[0]:
        raise DomainError(f"Re g_1 = {gc.g1[0].real:.6g} <= 0")
    return complex(gc.g[0, j - 2])


# fibration ---------------------------------------------------------------------

def transition(zeta: complex, n: int, lam: complex, exponent: float = 0.5) -> complex:
    """Chart change multiplier lam exp(exponent/(zeta+n)) between H_n and H_{n+1}."""
    if n < 0:
        raise ValueError("chart index must be >= 0")
    z = zeta + n
    if z == 0:
        raise DomainError(f"pole of the transition function at zeta = {-n}")
    return lam * cmath.exp(exponent / z)


def T_map(zeta: complex, xi: complex, lam: complex, exponent: float = 0.5) -> tuple[complex, complex]:
    """The model map (zeta + 1, conj(lam) exp(-exponent/zeta) xi)."""
    if zeta == 0:
        raise DomainError("T is singular at zeta = 0")
    return zeta + 1, lam.conjugate() * cmath.exp(-exponent / zeta) * xi


def two_step_multiplier(zeta: complex, n: int, lam: complex, exponent: float = 0.5) -> tuple[complex, complex]:
    """(t_n t_{n+1}, direct) where direct is xi / (T^2 applied in chart n).

    The two agree up to rounding: the chart change from H_{n+2} to H_n is
    undone by two steps of the model map.
    """
    product = transition(zeta, n, lam, exponent) * transition(zeta, n + 1, lam, exponent)
    z, x = T_map(zeta + n, 1.0 + 0j, lam, exponent)
    z, x = T_map(z, x, lam, exponent)
    return product, 1.0 / x


def t_iteration(zeta0: complex, xi0: complex, lam: complex, n: int,
                exponent: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Orbit (zeta_m, xi_m), m = 0..n, of the model map."""
    zeta = zeta0 + np.arange(n + 1)
    if np.any(zeta[:-1] == 0):
        raise DomainError("orbit passes through the pole zeta = 0")
    steps = np.exp(-exponent / zeta[:-1]) * lam.conjugate()
    xi = np.empty(n + 1, dtype=np.complex128)
    xi[0] = xi0
    xi[1:] = xi0 * np.cumprod(steps)
    return zeta, xi


def sample_overlap(n_points: int, seed: int, sector: SectorParams, n: int = 0,
                   span: float = 10.0) -> np.ndarray:
    """zeta with zeta + n, zeta + n + 1, zeta + n + 2 all in H(R, theta),
    |zeta + n| below span * R."""
    rng = np.random.default_rng(seed)
    out = []
    R, slope = sector.R, sector.slope
    while len(out) < n_points:
        x = rng.uniform(R, span * R, size=4 * n_points)
        y = rng.uniform(-slope * span * R, slope * span * R, size=x.size)
        w = x + 1j * y
        ok = (w.real > R) & (np.abs(w.imag) < slope * w.real)
        out.extend(w[ok][: n_points - len(out)] - n)
    return np.array(out, dtype=np.complex128)
