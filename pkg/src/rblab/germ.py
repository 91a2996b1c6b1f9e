"""The one-resonant model germ and its polynomial perturbations.

    F_N(z)_j = lambda_j z_j (1 - u/k),   u = z_1 ... z_k
    F = F_N + sum of monomials of total degree >= l

Points are complex128 arrays of shape (k,), batches have shape (N, k).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .arithmetic import DEFAULT_DPS, RotationNumber, _common
from .errors import ConfigInvalid

__all__ = [
    "DEFAULT_BETA",
    "PerturbationTerm",
    "GermSpec",
    "default_spec",
    "default_perturbed",
    "eval_model",
    "eval",
    "resonant_product",
    "parse_germ_text",
    "load_germ",
    "format_germ",
]

DEFAULT_BETA = 0.3
DEFAULT_L = 15


@dataclass(frozen=True)
class PerturbationTerm:
    """coefficient * z^exponents added to coordinate j (0-based)."""

    j: int
    coefficient: complex
    exponents: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.exponents)


@dataclass(frozen=True)
class GermSpec:
    k: int
    lambdas: tuple[RotationNumber, ...]
    l: int = DEFAULT_L
    perturbation: tuple[PerturbationTerm, ...] = ()

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("dimension must be >= 2")
        if len(self.lambdas) != self.k:
            raise ValueError(f"expected {self.k} rotation numbers, got {len(self.lambdas)}")
        if self.l < 4:
            raise ValueError("order l must be >= 4")
        for t in self.perturbation:
            if not 0 <= t.j < self.k or len(t.exponents) != self.k:
                raise ValueError(f"perturbation term {t} does not match dimension {self.k}")
            if min(t.exponents) < 0:
                raise ValueError("exponents must be non-negative")
            if t.degree < self.l:
                raise ValueError(f"perturbation term of degree {t.degree} below order l = {self.l}")
        if self.perturbation and DEFAULT_BETA * (self.l + 1) < 4:
            raise ValueError("perturbation order too low: need beta0 (l+1) >= 4")

    @cached_property
    def lam(self) -> np.ndarray:
        return np.array([r.lam for r in self.lambdas], dtype=np.complex128)

    @cached_property
    def kernel_terms(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(target, coefficient, exponents) arrays for the compiled kernels."""
        n = len(self.perturbation)
        tgt = np.array([t.j for t in self.perturbation], dtype=np.int64).reshape(n)
        coef = np.array([t.coefficient for t in self.perturbation], dtype=np.complex128).reshape(n)
        exps = np.array([t.exponents for t in self.perturbation], dtype=np.int64).reshape(n, self.k)
        return tgt, coef, exps

    def multiplier(self, j: int) -> complex:
        """Lambda_j = lambda_j ... lambda_k (j 0-based)."""
        return complex(np.prod(self.lam[j:]))

    @property
    def is_model(self) -> bool:
        return not self.perturbation

    def axis_invariant(self) -> bool:
        """True when every term in coordinate j carries a factor z_j."""
        return all(t.exponents[t.j] >= 1 for t in self.perturbation)

    def digest(self) -> str:
        return hashlib.sha256(format_germ(self).encode()).hexdigest()[:16]


def default_spec(k: int = 2, dps: int = DEFAULT_DPS) -> GermSpec:
    """Unperturbed model with golden-mean multipliers whose product is 1."""
    rots = [RotationNumber.golden(dps)]
    if k >= 3:
        rots.append(RotationNumber.from_cf([0, 2], [2], dps))     # sqrt(2) - 1
    for extra in range(3, k):
        rots.append(RotationNumber.from_cf([0, extra], [extra], dps))
    rots.append(_complement(rots))
    return GermSpec(k=k, lambdas=tuple(rots))


def default_perturbed(k: int = 2, l: int = DEFAULT_L) -> GermSpec:
    """A fixed order-l perturbation used in tests and reports.

    Every term in coordinate j has a factor z_j, so coordinate hyperplanes
    stay invariant.
    """
    base = default_spec(k)
    terms: list[PerturbationTerm] = []
    for j in range(k):
        e = [0] * k
        e[j] = l
        terms.append(PerturbationTerm(j, 1.0 + 0j, tuple(e)))
    mixed = [0] * k
    mixed[0] = l // 2
    mixed[1] = l - l // 2
    terms.append(PerturbationTerm(0, 0.5 + 0.5j, tuple(mixed)))
    mixed2 = [0] * k
    mixed2[0] = 3
    mixed2[k - 1] += l - 3
    terms.append(PerturbationTerm(k - 1, -0.5 + 0j, tuple(mixed2)))
    return GermSpec(k=k, lambdas=base.lambdas, l=l, perturbation=tuple(terms))


def _complement(rots: Sequence[RotationNumber]) -> RotationNumber:
    """The rotation number making the product of all multipliers equal to 1."""
    nums, den, errs = _common(list(rots))
    return RotationNumber((-sum(nums)) % den, den, sum(errs, Fraction(0)), "rest")


# evaluation ------------------------------------------------------------

def resonant_product(p: np.ndarray) -> np.ndarray | complex:
    """u = z_1 ... z_k for one point or along the last axis of a batch."""
    p = np.asarray(p, dtype=np.complex128)
    return np.prod(p, axis=-1)


def eval_model(spec: GermSpec, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.complex128)
    u = np.prod(p, axis=-1)
    return spec.lam * p * (1.0 - u / spec.k)[..., None]


def eval(spec: GermSpec, p: np.ndarray) -> np.ndarray:  # noqa: A001 - mirrors the math
    """F(p) for one point (k,) or a batch (N, k)."""
    p = np.asarray(p, dtype=np.complex128)
    out = eval_model(spec, p)
    for t in spec.perturbation:
        mono = np.ones(p.shape[:-1], dtype=np.complex128)
        for j, e in enumerate(t.exponents):
            if e:
                mono = mono * p[..., j] ** e
        out[..., t.j] += t.coefficient * mono
    return out


# germ file -------------------------------------------------------------

def _parse_complex(s: str) -> complex:
    try:
        return complex(s.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ConfigInvalid(f"bad coefficient {s!r}") from exc


def parse_germ_text(text: str, dps: int = DEFAULT_DPS) -> GermSpec:
    """Parse the key-value germ format.

        dimension = 2
        alphas = golden rest       # whitespace separated
        l = 15
        term = 1, 1.0, 15 0        # coordinate, coefficient, exponents

    Coordinates in ``term`` lines are 1-based.  The alpha token ``rest``
    stands for 1 minus the sum of the others (product of multipliers = 1).
    Unknown keys are ignored so run configurations can embed a germ.
    """
    k: int | None = None
    alphas: list[str] | None = None
    l = DEFAULT_L
    raw_terms: list[str] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        try:
            if key in ("dimension", "k"):
                k = int(val)
            elif key == "alphas":
                alphas = val.replace(";", " ").split()
            elif key == "l":
                l = int(val)
            elif key == "term":
                raw_terms.append(val)
        except ValueError as exc:
            raise ConfigInvalid(f"line {lineno}: {exc}") from exc
    if k is None:
        k = len(alphas) if alphas else 2
    if alphas is None:
        lambdas = default_spec(k, dps).lambdas
    else:
        if len(alphas) != k:
            raise ConfigInvalid(f"dimension {k} but {len(alphas)} alphas")
        rots: list[RotationNumber | None] = []
        for a in alphas:
            rots.append(None if a.lower() == "rest" else RotationNumber.parse(a, dps))
        if rots.count(None) > 1:
            raise ConfigInvalid("at most one alpha may be 'rest'")
        if None in rots:
            i = rots.index(None)
            rots[i] = _complement([r for r in rots if r is not None])
        lambdas = tuple(rots)  # type: ignore[arg-type]
    terms = []
    for val in raw_terms:
        parts = [s.strip() for s in val.split(",")]
        if len(parts) != 3:
            raise ConfigInvalid(f"term needs 'j, coefficient, exponents': {val!r}")
        try:
            j = int(parts[0]) - 1
            exps = tuple(int(e) for e in parts[2].split())
        except ValueError as exc:
            raise ConfigInvalid(f"bad term {val!r}") from exc
        terms.append(PerturbationTerm(j, _parse_complex(parts[1]), exps))
    try:
        return GermSpec(k=k, lambdas=tuple(lambdas), l=l, perturbation=tuple(terms))
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from exc


def load_germ(path: str | Path, dps: int = DEFAULT_DPS) -> GermSpec:
    return parse_germ_text(Path(path).read_text(), dps)


def format_germ(spec: GermSpec) -> str:
    lines = [f"dimension = {spec.k}", f"alphas = {' '.join(map(str, spec.lambdas))}", f"l = {spec.l}"]
    for t in spec.perturbation:
        exps = " ".join(map(str, t.exponents))
        lines.append(f"term = {t.j + 1}, {t.coefficient!r}, {exps}")
    return "\n".join(lines) + "\n"


def points(values: Iterable[Sequence[complex]]) -> np.ndarray:
    return np.asarray(list(values), dtype=np.complex128)
