"""Numerical verification checks, one function per acceptance criterion.

Each function takes a Lab (germs, calibrated basins and cached samples for a
RunConfig) and returns a CriterionResult whose checks carry the measured
values next to their limits.  The suite runner and the acceptance tests both
call these functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import arithmetic as ar
from . import basin, fatou, hyperbolic
from .config import RunConfig
from .errors import RootOfUnity
from .germ import GermSpec, default_perturbed, default_spec, eval as F
from .orbit import asymptotics_report, check_invariance, estimate_c, iterate, w_entry_step
from .regions import BasinParams, SectorParams, calibrate_R, phi_coordinates, sample_B
from .series import regression_constant

__all__ = ["Check", "CriterionResult", "Lab", "CRITERIA", "SUITES", "run_criterion"]

GERM_NAMES = ("model2", "model3", "pert2", "pert3")
TAIL = (1000, 10_000)
N_TRACES = 100
BAND_RATIO = 3.0
W_GAMMAS = (0.35, 0.4, 0.45)
W_FRACTION = 0.9


def _f(x) -> float:
    return float(x)


@dataclass
class Check:
    name: str
    passed: bool
    measured: dict
    limit: str

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "limit": self.limit,
                "measured": self.measured}


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed, measured: dict, limit: str) -> None:
        self.checks.append(Check(name, bool(passed), measured, limit))

    def to_dict(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks]}


class Lab:
    """Germs, calibrated local basins and cached samples for one RunConfig."""

    def __init__(self, config: RunConfig | None = None):
        self.config = config or RunConfig()
        self._germs: dict[str, GermSpec] = {}
        self._basins: dict[str, BasinParams] = {}
        self._traces: dict[str, list] = {}
        self._samples: dict[str, np.ndarray] = {}
        self._fatou: dict[str, tuple] = {}

    def germ(self, name: str) -> GermSpec:
        if name not in self._germs:
            kind, k = name[:-1], int(name[-1])
            custom = self.config.germ
            if kind == "pert" and custom is not None and custom.k == k:
                spec = custom
            elif kind == "model":
                spec = default_spec(k)
            else:
                spec = default_perturbed(k, self.config.l)
            self._germs[name] = spec
        return self._germs[name]

    def set_germ(self, name: str, spec: GermSpec) -> None:
        self._germs[name] = spec
        for cache in (self._basins, self._traces, self._samples, self._fatou):
            cache.pop(name, None)

    def basin(self, name: str) -> BasinParams:
        if name not in self._basins:
            cfg = self.config
            if cfg.R is not None:
                sector = SectorParams(cfg.R, cfg.theta)
            else:
                sector = calibrate_R(self.germ(name), cfg.beta, cfg.theta, cfg.samples,
                                     cfg.horizon, cfg.seed)
            self._basins[name] = BasinParams(cfg.beta, sector)
        return self._basins[name]

    def samples(self, name: str) -> np.ndarray:
        if name not in self._samples:
            self._samples[name] = sample_B(self.basin(name), self.config.samples,
                                           self.config.seed + 3, self.germ(name).k)
        return self._samples[name]

    def fatou_pair(self, name: str) -> tuple[np.ndarray, fatou.FatouBatch, fatou.FatouBatch]:
        """Samples P with Fatou coordinates at P and at F(P)."""
        if name not in self._fatou:
            spec, P = self.germ(name), self.samples(name)
            tol = min(self.config.tol_psi, self.config.tol_sigma)
            self._fatou[name] = (P, fatou.fatou_batch(spec, P, tol=tol),
                                 fatou.fatou_batch(spec, F(spec, P), tol=tol))
        return self._fatou[name]

    def traces(self, name: str) -> list:
        """Orbits of length TAIL[1] from points with small |u| (one decade
        below the top of B), so the tail window is already asymptotic."""
        if name not in self._traces:
            spec = self.germ(name)
            P = sample_B(self.basin(name), N_TRACES, self.config.seed + 2, spec.k, decades=1)
            self._traces[name] = [iterate(spec, p, TAIL[1]) for p in P]
        return self._traces[name]


# 1 -----------------------------------------------------------------------------

def invariance(lab: Lab) -> CriterionResult:
    cfg = lab.config
    res = CriterionResult(1, "local basin invariance")
    for name in ("model2", "model3", "pert2"):
        spec, bp = lab.germ(name), lab.basin(name)
        rep = check_invariance(spec, bp, cfg.samples, cfg.horizon, cfg.seed + 1)
        cert = bp.sector.certificate or {}
        res.add(f"{name}: zero exits", not rep.violators,
                {"R": bp.R, "samples": rep.n_samples, "horizon": rep.horizon,
                 "exits": len(rep.violators), "calibration": cert.get("schedule")},
                "0 exits")
    return res


# 2, 3 ------------------------------------------------------------------------------

def asymptotics(lab: Lab) -> CriterionResult:
    res = CriterionResult(2, "orbit asymptotics")
    for name in GERM_NAMES:
        spec = lab.germ(name)
        reps = [asymptotics_report(tr, TAIL[0]) for tr in lab.traces(name)]
        dev = max(r.sup_deviation for r in reps)
        arg = max(r.sup_arg for r in reps)
        band = max(float(r.band_ratios().max()) for r in reps)
        res.add(f"{name}: sup|n u_n - 1|", dev <= 0.15, {"value": dev}, "<= 0.15")
        res.add(f"{name}: sup|Arg u_n|", arg <= 0.1, {"value": arg}, "<= 0.1")
        res.add(f"{name}: n^(1/k)|z_j| band", band <= BAND_RATIO, {"value": band}, f"<= {BAND_RATIO}")
        # W(gamma) is empty for gamma >= 1/k; the planar gammas are rescaled by 2/k
        for g in W_GAMMAS:
            gamma = g * 2 / spec.k
            steps = [w_entry_step(tr, gamma) for tr in lab.traces(name)]
            entered = [s for s in steps if s is not None]
            frac = len(entered) / len(steps)
            res.add(f"{name}: eventually in W({gamma:.4g})", frac >= W_FRACTION,
                    {"fraction": frac, "median_entry": _f(np.median(entered)) if entered else None},
                    f"fraction >= {W_FRACTION}")
    return res


def constant_c(lab: Lab) -> CriterionResult:
    res = CriterionResult(3, "regression constant c")
    for name in GERM_NAMES:
        spec = lab.germ(name)
        target = float(regression_constant(spec.k))
        est = estimate_c(spec, lab.traces(name), TAIL[0], seed=lab.config.seed)
        quad = estimate_c(spec, lab.traces(name), TAIL[0], quadratic=True, seed=lab.config.seed)
        err = abs(est.c - target)
        res.add(f"{name}: |c - (k+1)/(2k)|", err <= 1e-3,
                {"c": est.c, "target": target, "error": err, "ci_width": est.width,
                 "imag": est.imag, "c_quadratic": quad.c}, "<= 1e-3")
    return res


# 4, 5, 6 -----------------------------------------------------------------------------

def fatou_coordinate(lab: Lab) -> CriterionResult:
    res = CriterionResult(4, "Fatou coordinate")
    bound = 2 * lab.config.tol_psi
    for name in GERM_NAMES:
        spec = lab.germ(name)
        P, b, bF = lab.fatou_pair(name)
        abel = _f(np.max(np.abs(bF.psi - b.psi - 1)))
        res.add(f"{name}: Abel residual", abel <= bound and b.converged.all(),
                {"max": abel, "converged": int(b.converged.sum()), "n": len(P)}, f"<= {bound:g}")
        ms = [64, 128, 256, 512, 1024, 2048, 4096]
        rates = fatou.psi_increment_rates(spec, fatou.default_c(spec), P[:200], ms)
        ratios = [rates[i][1] / rates[i + 1][1] for i in range(len(rates) - 1)]
        res.add(f"{name}: increments halve", all(1.0 <= r <= 4.0 for r in ratios),
                {"ratios": [_f(r) for r in ratios]}, "ratio in [1, 4]")
        u = np.prod(P, axis=1)
        v = b.psi - 1 / u - fatou.default_c(spec) * np.log(u)
        C = np.abs(v) / np.abs(u)
        dec = np.floor(np.log10(np.abs(u))).astype(int)
        per = {int(d): _f(C[dec == d].max()) for d in np.unique(dec) if np.count_nonzero(dec == d) >= 20}
        low = sorted(per)[:2]
        stab = per[low[1]] / per[low[0]] if len(low) == 2 else math.inf
        stab = max(stab, 1 / stab)
        res.add(f"{name}: |v| <= C|u| stable", stab <= 2.0,
                {"C_by_decade": {str(d): per[d] for d in sorted(per)}, "ratio": stab},
                "C ratio across lowest decades <= 2")
    return res


def _sigma_slope(spec: GermSpec) -> tuple[float, list]:
    r = np.geomspace(1e-2, 1e-3, 6)
    P = np.repeat(r[:, None], spec.k, axis=1).astype(np.complex128)
    b = fatou.fatou_batch(spec, P)
    dev = np.abs(b.sigma[:, -1] - r)
    slope_u = np.polyfit(np.log(r ** spec.k), np.log(dev), 1)[0]
    return _f(slope_u), [_f(d) for d in dev]


def second_coordinate(lab: Lab) -> CriterionResult:
    res = CriterionResult(5, "twisted coordinates sigma_j")
    bound = 2 * lab.config.tol_sigma
    for name in GERM_NAMES:
        spec = lab.germ(name)
        k = spec.k
        P, b, bF = lab.fatou_pair(name)
        worst = 0.0
        for a, j in enumerate(range(1, k)):
            Lam = np.prod(spec.lam[j:])
            pred = Lam * np.exp(-(k - j) / k / b.psi) * b.sigma[:, a]
            worst = max(worst, _f(np.max(np.abs(bF.sigma[:, a] - pred))))
        res.add(f"{name}: functional residual", worst <= bound, {"max": worst}, f"<= {bound:g}")
        smin = _f(np.min(np.abs(b.sigma)))
        res.add(f"{name}: sigma != 0", smin > 0, {"min_abs": smin}, "> 0")
        if k == 2:
            slope, dev = _sigma_slope(spec)
            res.add(f"{name}: slope of |sigma(r,r) - r| in |u|", slope >= 1.0,
                    {"slope": slope, "deviation": dev}, ">= 1.0")
        else:
            n = np.arange(TAIL[0], TAIL[1] + 1)
            band = 0.0
            for tr in lab.traces(name):
                tails = phi_coordinates(tr.points[TAIL[0]:])
                for j in range(k):
                    s = n ** ((k - j) / k) * np.abs(tails[:, j])
                    band = max(band, _f(s.max() / s.min()))
            res.add(f"{name}: n^((k-j+1)/k)|Pi_j| band", band <= BAND_RATIO,
                    {"value": band}, f"<= {BAND_RATIO}")
    return res


def _wedge_targets(lab: Lab, name: str, n: int) -> np.ndarray:
    """(1/u, y_2, ..., y_k) of points in a shrunken basin B(beta', theta/2, 4R)."""
    spec, bp = lab.germ(name), lab.basin(name)
    beta = min(0.35, 0.96 / spec.k)
    inner = BasinParams(beta, SectorParams(4 * bp.R, bp.theta / 2))
    S = sample_B(inner, n, lab.config.seed + 11, spec.k)
    T = phi_coordinates(S)
    T[:, 0] = 1 / T[:, 0]
    return T


def injectivity(lab: Lab) -> CriterionResult:
    res = CriterionResult(6, "injectivity and coverage of Q")
    cfg = lab.config
    for name in ("model2", "pert2", "model3"):
        spec, bp = lab.germ(name), lab.basin(name)
        rep = fatou.injectivity_probe(spec, bp, cfg.pairs, cfg.seed + 5)
        res.add(f"{name}: collisions", rep.collisions_Q == 0, rep.to_dict(), "0 at 1e-9")
        jp = fatou.jacobian_probe(spec, np.geomspace(1e-2, 1e-3, 6))
        dev = [d["abs_det_minus_1"] for d in jp]
        trend = all(dev[i + 1] <= dev[i] for i in range(len(dev) - 1))
        res.add(f"{name}: Jacobian near 1", max(dev) <= 0.2 and trend,
                {"abs_det_minus_1": dev, "decreasing": trend}, "<= 0.2, decreasing in r")
        T = _wedge_targets(lab, name, cfg.samples)
        inv = fatou.invert_Q(spec, T, bp)
        res.add(f"{name}: Newton coverage", inv.success_rate >= 0.95,
                {"success_rate": inv.success_rate, "max_steps": int(inv.steps.max())}, ">= 0.95")
    return res


# 7, 8, 9 ------------------------------------------------------------------------------------

def _classified_points(lab: Lab, name: str, n: int) -> np.ndarray:
    """Points of the basin with Re g_1 > 0, mostly outside B."""
    spec, bp = lab.germ(name), lab.basin(name)
    wide = BasinParams(0.12, SectorParams(bp.R / 4, 1.3))
    P = sample_B(wide, 3 * n, lab.config.seed + 7, spec.k, decades=2)
    codes, _ = basin.classify_batch(spec, P, bp, lab.config.basin_horizon)
    P = P[codes == 0]
    gc = basin.global_coordinates(spec, P, bp, check_h=False)
    return P[gc.in_domain][:n]


def equivariance(lab: Lab) -> CriterionResult:
    res = CriterionResult(7, "global coordinates")
    tol = lab.config.tol_psi
    bound = 2 * tol
    for name in ("model2", "pert2", "model3"):
        spec, bp = lab.germ(name), lab.basin(name)
        k = spec.k
        P = _classified_points(lab, name, lab.config.samples)
        gc = basin.global_coordinates(spec, P, bp, tol)
        gf = basin.global_coordinates(spec, F(spec, P), bp, tol, check_h=False)
        e1 = _f(np.max(np.abs(gf.g1 - gc.g1 - 1)))
        ej = 0.0
        for a, j in enumerate(range(1, k)):
            Lam = np.prod(spec.lam[j:])
            pred = Lam * np.exp(-(k - j) / k / gc.g1) * gc.g[:, a]
            ej = max(ej, _f(np.max(np.abs(gf.g[:, a] - pred))))
        outside = _f(np.mean(gc.hit_step > 0))
        res.add(f"{name}: g1 o F = g1 + 1", e1 <= bound,
                {"max": e1, "n": len(P), "fraction_outside_B": outside}, f"<= {bound:g}")
        res.add(f"{name}: g_j multiplier law", ej <= bound and np.min(np.abs(gc.g)) > 0,
                {"max": ej, "min_abs_g": _f(np.min(np.abs(gc.g)))}, f"<= {bound:g}, g_j != 0")
        gap = _f(gc.h_gap.max())
        res.add(f"{name}: h-independence", gap <= bound, {"max": gap}, f"<= {bound:g}")
    return res


def characterization(lab: Lab) -> CriterionResult:
    res = CriterionResult(8, "basin characterization oracle")
    cfg = lab.config
    for name in ("model2", "pert2"):
        spec, bp = lab.germ(name), lab.basin(name)
        sl = basin.SliceSpec.real(spec.k)
        hits = basin.raster_slice(spec, sl, bp, cfg.grid, cfg.basin_horizon)
        ratio = basin.raster_slice(spec, sl, bp, cfg.grid, cfg.basin_horizon, oracle="ratio")
        a, b = hits.status, ratio.status
        decided = (a != 1) & (b != 1)
        agree = _f(np.mean(a[decided] == b[decided]))
        res.add(f"{name}: oracle agreement", agree >= 0.99,
                {"agreement": agree, "decided": int(decided.sum()), "hits": hits.counts(),
                 "ratio": ratio.counts()}, ">= 0.99 of decided cells")
        axis_ok = bool(np.all(a[hits.axis] == 0) and np.all(b[hits.axis] == 0))
        res.add(f"{name}: axis cells not in basin", axis_ok and hits.axis.any(),
                {"axis_cells": int(hits.axis.sum())}, "all not_in_basin")
    return res


def fibration(lab: Lab) -> CriterionResult:
    res = CriterionResult(9, "fibration cocycle")
    spec, bp = lab.germ("model2"), lab.basin("model2")
    lam = complex(spec.lam[0])
    worst = 0.0
    for n in (0, 1, 5, 50):
        for z in basin.sample_overlap(lab.config.samples // 4, lab.config.seed + n, bp.sector, n):
            prod, direct = basin.two_step_multiplier(z, n, lam)
            worst = max(worst, abs(prod - direct) / abs(direct))
    res.add("two-step composition", worst <= 1e-12, {"max_relative": worst}, "<= 1e-12")
    band = 0.0
    n = np.arange(100, 10_001)
    for z0 in basin.sample_overlap(100, lab.config.seed + 9, bp.sector):
        _, xi = basin.t_iteration(z0, 1 + 0j, lam, 10_000)
        s = np.abs(xi[100:]) * np.sqrt(n)
        band = max(band, _f(s.max() / s.min()))
    res.add("|xi_n| sqrt(n) band", band <= 2.0, {"value": band}, "<= 2")
    return res


# 10, 11 -------------------------------------------------------------------------

def _disc_pairs(n: int, seed: int):
    rng = np.random.default_rng(seed)
    lo, hi = math.log(1e-6), math.log(0.9)
    r = np.exp(rng.uniform(lo, hi, (2, n)))
    a = rng.uniform(-math.pi, math.pi, (2, n))
    return r * np.exp(1j * a), r


def metric_bounds(lab: Lab) -> CriterionResult:
    res = CriterionResult(10, "punctured-disc distance bounds")
    z, r = _disc_pairs(lab.config.pairs, lab.config.seed + 13)
    d = hyperbolic.punctured_disc_distance(z[0], z[1])
    lo, hi, _ = hyperbolic.distance_bounds(z[0], z[1])
    viol = int(np.count_nonzero((d < lo - 1e-9) | (d > hi + 1e-9)))
    res.add("lower <= distance <= upper", viol == 0, {"violations": viol, "n": int(d.size)}, "0 at 1e-9")
    rad = _f(np.max(np.abs(hyperbolic.punctured_disc_distance(r[0], r[1])
                           - hyperbolic.radial_term(r[0], r[1]))))
    res.add("radial pairs", rad <= 1e-9, {"max": rad}, "<= 1e-9")
    deck = _f(np.max(np.abs(d - hyperbolic.punctured_disc_distance(z[0], z[1], deck_window=32))))
    res.add("deck window 16 vs 32", deck <= 1e-12, {"max": deck}, "<= 1e-12")
    return res


def separation(lab: Lab) -> CriterionResult:
    res = CriterionResult(11, "separation lower bound")
    beta = lab.config.beta
    z1, z2 = hyperbolic.separation_pairs(beta, np.geomspace(0.5, 1e-6, 1000), lab.config.seed + 17)
    d = hyperbolic.punctured_disc_distance(z1, z2)
    floor = hyperbolic.separation_bound(beta) - hyperbolic.g_term(z1, z2)
    viol = int(np.count_nonzero(d < floor))
    res.add("distance >= log((1-beta)/beta) - g", viol == 0,
            {"violations": viol, "bound": hyperbolic.separation_bound(beta),
             "distance_at_smallest": _f(d[-1])}, "0 violations")
    return res


# 12 -----------------------------------------------------------------------------------

def _random_tuple(seed: int, k: int = 3, digits: int = 30) -> list[ar.RotationNumber]:
    rng = np.random.default_rng(seed)
    rots = []
    for _ in range(k - 1):
        s = "0." + "".join(str(d) for d in rng.integers(0, 10, digits))
        rots.append(ar.RotationNumber.parse(s))
    nums, den, _ = ar._common(rots)
    rots.append(ar.RotationNumber.from_fraction(Fraction(-sum(nums), den) % 1, "rest"))
    return rots


def arithmetic(lab: Lab) -> CriterionResult:
    cfg = lab.config
    res = CriterionResult(12, "small divisors and resonances")
    rep = ar.brjuno_partial_sums(ar.RotationNumber.golden(), cfg.kmax, cfg.stagnation)
    res.add(f"golden mean stagnation by K={cfg.kmax}", rep.verdict == "brjuno-plausible",
            {"stagnation": rep.stagnation, "S_K": rep.partial_sums[-1]}, f"< {cfg.stagnation:g}")
    accepted = []
    total = 0
    for q in range(1, 65):
        for p in range(q):
            if math.gcd(p, q) != 1:
                continue
            total += 1
            try:
                ar.brjuno_partial_sums(ar.RotationNumber.from_fraction(Fraction(p, q)), 6)
                accepted.append(f"{p}/{q}")
            except RootOfUnity:
                pass
    res.add("rationals q <= 64 rejected", not accepted,
            {"tested": total, "not_rejected": accepted}, "all root-of-unity")
    g = ar.RotationNumber.golden()
    pair = ar.check_one_resonant([g, g.conjugate()], cfg.degree_bound, cfg.resonance)
    res.add("conjugate pair one-resonant", pair.ok, pair.to_dict(), f"degree <= {cfg.degree_bound}")
    trip = ar.check_one_resonant(_random_tuple(cfg.seed + 19), cfg.degree_bound, cfg.resonance)
    res.add("random 30-digit k=3 tuple one-resonant", trip.ok, trip.to_dict(),
            f"degree <= {cfg.degree_bound}")
    return res


CRITERIA: dict[int, Callable[[Lab], CriterionResult]] = {
    1: invariance,
    2: asymptotics,
    3: constant_c,
    4: fatou_coordinate,
    5: second_coordinate,
    6: injectivity,
    7: equivariance,
    8: characterization,
    9: fibration,
    10: metric_bounds,
    11: separation,
    12: arithmetic,
}

SUITES: dict[str, tuple[int, ...]] = {
    "arith": (12,),
    "invariance": (1,),
    "asymptotics": (2, 3),
    "fatou": (4, 5, 6),
    "basin": (7, 8),
    "fibration": (9,),
    "metric": (10, 11),
}


def run_criterion(number: int, lab: Lab) -> CriterionResult:
    return CRITERIA[number](lab)
