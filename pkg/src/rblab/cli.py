"""Command-line entry point: ``rblab <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import FORMATS, RunConfig, load_config
from .errors import ConfigInvalid, RblabError

log = logging.getLogger("rblab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
GERM_CHOICES = ("model2", "model3", "pert2", "pert3")


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _point(text: str) -> np.ndarray:
    return np.array([_complex(t) for t in text.split(",")], dtype=np.complex128)


def set_threads(requested: int | None) -> int:
    """Apply RBL_THREADS (preferred) or --threads to the compiled kernels."""
    from . import _kernels

    env = os.environ.get("RBL_THREADS")
    try:
        n = int(env) if env else requested
    except ValueError:
        raise ConfigInvalid(f"RBL_THREADS must be an integer, got {env!r}") from None
    return _kernels.set_threads(n)


def _emit(obj, args, name: str) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2, default=lambda o: o.tolist())
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text + "\n")


def _lab(args):
    from .checks import Lab
    return Lab(args.config_obj)


def _germ_and_basin(args):
    from .germ import load_germ

    lab = _lab(args)
    name = args.germ
    if name not in GERM_CHOICES:
        # a germ file: treated as the perturbed germ of its dimension
        spec = load_germ(name)
        name = f"pert{spec.k}"
        lab.set_germ(name, spec)
    return lab, name, lab.germ(name)


# subcommands -------------------------------------------------------------------

def cmd_arith(args) -> int:
    from . import arithmetic as ar

    cfg = args.config_obj
    rots = [ar.RotationNumber.parse(a) for a in args.alpha]
    out = {"brjuno": {}, "resonance": None}
    for r in rots:
        try:
            out["brjuno"][str(r)] = ar.brjuno_partial_sums(r, args.kmax or cfg.kmax, cfg.stagnation).to_dict()
        except ar.RootOfUnity as exc:
            out["brjuno"][str(r)] = {"verdict": "root-of-unity", "detail": str(exc)}
    tuple_ = rots if len(rots) > 1 else [rots[0], rots[0].conjugate()]
    try:
        out["resonance"] = ar.check_one_resonant(tuple_, args.degree or cfg.degree_bound,
                                                 cfg.resonance).to_dict()
    except ar.PrecisionExhausted as exc:
        out["resonance"] = {"error": str(exc)}
    _emit(out, args, "arith")
    return EXIT_OK


def cmd_region(args) -> int:
    from .orbit import check_invariance

    lab, name, spec = _germ_and_basin(args)
    cfg = args.config_obj
    bp = lab.basin(name)
    rep = check_invariance(spec, bp, cfg.samples, cfg.horizon, cfg.seed + 1)
    _emit({"germ": name, "R": bp.R, "theta": bp.theta, "beta": bp.beta,
           "certificate": bp.sector.certificate, "invariance": rep.to_dict()}, args, "region")
    return EXIT_OK if not rep.violators else EXIT_FAIL


def cmd_orbit(args) -> int:
    from .orbit import iterate

    _, _, spec = _germ_and_basin(args)
    p = _point(args.point)
    tr = iterate(spec, p, args.steps)
    last = tr.points[-1]
    out = {"terminated": tr.terminated, "steps": len(tr) - 1,
           "final": [[z.real, z.imag] for z in last],
           "u_final": [tr.u_seq[-1].real, tr.u_seq[-1].imag]}
    if args.out:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        cols = ["n"] + [f"{p}{j + 1}" for j in range(spec.k) for p in ("re", "im")]
        data = np.column_stack([np.arange(len(tr))] + [f(tr.points[:, j]) for j in range(spec.k)
                                                        for f in (np.real, np.imag)])
        np.savetxt(path / "orbit.csv", data, delimiter=",", header=",".join(cols), comments="",
                   fmt=["%d"] + ["%.17g"] * (2 * spec.k))
    _emit(out, args, "orbit")
    return EXIT_OK


def cmd_asym(args) -> int:
    from .checks import TAIL
    from .orbit import asymptotics_report, estimate_c

    lab, name, spec = _germ_and_basin(args)
    traces = lab.traces(name)
    reps = [asymptotics_report(t, TAIL[0]) for t in traces]
    est = estimate_c(spec, traces, TAIL[0], quadratic=args.quadratic, seed=args.config_obj.seed)
    _emit({"germ": name, "traces": len(traces), "tail": list(TAIL),
           "sup_abs_n_u_n_minus_1": max(r.sup_deviation for r in reps),
           "sup_abs_arg_u": max(r.sup_arg for r in reps),
           "band_ratio": max(float(r.band_ratios().max()) for r in reps),
           "c": est.to_dict()}, args, "asym")
    return EXIT_OK


def cmd_fatou(args) -> int:
    from . import fatou
    from .regions import in_B

    lab, name, spec = _germ_and_basin(args)
    cfg = args.config_obj
    if args.rates:
        P = lab.samples(name)[:200]
        ms = [64, 128, 256, 512, 1024, 2048, 4096]
        rates = fatou.psi_increment_rates(spec, fatou.default_c(spec), P, ms)
        _emit({"germ": name, "rates": [{"m": m, "max_increment": v} for m, v in rates]}, args, "fatou")
        return EXIT_OK
    if not args.point:
        raise ConfigInvalid("fatou needs --point or --rates")
    p = _point(args.point)
    bp = lab.basin(name)
    b = fatou.fatou_batch(spec, p, tol=min(cfg.tol_psi, cfg.tol_sigma))
    _emit({"germ": name, "in_B": bool(in_B(p, bp)),
           "psi": [b.psi[0].real, b.psi[0].imag],
           "sigma": [[s.real, s.imag] for s in b.sigma[0]],
           "psi_depth": int(b.psi_depth[0]), "sigma_depth": int(b.sigma_depth[0]),
           "converged": bool(b.converged[0])}, args, "fatou")
    return EXIT_OK


def cmd_basin(args) -> int:
    from .basin import SliceSpec, raster_slice

    lab, name, spec = _germ_and_basin(args)
    cfg = args.config_obj
    sl = SliceSpec.parse(args.slice, spec.k, args.extent)
    grid = raster_slice(spec, sl, lab.basin(name), args.res or cfg.grid, args.nmax or cfg.basin_horizon,
                        oracle=args.oracle)
    counts = grid.counts()
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    grid.write_pgm(out / "basin.pgm")
    with open(out / "basin.csv", "w") as fh:
        fh.write("schema,verdict,cells\n")
        for key in sorted(counts):
            fh.write(f"rblab-csv/1,{key},{counts[key]}\n")
    print(json.dumps({"germ": name, "resolution": grid.codes.shape[0], "counts": counts,
                      "pgm": str(out / "basin.pgm")}, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_fibration(args) -> int:
    from .checks import fibration

    res = fibration(_lab(args))
    _emit(res.to_dict(), args, "fibration")
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_hyp(args) -> int:
    from . import hyperbolic as hy

    z1, z2 = args.pair
    d = hy.punctured_disc_distance(z1, z2, curvature=args.curvature)
    lo, hi, g = hy.distance_bounds(z1, z2)
    out = {"distance": d, "lower": float(lo), "upper": float(hi), "g": float(g),
           "curvature": args.curvature}
    if args.beta is not None:
        out["separation_bound"] = hy.separation_bound(args.beta)
    _emit(out, args, "hyp")
    return EXIT_OK


def cmd_suite(args) -> int:
    from .suite import run_suite

    status, paths, results = run_suite(args.config_obj, args.name, args.out or "reports")
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] criterion {r.number:2d}: {r.title}")
        for c in r.checks:
            if not c.passed:
                print(f"        failed: {c.name} (limit {c.limit})")
    for p in paths:
        print(f"wrote {p}")
    return status


# parser --------------------------------------------------------------------------

def _global_flags(p: argparse.ArgumentParser, default) -> None:
    p.add_argument("--config", default=default, help="key = value run configuration file")
    p.add_argument("--seed", type=int, default=default, help="override the configured seed")
    p.add_argument("--threads", type=int, default=default,
                   help="compiled-kernel threads (RBL_THREADS wins)")
    p.add_argument("--out", default=default, help="output directory")
    p.add_argument("--format", choices=FORMATS, default=default, help="report format")
    p.add_argument("-v", "--verbose", action="store_true", default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rblab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rblab {__version__}")
    _global_flags(parser, None)
    # the same flags are accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    def germ_arg(p):
        p.add_argument("--germ", default="model2",
                       help=f"one of {', '.join(GERM_CHOICES)} or a germ file (default model2)")

    p = sub.add_parser("arith", parents=[common], help="Brjuno partial sums and one-resonance scan")
    p.add_argument("--alpha", nargs="+", default=["golden"],
                   help="rotation numbers: golden, p/q, decimals, cf:a0,a1,(b...)")
    p.add_argument("--kmax", type=int)
    p.add_argument("--degree", type=int)
    p.set_defaults(func=cmd_arith)

    p = sub.add_parser("region", parents=[common], help="calibrate R and check invariance of B")
    germ_arg(p)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("orbit", parents=[common], help="iterate one point")
    germ_arg(p)
    p.add_argument("--point", required=True, help="comma-separated complex coordinates")
    p.add_argument("--steps", type=int, default=10_000)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("asym", parents=[common], help="tail asymptotics and the regression for c")
    germ_arg(p)
    p.add_argument("--quadratic", action="store_true", help="add the 1/U^2 regressor")
    p.set_defaults(func=cmd_asym)

    p = sub.add_parser("fatou", parents=[common], help="psi and sigma at a point, or increment rates")
    germ_arg(p)
    p.add_argument("--point")
    p.add_argument("--rates", action="store_true")
    p.set_defaults(func=cmd_fatou)

    p = sub.add_parser("basin", parents=[common], help="classify a slice and write a PGM raster")
    germ_arg(p)
    p.add_argument("--slice", default="real", help="real, conj, or 'o=..;e1=..;e2=..'")
    p.add_argument("--extent", type=float, default=0.9)
    p.add_argument("--res", type=int)
    p.add_argument("--nmax", type=int)
    p.add_argument("--oracle", choices=("hits", "ratio"), default="hits")
    p.set_defaults(func=cmd_basin)

    p = sub.add_parser("fibration", parents=[common], help="transition-function checks")
    p.set_defaults(func=cmd_fibration)

    p = sub.add_parser("hyp", parents=[common], help="punctured-disc distance and its bounds")
    p.add_argument("--pair", nargs=2, type=_complex, required=True, metavar=("Z1", "Z2"))
    p.add_argument("--beta", type=float)
    p.add_argument("--curvature", type=int, choices=(-1, -4), default=-1)
    p.set_defaults(func=cmd_hyp)

    p = sub.add_parser("suite", parents=[common], help="run a verification suite")
    p.add_argument("name", help="arith, invariance, asymptotics, fatou, basin, fibration, metric or all")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        args.config_obj = cfg.with_overrides(seed=args.seed, format=args.format)
        set_threads(args.threads)
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"rblab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RblabError, ValueError) as exc:
        print(f"rblab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
