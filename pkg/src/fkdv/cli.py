"""Command-line front end: ``fkdv {wave,stability,diagram,validate}``."""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bloch, critical, waves
from .errors import FKdVError
from .sweep import (
    RecordWriter,
    SweepConfig,
    boundary_deviation,
    diagram_svg,
    run_cell,
    run_sweep,
    write_json,
)

EXIT_OK, EXIT_SOLVER, EXIT_VALIDATION = 0, 2, 3
PROFILE_POINTS = 256
SUITES = ("expansions", "oracle", "symmetry", "discriminant")
# eigenvalue roundoff grows like eps * N^(alpha+1); the absolute 1e-9 and 1e-7
# spectral comparisons are run at this truncation
SUITE_N = 24


def _range(text):
    try:
        lo, hi, n = text.split(",")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError("expected MIN,MAX,COUNT") from None


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    return int(os.environ.get("FKDV_NUM_THREADS", "1") or 1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fkdv", description="Small periodic waves of fractional KdV "
                                 "equations and their Bloch spectral stability.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n-modes", type=int, default=32, help="Fourier truncation N")
    common.add_argument("--xi-count", type=int, default=64, help="uniform Bloch grid size on [0, 1/2]")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (fallback: FKDV_NUM_THREADS, then 1)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")

    point = argparse.ArgumentParser(add_help=False)
    point.add_argument("--alpha", type=float, required=True)
    point.add_argument("--p", type=float, required=True)
    point.add_argument("--a", type=float, default=0.05)
    point.add_argument("--b", type=float, default=0.0)

    sub = ap.add_subparsers(dest="cmd", required=True)
    sub.add_parser("wave", parents=[common, point], help="solve the profile equation")
    sub.add_parser("stability", parents=[common, point], help="Bloch spectrum and verdict")

    d = sub.add_parser("diagram", parents=[common], help="stability diagram over (alpha, p)")
    d.add_argument("--alpha-range", type=_range, default=(0.75, 5.5, 40))
    d.add_argument("--p-range", type=_range, default=(1.0, 2.5, 40))
    d.add_argument("--a", type=float, default=0.05)
    d.add_argument("--b", type=float, default=0.0)

    v = sub.add_parser("validate", parents=[common], help="run the numerical self-checks")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--alpha", type=float)
    v.add_argument("--p", type=float)
    v.add_argument("--a", type=float, default=0.05)
    v.add_argument("--n-periods", type=int, nargs="+", default=[2, 3])
    return ap


def cmd_wave(args) -> int:
    params = waves.ModelParams(args.alpha, args.p)
    w = waves.solve_wave(params, args.a, args.b, N=args.n_modes)
    args.out.mkdir(parents=True, exist_ok=True)
    f = w.profile
    write_json(args.out / "wave.json", {
        "alpha": params.alpha, "p": params.p, "a": w.a, "b": w.b, "N": w.N,
        "k_alpha": w.wavenumber_alpha, "wavenumber": w.wavenumber,
        "residual": w.residual_norm, "iterations": w.iterations,
        "modes": [{"n": int(n), "re": float(f[n].real), "im": float(f[n].imag)} for n in f.modes],
    })
    z = 2 * np.pi * np.arange(PROFILE_POINTS) / PROFILE_POINTS
    vals = f(z).real
    with open(args.out / "profile.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("z,P\n")
        for zz, pp in zip(z, vals):
            fh.write(f"{float(zz)!r},{float(pp)!r}\n")
    print(f"k^alpha = {w.wavenumber_alpha:.12g}  residual = {w.residual_norm:.2e}")
    return EXIT_OK


def cmd_stability(args) -> int:
    cfg = SweepConfig(xi_count=args.xi_count, truncation=args.n_modes, threads=_threads(args))
    rec, verdict = run_cell(args.alpha, args.p, args.a, args.b, N=args.n_modes,
                            xi_grid=cfg.xi_grid(), keep_verdict=True, threads=cfg.threads)
    if verdict is None:
        print(rec.error, file=sys.stderr)
        return EXIT_SOLVER
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "spectrum.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("xi,re,im\n")
        for s in verdict.slices:
            for lam in s.eigenvalues:
                fh.write(f"{float(s.xi)!r},{float(lam.real)!r},{float(lam.imag)!r}\n")
    out = asdict(rec)
    out.update(converged=verdict.converged, growth_rate_refined_N=verdict.growth_rate_refined_N)
    write_json(args.out / "verdict.json", out)
    print(f"{rec.verdict}: growth {rec.growth_rate:.3e} at xi = {rec.worst_xi:.5g}")
    return EXIT_OK


def cmd_diagram(args) -> int:
    cfg = SweepConfig(alpha_range=args.alpha_range, p_range=args.p_range, amplitudes=[args.a],
                      b=args.b, xi_count=args.xi_count, truncation=args.n_modes,
                      output_dir=str(args.out), threads=_threads(args))
    args.out.mkdir(parents=True, exist_ok=True)
    fine = np.linspace(cfg.alphas[0], cfg.alphas[-1], 400)
    curve = [(float(a), critical.critical_power(a)) for a in fine]
    with open(args.out / "pstar.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("alpha,p_star\n")
        marks = {1.0, 2.0, critical.critical_power_max()[0]}
        lo, hi = cfg.alphas[0], cfg.alphas[-1]
        for a in sorted(set(cfg.alphas.tolist()) | {m for m in marks if lo <= m <= hi}):
            fh.write(f"{float(a)!r},{float(critical.critical_power(a))!r}\n")
    writer = RecordWriter(args.out / "region.csv", ["alpha", "p", "verdict", "growth_rate"])
    try:
        records = run_sweep(cfg, on_record=writer.write)
    finally:
        writer.close()
    (args.out / "diagram.svg").write_text(diagram_svg(records, cfg.alphas, cfg.ps, curve),
                                         encoding="utf-8")
    dev = boundary_deviation(records, cfg.alphas, cfg.ps)
    counts = {k: sum(r.verdict == k for r in records) for k in ("stable", "unstable", "indeterminate")}
    print(f"{len(records)} cells {counts}; boundary deviation {dev['max_cells']:.2f} cells")
    return EXIT_OK


def _validate_expansions(args):
    sets = [(args.alpha, args.p)] if args.alpha is not None else [(2, 1), (2, 2), (1.5, 1)]
    out = []
    for al, p in sets:
        r = waves.validate_expansions(waves.ModelParams(al, p), N=args.n_modes)
        out.append({"alpha": al, "p": p, "profile_order": r.profile_order,
                    "wavenumber_order": r.wavenumber_order, "passed": r.passed})
    return out


def _validate_oracle(args):
    al, p = (args.alpha, args.p) if args.alpha is not None else (2.0, 2.0)
    w = waves.solve_wave(waves.ModelParams(al, p), args.a, N=SUITE_N)
    out = []
    for n in args.n_periods:
        r = bloch.block_oracle(w, n)
        out.append({"alpha": al, "p": p, "a": args.a, "n_periods": n,
                    "hausdorff": r.hausdorff, "passed": r.passed})
    return out


def _validate_symmetry(args):
    sets = [(args.alpha, args.p)] if args.alpha is not None else [(2, 1), (1.5, 2), (2, 3)]
    out = []
    for al, p in sets:
        params = waves.ModelParams(al, p)
        w = waves.solve_wave(params, args.a, N=SUITE_N)
        wf = waves.solve_wave(params, -args.a, N=SUITE_N)
        for xi in (0.1, 0.25, 0.45):
            r = bloch.symmetry_check(w, xi, w_flipped=wf)
            out.append({"alpha": al, "p": p, "xi": xi, "worst": max(r.conjugate, r.negation,
                        r.axis_reflection, r.amplitude_flip), "passed": r.passed})
    return out


def _validate_discriminant(args):
    sets = [(args.alpha, args.p)] if args.alpha is not None else [(2, 1), (2, 3)]
    out = []
    for al, p in sets:
        r = critical.discriminant_scaling_check(waves.ModelParams(al, p), N=args.n_modes)
        out.append({"alpha": al, "p": p, "fitted_gamma": r.fitted_gamma, "gamma": r.gamma,
                    "relative_error": r.relative_error, "b1_relative_error": r.b1_relative_error,
                    "passed": r.passed})
    return out


def cmd_validate(args) -> int:
    runners = {"expansions": _validate_expansions, "oracle": _validate_oracle,
               "symmetry": _validate_symmetry, "discriminant": _validate_discriminant}
    chosen = SUITES if args.suite == "all" else (args.suite,)
    report = {}
    for name in chosen:
        rows = runners[name](args)
        report[name] = {"passed": all(r["passed"] for r in rows), "results": rows}
        print(f"{name}: {'PASS' if report[name]['passed'] else 'FAIL'}")
    args.out.mkdir(parents=True, exist_ok=True)
    write_json(args.out / "validate.json", report)
    failed = [k for k, v in report.items() if not v["passed"]]
    if failed:
        for k in failed:
            bad = [r for r in report[k]["results"] if not r["passed"]]
            print(f"failed suite {k}: {bad}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


COMMANDS = {"wave": cmd_wave, "stability": cmd_stability, "diagram": cmd_diagram,
            "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except FKdVError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
