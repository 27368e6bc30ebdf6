"""Parameter sweeps over (alpha, p) and their on-disk records."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bloch import default_xi_grid, stability_sweep
from .critical import critical_power, gamma_coefficient
from .errors import DomainError, FKdVError
from .waves import ModelParams, solve_wave

VERDICTS = ("stable", "unstable", "indeterminate")


@dataclass
class SweepConfig:
    alpha_range: tuple = (0.75, 5.5, 40)
    p_range: tuple = (1.0, 2.5, 40)
    amplitudes: list = field(default_factory=lambda: [0.05])
    b: float = 0.0
    xi_count: int = 64
    xi_refine: bool = True
    truncation: int = 32
    output_dir: str = "."
    threads: int = 1

    def __post_init__(self):
        for name in ("alpha_range", "p_range"):
            lo, hi, n = getattr(self, name)
            if int(n) < 1 or hi < lo:
                raise DomainError(f"{name} must be nonempty with count >= 1")
        if not self.amplitudes:
            raise DomainError("amplitudes must be nonempty")
        if self.truncation < 8:
            raise DomainError("truncation N must be at least 8")
        if self.xi_count < 1 or self.threads < 1:
            raise DomainError("xi_count and threads must be at least 1")

    @property
    def alphas(self) -> np.ndarray:
        lo, hi, n = self.alpha_range
        return np.linspace(lo, hi, int(n))

    @property
    def ps(self) -> np.ndarray:
        lo, hi, n = self.p_range
        return np.linspace(lo, hi, int(n))

    def xi_grid(self) -> np.ndarray:
        return default_xi_grid(self.xi_count, self.xi_refine)


@dataclass
class SweepRecord:
    alpha: float
    p: float
    a: float
    b: float
    k_alpha: float
    growth_rate: float
    worst_xi: float
    verdict: str
    gamma_sign: int
    p_star_at_alpha: float
    runtime_ms: float
    error: str = ""

    def key(self):
        return (self.alpha, self.p, self.a, self.b)


def run_cell(alpha: float, p: float, a: float, b: float, *, N: int = 32,
             xi_grid=None, convergence_check: bool = True,
             keep_verdict: bool = False, threads: int = 1):
    """Solve for the wave and classify its spectrum; failures become indeterminate records."""
    t0 = time.perf_counter()
    params = ModelParams(alpha, p)
    pstar = critical_power(alpha)
    gsign = int(np.sign(gamma_coefficient(alpha, p)))
    verdict = None
    try:
        w = solve_wave(params, a, b, N=N)
        verdict = stability_sweep(w, xi_grid, N, convergence_check=convergence_check,
                                   threads=threads)
        rec = SweepRecord(alpha, p, a, b, w.wavenumber_alpha, verdict.growth_rate,
                          verdict.worst_xi, verdict.classification, gsign, pstar, 0.0)
    except FKdVError as exc:
        rec = SweepRecord(alpha, p, a, b, math.nan, math.nan, math.nan, "indeterminate",
                          gsign, pstar, 0.0, error=str(exc))
    rec.k_alpha, rec.growth_rate, rec.worst_xi = map(float, (rec.k_alpha, rec.growth_rate, rec.worst_xi))
    rec.runtime_ms = 1e3 * (time.perf_counter() - t0)
    return (rec, verdict) if keep_verdict else rec


def run_sweep(cfg: SweepConfig, on_record=None, convergence_check: bool = False) -> list:
    """All (alpha, p, a) cells of ``cfg``; ``on_record`` sees each record in grid order."""
    grid = cfg.xi_grid()
    cells = [(float(al), float(p), float(a)) for al in cfg.alphas for p in cfg.ps
             for a in cfg.amplitudes]

    def one(cell):
        al, p, a = cell
        return run_cell(al, p, a, cfg.b, N=cfg.truncation, xi_grid=grid,
                        convergence_check=convergence_check)

    out = []
    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as ex:
            it = ex.map(one, cells)
            for rec in it:
                out.append(rec)
                if on_record:
                    on_record(rec)
    else:
        for c in cells:
            rec = one(c)
            out.append(rec)
            if on_record:
                on_record(rec)
    return out


RECORD_FIELDS = [f for f in SweepRecord.__dataclass_fields__]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class RecordWriter:
    """CSV writer that flushes after each row."""

    def __init__(self, path, fields):
        self.fh = open(path, "w", newline="", encoding="utf-8")
        self.fields = fields
        self.w = csv.writer(self.fh)
        self.w.writerow(fields)
        self.fh.flush()

    def write(self, rec):
        d = asdict(rec) if not isinstance(rec, dict) else rec
        self.w.writerow([_fmt(d[k]) for k in self.fields])
        self.fh.flush()

    def close(self):
        self.fh.close()


def boundary_deviation(records, alphas, ps) -> dict:
    """Worst distance, in p-grid cells, between a verdict and the side of ``p*`` it should lie on.

    A stable cell above the curve, an unstable cell below it, or an
    indeterminate cell anywhere counts by its distance to ``p*(alpha)``.
    """
    dp = float(ps[1] - ps[0]) if len(ps) > 1 else 1.0
    worst = 0.0
    offenders = []
    for r in records:
        gap = (r.p - critical_power(r.alpha)) / dp
        if r.verdict == "stable":
            bad = max(gap, 0.0)
        elif r.verdict == "unstable":
            # below alpha = 1 every wave is unstable regardless of p*
            bad = 0.0 if r.alpha < 1 else max(-gap, 0.0)
        else:
            bad = abs(gap)
        if bad > 0:
            offenders.append((r.alpha, r.p, r.verdict, bad))
        worst = max(worst, bad)
    offenders.sort(key=lambda t: -t[3])
    return {"max_cells": worst, "cell_width": dp, "offenders": offenders[:20],
            "passed": worst < 1.0}


COLORS = {"stable": "#9ecae1", "unstable": "#fcbba1", "indeterminate": "#d9d9d9"}


def diagram_svg(records, alphas, ps, curve, width=640, height=480) -> str:
    """Stability diagram: shaded verdict cells, the curve ``p*(alpha)`` and axes."""
    m = 60
    a0, a1 = float(alphas[0]), float(alphas[-1])
    p0, p1 = float(ps[0]), float(ps[-1])
    da = (a1 - a0) / max(len(alphas) - 1, 1) or 1.0
    dp = (p1 - p0) / max(len(ps) - 1, 1) or 1.0
    xlo, xhi, ylo, yhi = a0 - da / 2, a1 + da / 2, p0 - dp / 2, p1 + dp / 2
    sx = lambda x: m + (x - xlo) / (xhi - xlo) * (width - 2 * m)
    sy = lambda y: height - m - (y - ylo) / (yhi - ylo) * (height - 2 * m)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    cw = sx(xlo + da) - sx(xlo)
    ch = sy(ylo) - sy(ylo + dp)
    for r in records:
        x, y = sx(r.alpha - da / 2), sy(r.p + dp / 2)
        out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw:.2f}" height="{ch:.2f}" '
                   f'fill="{COLORS[r.verdict]}"/>')
    pts = [(sx(a), sy(q)) for a, q in curve if ylo <= q <= yhi]
    if pts:
        path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="black" stroke-width="2"/>')
    out.append(f'<rect x="{m}" y="{m}" width="{width - 2 * m}" height="{height - 2 * m}" '
               'fill="none" stroke="black"/>')
    for t in np.linspace(xlo, xhi, 6):
        out.append(f'<text x="{sx(t):.2f}" y="{height - m + 16}" text-anchor="middle">{t:.2f}</text>')
    for t in np.linspace(ylo, yhi, 6):
        out.append(f'<text x="{m - 6}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:.2f}</text>')
    out.append(f'<text x="{width / 2}" y="{height - 16}" text-anchor="middle">alpha</text>')
    out.append(f'<text x="16" y="{height / 2}" transform="rotate(-90 16 {height / 2})" '
               'text-anchor="middle">p</text>')
    for j, (name, col) in enumerate(COLORS.items()):
        lx = m + 10 + 110 * j
        out.append(f'<rect x="{lx}" y="20" width="12" height="12" fill="{col}" stroke="black"/>')
        out.append(f'<text x="{lx + 18}" y="31">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n",
                          encoding="utf-8")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, ModelParams):
        return {"alpha": o.alpha, "p": o.p}
    raise TypeError(type(o).__name__)
