"""Grid verification of the regularized-maximum smoothing.

Two checks: the uniform estimate ``max u_j <= M_theta(u) <= max u_j + eps``
for ``theta_j = eps``, and the Levi lower bound ``H(u~) >= alpha h`` given the
same bound for every ``u_j``.  Levi eigenvalues are normalized as in
:func:`levimax.levi.min_levi_eigen`, so ``alpha`` is compared directly.

Hessian margins are relative: ``(lambda - alpha) / alpha`` where ``alpha > 0``
and ``lambda - alpha`` otherwise.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fields import ScalarField
from .levi import min_levi_eigen
from .regmax import RegmaxField, ThetaVector, regmax_field

THREADS_ENV = "LEVIMAX_THREADS"
CHUNK = 256


class HypothesisViolation(ValueError):
    """A field fails the Levi lower bound: the theorem does not apply (it is not refuted)."""

    def __init__(self, index: int, point, eigen: float, alpha: float, margin: float):
        self.index = index
        self.point = list(point)
        self.eigen = eigen
        self.alpha = alpha
        self.margin = margin
        super().__init__(
            f"hypothesis fails for u{index + 1} at {self.point}: "
            f"min Levi eigenvalue {eigen:.6g} < alpha {alpha:.6g} (relative margin {margin:.3g})"
        )


def thread_count() -> int:
    try:
        cap = int(os.environ.get(THREADS_ENV, "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, os.cpu_count() or 1))


def sweep(func, points):
    """``func`` on chunks of ``points`` (at most ``LEVIMAX_THREADS`` threads), results in order."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    chunks = [points[i:i + CHUNK] for i in range(0, len(points), CHUNK)]
    workers = thread_count()
    if workers == 1 or len(chunks) == 1:
        parts = [func(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(func, chunks))
    return np.concatenate([np.atleast_1d(p) for p in parts])


@dataclass
class VerificationReport:
    name: str
    criteria: dict  # criterion -> bool
    summary: dict
    records: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.criteria.values())

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "criteria": self.criteria,
            "summary": self.summary,
            "meta": self.meta,
            "records": self.records,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        if not self.records:
            return ""
        out = io.StringIO()
        keys = list(self.records[0])
        writer = csv.writer(out, lineterminator="\n")
        d = len(self.records[0]["point"])
        writer.writerow([f"x{i + 1}" for i in range(d)] + [k for k in keys if k != "point"])
        for rec in self.records:
            writer.writerow([repr(v) for v in rec["point"]] + [_csv_value(rec[k]) for k in keys if k != "point"])
        return out.getvalue()


def _csv_value(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def smooth_max(fields, theta) -> RegmaxField:
    """``u~ = M_theta(u_1, ..., u_k)``."""
    return regmax_field(fields, theta)


def _theta(theta, k):
    if isinstance(theta, ThetaVector):
        return theta
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.size == 1:
        theta = np.repeat(theta, k)
    return ThetaVector(tuple(theta))


def estimate_report(fields, theta, grid, tol: float = 1e-8, name: str = "estimate") -> VerificationReport:
    """``0 <= u~ - max u_j <= max theta_j + tol`` on every grid node."""
    theta = _theta(theta, len(fields))
    u = smooth_max(fields, theta)
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    comps = u.components(grid)
    top = comps.max(axis=-1)
    vals = sweep(u, grid)
    gap = vals - top
    bound = max(theta.values)
    ok = (gap >= 0) & (gap <= bound + tol)
    records = [
        {"point": p.tolist(), "max_u": float(m), "u_tilde": float(v), "gap": float(g), "pass": bool(o)}
        for p, m, v, g, o in zip(grid, top, vals, gap, ok)
    ]
    summary = {
        "nodes": int(len(grid)),
        "min_gap": float(gap.min()),
        "max_gap": float(gap.max()),
        "bound": bound,
        "tol": tol,
    }
    return VerificationReport(name, {"estimate": bool(ok.all())}, summary, records, {"theta": list(theta.values)})


def verify_estimate(u1: ScalarField, u2: ScalarField, eps: float, grid, tol: float = 1e-8) -> VerificationReport:
    """Check ``max(u1, u2) <= u~ <= max(u1, u2) + eps`` with ``u~ = M_(eps, eps)(u1, u2)``."""
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    return estimate_report([u1, u2], (eps, eps), grid, tol)


def relative_margin(eigen, alpha):
    eigen = np.asarray(eigen, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    diff = eigen - alpha
    return np.where(alpha > 0, diff / np.where(alpha > 0, alpha, 1.0), diff)


def _eigen_sweep(S, u, grid, metric):
    return sweep(lambda pts: np.atleast_1d(min_levi_eigen(S, u, pts, metric)), grid)


def check_hypothesis(S, fields, alpha: ScalarField, grid, metric=None, tol: float = 0.05):
    """Per-field Levi eigenvalues and margins; raise :class:`HypothesisViolation` on the worst failure."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    a = np.broadcast_to(np.asarray(alpha(grid), dtype=float), grid.shape[:-1])
    eig = np.stack([_eigen_sweep(S, u, grid, metric) for u in fields])
    margins = relative_margin(eig, a)
    j, i = np.unravel_index(np.argmin(margins), margins.shape)
    if margins[j, i] < -tol:
        raise HypothesisViolation(int(j), grid[i].tolist(), float(eig[j, i]), float(a[i]), float(margins[j, i]))
    return eig, margins


def verify_hessian_bound(scenario) -> VerificationReport:
    """Levi lower bound for ``u~ = M_theta(u_1, ..., u_k)`` on the scenario grid.

    The hypothesis is checked first, with tolerance ``tolerances["hypothesis"]``;
    the conclusion passes iff every relative margin is ``>= -tolerances["hessian"]``.
    """
    sc = scenario
    if sc.theta is None:
        raise ValueError("scenario needs theta or epsilon")
    tol = sc.tolerances["hessian"]
    grid = sc.grid
    eig_j, hyp_margins = check_hypothesis(
        sc.structure, sc.fields, sc.alpha, grid, sc.metric, sc.tolerances["hypothesis"]
    )
    u = smooth_max(sc.fields, sc.theta)
    a = np.broadcast_to(np.asarray(sc.alpha(grid), dtype=float), grid.shape[:-1])
    top = u.components(grid).max(axis=-1)
    vals = sweep(u, grid)
    eig = _eigen_sweep(sc.structure, u, grid, sc.metric)
    margin = relative_margin(eig, a)
    ok = margin >= -tol
    hyp_min = hyp_margins.min(axis=0)
    records = [
        {
            "point": p.tolist(),
            "max_u": float(m),
            "u_tilde": float(v),
            "gap": float(v - m),
            "min_levi_eigen": float(e),
            "alpha_h": float(al),
            "margin": float(mg),
            "hypothesis_margin": float(hm),
            "pass": bool(o),
        }
        for p, m, v, e, al, mg, hm, o in zip(grid, top, vals, eig, a, margin, hyp_min, ok)
    ]
    worst = int(np.argmin(margin))
    summary = {
        "nodes": int(len(grid)),
        "min_margin": float(margin[worst]),
        "worst_point": grid[worst].tolist(),
        "min_hypothesis_margin": float(hyp_min.min()),
        "tol": tol,
        "status": "numerically consistent" if ok.all() else "inconsistent",
    }
    meta = {"theta": list(sc.theta.values), "seed": sc.seed}
    return VerificationReport(sc.name, {"hypothesis": True, "hessian_bound": bool(ok.all())}, summary, records, meta)
