"""Turning an optimal Gram matrix back into an explicit worst-case function.

A solved problem yields (G, f); factoring G = P^T P recovers concrete
gradients and a starting point, the step matrix replays the iterates, and
the interpolation machinery produces a function that actually achieves the
computed worst case.  When the factor is one-dimensional the trajectory is
matched against the known two-piece worst-case families.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .analysis import PiecewiseQuadratic1D
from .interpolation import DataSet, FunctionClass, InterpolantFunction, \
    build_interpolant, check_interpolable
from .methods import Trajectory, simulate
from .pep import STAR, PepProblem, PepSolution

__all__ = ["WorstCaseInstance", "factorize", "rebuild", "recognize_1d"]


@dataclass
class WorstCaseInstance:
    """An explicit instance achieving the computed worst case."""

    rank: int
    P: np.ndarray                       # rank x (N+2), columns [g_0 .. g_N x_0]
    dataset: DataSet                    # iterates, gradients, values, plus the optimum
    interpolant: InterpolantFunction
    trajectory: Trajectory
    achieved: float                     # criterion value re-achieved by simulation
    family: PiecewiseQuadratic1D | None = None

    @property
    def x0(self) -> np.ndarray:
        return self.P[:, -1].copy()

    def to_json(self) -> str:
        obj = {
            "rank": self.rank,
            "achieved": self.achieved,
            "dataset": json.loads(self.dataset.to_json()),
        }
        if self.family is not None:
            tau = self.family.tau if math.isfinite(self.family.tau) else None
            obj["family"] = {"tag": self.family.family, "tau": tau,
                             "mu": self.family.mu, "L": self.family.L}
        return json.dumps(obj, indent=2)

    def trajectory_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        d = self.trajectory.xs.shape[1]
        writer.writerow(["i"] + [f"x[{k}]" for k in range(d)]
                        + [f"g[{k}]" for k in range(d)] + ["f"])
        for i in range(self.trajectory.xs.shape[0]):
            writer.writerow([i] + list(self.trajectory.xs[i])
                            + list(self.trajectory.gs[i]) + [self.trajectory.fs[i]])
        return buf.getvalue()


def factorize(G: np.ndarray, rank_tol: float = 1e-6) -> tuple[np.ndarray, int]:
    """Factor a PSD matrix as P^T P with numerically minimal rank.

    Eigenvalues below ``rank_tol`` times the largest are truncated.  Each
    retained row gets a deterministic sign (first entry of significant
    magnitude made positive).  Raises on matrices indefinite beyond
    tolerance.
    """
    G = np.asarray(G, dtype=float)
    w, V = np.linalg.eigh(0.5 * (G + G.T))
    wmax = float(w.max(initial=0.0))
    if wmax <= 0.0:
        if float(w.min(initial=0.0)) < -max(rank_tol, 1e-12):
            raise ValueError("matrix is not positive semidefinite")
        return np.zeros((0, G.shape[0])), 0
    if w.min() < -rank_tol * wmax:
        raise ValueError(f"matrix indefinite beyond tolerance (min eig {w.min():.3e})")
    keep = np.flatnonzero(w > rank_tol * wmax)
    keep = keep[np.argsort(w[keep])[::-1]]
    P = (np.sqrt(w[keep])[:, None] * V[:, keep].T)
    for r in range(P.shape[0]):
        nz = np.flatnonzero(np.abs(P[r]) > 1e-12 * np.abs(P[r]).max())
        if nz.size and P[r, nz[0]] < 0:
            P[r] = -P[r]
    return P, P.shape[0]


def rebuild(prob: PepProblem, sol: PepSolution, rank_tol: float = 1e-6,
            interp_tol: float = 1e-7, recognize: bool = True) -> WorstCaseInstance:
    """Reconstruct an explicit achieving instance from a solved problem.

    Recovers gradients and x_0 from the Gram factor, replays the method to
    rebuild all iterates, checks interpolability of the resulting triples,
    constructs the interpolating function and re-achieves the criterion by
    actually simulating the method on it.
    """
    P, r = factorize(sol.G, rank_tol=rank_tol)
    N = prob.N
    if r == 0:
        P = np.zeros((1, N + 2))
        r = 1                                   # degenerate instance pinned at the optimum
    grads = [P[:, i] for i in range(N + 1)]
    x0 = P[:, N + 1]
    iterates = [prob.hv[i] @ P.T for i in range(N + 1)]
    X = np.vstack(iterates + [np.zeros(r)])
    Gm = np.vstack(grads + [np.zeros(r)])
    F = np.concatenate([sol.f, [0.0]])
    ds = DataSet.from_arrays(X, Gm, F, ids=[str(i) for i in range(N + 1)] + [STAR])
    report = check_interpolable(ds, prob.fc, tol=interp_tol)
    if not report.ok:
        raise ValueError("reconstructed data is not interpolable (solver accuracy too "
                         f"low; worst slack {report.min_slack:.3e}); retry with a looser "
                         "rank tolerance")
    fn = build_interpolant(ds, prob.fc)
    traj = simulate(prob.H, fn, x0, L=prob.fc.L)
    if prob.criterion.kind == "linear":
        # Gram of the simulated run, same column order as the program variable
        cols = np.vstack([traj.gs, traj.xs[0][None, :]])
        Gsim = cols @ cols.T
        achieved = float(prob.b @ traj.fs + np.sum(prob.C * Gsim))
    else:
        achieved = traj.criterion(prob.criterion.kind, fstar=0.0)
    inst = WorstCaseInstance(rank=r, P=P, dataset=ds, interpolant=fn,
                             trajectory=traj, achieved=achieved)
    if recognize and r == 1:
        inst.family = recognize_1d(inst, prob.fc)
    return inst


def recognize_1d(inst: WorstCaseInstance, fc: FunctionClass,
                 tol: float = 1e-5) -> PiecewiseQuadratic1D | None:
    """Match a rank-one instance against the two-piece 1-D families.

    Fits the core radius from points on the outer (flat) piece, classifies
    each sample, and accepts when the relative residual of values and
    gradients stays below ``tol``.  Returns None when no family fits.
    """
    if inst.rank != 1:
        return None
    mu, L = fc.mu, fc.L
    xs = inst.trajectory.xs[:, 0]
    gs = inst.trajectory.gs[:, 0]
    fs = inst.trajectory.fs
    scale = max(1.0, np.abs(xs).max())
    inner = np.abs(gs - L * xs) <= tol * scale * L
    if np.all(inner):
        cand = PiecewiseQuadratic1D(mu=mu, L=L, tau=math.inf, family="f2")
        return cand if _family_residual(cand, xs, gs, fs) <= tol else None
    outer = ~inner
    taus = (gs[outer] - mu * xs[outer]) * np.sign(xs[outer]) / (L - mu)
    tau = float(np.median(taus))
    if tau < 0:
        return None
    family = "f1" if mu == 0.0 else "f1tau"
    cand = PiecewiseQuadratic1D(mu=mu, L=L, tau=tau, family=family)
    return cand if _family_residual(cand, xs, gs, fs) <= tol else None


def _family_residual(fn: PiecewiseQuadratic1D, xs, gs, fs) -> float:
    worst = 0.0
    for x, g, f in zip(xs, gs, fs):
        val, grad = fn.value_and_grad(np.array([x]))
        scale = max(1.0, abs(f), abs(g))
        worst = max(worst, abs(val - f) / scale, abs(grad[0] - g) / scale)
    return worst
