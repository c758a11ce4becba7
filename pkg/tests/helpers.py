"""Shared test utilities: random admissible data sets and an independent
nonlinear brute-force maximizer used as an oracle for the conic pipeline."""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from pepkit.analysis import PiecewiseQuadratic1D, tau_gm
from pepkit.interpolation import DataSet, FunctionClass, InterpolantFunction
from pepkit.methods import StepMatrix, simulate


def random_function(rng, d: int, fc: FunctionClass, n_pieces: int | None = None):
    """A random member of the class, built as a hull of random quadratic pieces."""
    n = n_pieces or int(rng.integers(1, 6))
    B = rng.normal(size=(n, d)) * rng.uniform(0.5, 2.0)
    dvec = rng.normal(size=n)
    return InterpolantFunction(fc, B, dvec)


def sample_dataset(rng, fn, n_points: int, spread: float = 2.0) -> DataSet:
    """Sample exact (point, gradient, value) triples from an evaluable function."""
    P = rng.normal(size=(n_points, fn.dim)) * spread
    vals, grads = [], []
    for p in P:
        v, g = fn.value_and_grad(p)
        vals.append(v)
        grads.append(g)
    return DataSet.from_arrays(P, np.array(grads), vals)


def random_interpolable_set(rng, d: int | None = None,
                            fc: FunctionClass | None = None,
                            n_points: int | None = None):
    """(data set, class, generating function) with guaranteed interpolability."""
    d = d or int(rng.integers(1, 4))
    if fc is None:
        mu = float(rng.uniform(0.0, 1.0))
        fc = FunctionClass(mu, mu + float(rng.uniform(0.3, 3.0)))
    n_points = n_points or int(rng.integers(1, 6))
    fn = random_function(rng, d, fc)
    return sample_dataset(rng, fn, n_points), fc, fn


# -- brute-force worst-case oracle --------------------------------------------

def _pair_slack(fc: FunctionClass, xi, gi, fi, xj, gj, fj) -> float:
    dx = xi - xj
    dg = gi - gj
    lhs = fi - fj - float(gj @ dx)
    if fc.mu == 0.0:
        return lhs - float(dg @ dg) / (2.0 * fc.L)
    kap = fc.mu / fc.L
    rhs = (float(dg @ dg) / fc.L + fc.mu * float(dx @ dx)
           - 2.0 * kap * float(dg @ dx)) / (2.0 * (1.0 - kap))
    return lhs - rhs


def brute_force_worst_case(fc: FunctionClass, H: StepMatrix, R: float,
                           kind: str = "obj", n_random: int = 20, seed: int = 0,
                           dim: int | None = None) -> float:
    """Directly maximize the criterion over data triples with a multistart NLP.

    Completely independent of the conic pipeline: decision variables are the
    starting point, the gradients and the values; iterates are unrolled from
    the step matrix; the admissibility inequalities and the radius cap are
    enforced as explicit nonlinear constraints.  Returns the best feasible
    value found (a lower bound on the true worst case).
    """
    N = H.N
    d = dim or (N + 2)
    L = fc.L
    ng = N + 1

    def unpack(z):
        x0 = z[:d]
        gs = z[d: d + ng * d].reshape(ng, d)
        fs = z[d + ng * d:]
        return x0, gs, fs

    def iterates(x0, gs):
        xs = [x0]
        for i in range(1, N + 1):
            xs.append(x0 - (H.h[i - 1, :i] / L) @ gs[:i])
        return xs

    def objective(z):
        x0, gs, fs = unpack(z)
        if kind == "obj":
            return -fs[N]
        if kind == "grad":
            return -float(gs[N] @ gs[N])
        if kind == "dist":
            xs = iterates(x0, gs)
            return -float(xs[N] @ xs[N])
        raise ValueError(kind)

    def constraints(z):
        x0, gs, fs = unpack(z)
        xs = iterates(x0, gs)
        out = [R * R - float(x0 @ x0)]
        pts = [(xs[i], gs[i], fs[i]) for i in range(N + 1)]
        pts.append((np.zeros(d), np.zeros(d), 0.0))
        for a in range(len(pts)):
            for b in range(len(pts)):
                if a != b:
                    out.append(_pair_slack(fc, *pts[a], *pts[b]))
        return np.array(out)

    def family_start(fam_kind):
        if fam_kind == "f2":
            fn = PiecewiseQuadratic1D(fc.mu, L, np.inf)
        else:
            m = 2 * N if kind == "obj" else max(N, 1)
            tau = R * (1.0 / (m * np.mean(np.diag(H.h)) + 1.0) if fc.mu == 0.0
                       else tau_gm(max(N, 1), float(np.mean(np.diag(H.h))) or 1.0,
                                   fc.mu / L))
            tau = min(max(tau, 1e-6), R)
            fn = PiecewiseQuadratic1D(fc.mu, L, tau)
        traj = simulate(H, fn.value_and_grad, np.array([R]), L=L) if N > 0 else None
        z = np.zeros(d + ng * d + ng)
        z[0] = R
        if N == 0:
            v, g = fn.value_and_grad(np.array([R]))
            z[d] = g[0]
            z[d + ng * d] = v
        else:
            for i in range(ng):
                z[d + i * d] = traj.gs[i, 0]
            z[d + ng * d:] = traj.fs
        return z

    rng = np.random.default_rng(seed)
    nvar = d + ng * d + ng
    starts = [family_start("f2")]
    if N >= 1:
        try:
            starts.append(family_start("f1"))
        except ValueError:
            pass
    starts += [rng.normal(size=nvar) * R for _ in range(n_random)]

    best = -np.inf
    cons = [{"type": "ineq", "fun": constraints}]
    for z0 in starts:
        res = minimize(objective, z0, method="SLSQP", constraints=cons,
                       options={"maxiter": 400, "ftol": 1e-12})
        if res.x is None:
            continue
        viol = constraints(res.x).min()
        if viol >= -1e-9:
            best = max(best, -objective(res.x))
    return float(best)
