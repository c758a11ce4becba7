"""Interpolation of finite data by smooth (strongly) convex functions.

A data set is a finite collection of triples (x_i, g_i, f_i); it is
interpolable by the class of L-smooth mu-strongly convex functions when
there exists a member of that class taking value f_i with (sub)gradient
g_i at every x_i.  This module decides interpolability, implements the
curvature-subtraction / conjugation transforms that reduce the general
problem to plain convex interpolation, and constructs explicit
interpolating functions that can be evaluated anywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "FunctionClass",
    "DataTriple",
    "DataSet",
    "InterpolationReport",
    "InterpolantFunction",
    "check_interpolable",
    "curvature_subtract",
    "conjugate_transform",
    "build_interpolant",
    "eval_interpolant",
    "naive_lipschitz_conditions",
    "naive_quadratic_upper_conditions",
]


@dataclass(frozen=True)
class FunctionClass:
    """Parameters (mu, L) of the class of L-smooth mu-strongly convex functions.

    ``L`` may be ``math.inf`` (no smoothness requirement); ``mu`` is always
    finite.  Requires 0 <= mu < L.
    """

    mu: float
    L: float

    def __post_init__(self):
        if not (0.0 <= self.mu < self.L):
            raise ValueError(f"need 0 <= mu < L, got mu={self.mu}, L={self.L}")

    @property
    def kappa(self) -> float:
        """Inverse condition number mu/L (0 when L is infinite)."""
        if math.isinf(self.L):
            return 0.0
        return self.mu / self.L

    @property
    def smooth(self) -> bool:
        return math.isfinite(self.L)


@dataclass(frozen=True)
class DataTriple:
    """A point, a (sub)gradient at that point, and the function value there."""

    x: np.ndarray
    g: np.ndarray
    f: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        if x.ndim != 1 or g.ndim != 1 or x.shape != g.shape:
            raise ValueError("x and g must be 1-d arrays of equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "f", float(self.f))

    @property
    def dim(self) -> int:
        return self.x.shape[0]


class DataSet:
    """An indexed collection of data triples sharing one ambient dimension."""

    def __init__(self, triples: Sequence[DataTriple], ids: Sequence[str] | None = None):
        triples = list(triples)
        if not triples:
            raise ValueError("empty data set")
        d = triples[0].dim
        if any(t.dim != d for t in triples):
            raise ValueError("all triples must share the same dimension")
        if ids is None:
            ids = [str(i) for i in range(len(triples))]
        ids = [str(i) for i in ids]
        if len(set(ids)) != len(ids):
            raise ValueError("indices must be unique")
        if len(ids) != len(triples):
            raise ValueError("one id per triple required")
        self.ids = ids
        self.X = np.array([t.x for t in triples], dtype=float)
        self.G = np.array([t.g for t in triples], dtype=float)
        self.F = np.array([t.f for t in triples], dtype=float)
        for a in (self.X, self.G, self.F):
            a.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def triple(self, i: int) -> DataTriple:
        return DataTriple(self.X[i].copy(), self.G[i].copy(), float(self.F[i]))

    @classmethod
    def from_arrays(cls, X, G, F, ids=None) -> "DataSet":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        G = np.atleast_2d(np.asarray(G, dtype=float))
        F = np.asarray(F, dtype=float).ravel()
        return cls([DataTriple(x, g, f) for x, g, f in zip(X, G, F)], ids=ids)

    def to_json(self) -> str:
        obj = {
            "d": self.dim,
            "triples": [
                {"id": self.ids[i], "x": self.X[i].tolist(), "g": self.G[i].tolist(),
                 "f": float(self.F[i])}
                for i in range(len(self))
            ],
        }
        return json.dumps(obj, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DataSet":
        obj = json.loads(text)
        d = int(obj["d"])
        ids, triples = [], []
        for rec in obj["triples"]:
            t = DataTriple(np.asarray(rec["x"], dtype=float),
                           np.asarray(rec["g"], dtype=float), float(rec["f"]))
            if t.dim != d:
                raise ValueError(f"triple {rec.get('id')} has dimension {t.dim}, expected {d}")
            ids.append(str(rec["id"]))
            triples.append(t)
        return cls(triples, ids=ids)


class InterpolationReport(NamedTuple):
    ok: bool
    violations: list[tuple[str, str]]
    min_slack: float


def curvature_subtract(ds: DataSet, mu: float) -> DataSet:
    """Map each (x, g, f) to (x, g - mu*x, f - (mu/2)|x|^2).

    Shifts the class parameters down by ``mu``; a negative ``mu`` inverts
    the transform.
    """
    X = ds.X
    return DataSet.from_arrays(X, ds.G - mu * X, ds.F - 0.5 * mu * np.sum(X * X, axis=1),
                               ids=ds.ids)


def conjugate_transform(ds: DataSet) -> DataSet:
    """Map each (x, g, f) to (g, x, <x, g> - f); an involution.

    Swaps the roles of points and gradients, turning smoothness into
    strong convexity of the transformed data and vice versa.
    """
    return DataSet.from_arrays(ds.G, ds.X, np.sum(ds.X * ds.G, axis=1) - ds.F, ids=ds.ids)


def _pair_slacks(ds: DataSet, fc: FunctionClass) -> np.ndarray:
    """Slack of the interpolation inequality for every ordered pair (i, j).

    Entry [i, j] is nonnegative iff the pair satisfies the condition for
    membership data of the class ``fc``.  The diagonal is zero.
    """
    X, G, F = ds.X, ds.G, ds.F
    dX = X[:, None, :] - X[None, :, :]          # x_i - x_j
    dG = G[:, None, :] - G[None, :, :]
    dF = F[:, None] - F[None, :]                # f_i - f_j
    lin = np.einsum("jd,ijd->ij", G, dX)        # g_j . (x_i - x_j)
    lhs = dF - lin
    mu, L = fc.mu, fc.L
    if not fc.smooth:
        # nonsmooth class: subgradient inequality with strong-convexity term
        rhs = 0.5 * mu * np.sum(dX * dX, axis=2)
    elif mu == 0.0:
        rhs = np.sum(dG * dG, axis=2) / (2.0 * L)
    else:
        kappa = mu / L
        cross = np.sum(dG * dX, axis=2)
        rhs = (np.sum(dG * dG, axis=2) / L + mu * np.sum(dX * dX, axis=2)
               - 2.0 * kappa * cross) / (2.0 * (1.0 - kappa))
    return lhs - rhs


def _pair_scales(ds: DataSet, fc: FunctionClass) -> np.ndarray:
    gg = np.sum(ds.G * ds.G, axis=1)
    if fc.smooth:
        gg = gg / fc.L
    else:
        gg = np.zeros_like(gg)
    per_point = np.maximum.reduce([np.ones_like(gg), np.abs(ds.F), gg])
    return np.maximum(per_point[:, None], per_point[None, :])


def check_interpolable(ds: DataSet, fc: FunctionClass, tol: float = 1e-9) -> InterpolationReport:
    """Decide whether ``ds`` can be interpolated by a member of ``fc``.

    Checks the pairwise inequality characterizing interpolability for every
    ordered pair of distinct indices, allowing an additive slack of
    ``tol`` scaled by the magnitude of the data involved.  Returns the
    decision together with the list of violated (id_i, id_j) pairs.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    slacks = _pair_slacks(ds, fc)
    cutoff = -tol * _pair_scales(ds, fc)
    n = len(ds)
    off = ~np.eye(n, dtype=bool)
    bad = (slacks < cutoff) & off
    violations = [(ds.ids[i], ds.ids[j]) for i, j in np.argwhere(bad)]
    min_slack = float(slacks[off].min()) if n > 1 else 0.0
    return InterpolationReport(not violations, violations, min_slack)


def naive_lipschitz_conditions(ds: DataSet, L: float) -> bool:
    """Pairwise subgradient inequalities plus pairwise gradient Lipschitz bounds.

    These conditions are necessary but not sufficient for smooth convex
    interpolability; they exist here so tests can exhibit data that slips
    through them while failing the exact check.
    """
    X, G, F = ds.X, ds.G, ds.F
    dX = X[:, None, :] - X[None, :, :]
    lin = np.einsum("jd,ijd->ij", G, dX)
    sub_ok = np.all(F[:, None] - F[None, :] - lin >= -1e-12)
    dG = G[:, None, :] - G[None, :, :]
    lip_ok = np.all(np.sqrt(np.sum(dG * dG, axis=2)) <= L * np.sqrt(np.sum(dX * dX, axis=2)) + 1e-12)
    return bool(sub_ok and lip_ok)


def naive_quadratic_upper_conditions(ds: DataSet, L: float) -> bool:
    """Pairwise subgradient inequalities plus pairwise quadratic upper bounds.

    Like :func:`naive_lipschitz_conditions`, a necessary-only discretization
    kept for negative testing.
    """
    X, G, F = ds.X, ds.G, ds.F
    dX = X[:, None, :] - X[None, :, :]
    lin = np.einsum("jd,ijd->ij", G, dX)
    dF = F[:, None] - F[None, :]
    sub_ok = np.all(dF - lin >= -1e-12)
    upper_ok = np.all(dF - lin - 0.5 * L * np.sum(dX * dX, axis=2) <= 1e-12)
    return bool(sub_ok and upper_ok)


class InterpolantFunction:
    """An explicit interpolating function, evaluable anywhere.

    For a finite-smoothness class the function is the convex hull of
    quadratic pieces with common curvature L - mu, plus the minimal
    curvature term (mu/2)|x|^2.  Piece i is the quadratic
    ``q_i(x) = (L-mu)/2 |x - b_i|^2 - d_i`` (vertex form), and the hull at a
    query point x is ``min over simplex weights w of
    (L-mu)/2 |x - B^T w|^2 - d.w``.  In one dimension the hull is resolved
    analytically from the lower convex envelope of the points (b_i, -d_i);
    in higher dimensions a small quadratic program is solved per query.

    When L is infinite the function degenerates to a pointwise maximum of
    affine pieces (zero curvature in the conjugate space) plus the
    (mu/2)|x|^2 term.
    """

    def __init__(self, fc: FunctionClass, B: np.ndarray, d: np.ndarray,
                 source: DataSet | None = None, strategy: str | None = None):
        self.fc = fc
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        self.d = np.asarray(d, dtype=float).ravel()
        self.source = source
        if strategy is None:
            if not fc.smooth:
                strategy = "max-affine"
            elif self.B.shape[1] == 1:
                strategy = "exact-1d"
            else:
                strategy = "hull-program"
        self.strategy = strategy
        if strategy == "exact-1d" and fc.smooth:
            self._hull = _lower_hull_1d(self.B[:, 0], -self.d)

    @property
    def dim(self) -> int:
        return self.B.shape[1]

    def value_and_grad(self, x) -> tuple[float, np.ndarray]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise ValueError(f"point has dimension {x.shape}, expected ({self.dim},)")
        mu = self.fc.mu
        if self.strategy == "max-affine":
            vals = self.d + self.B @ x          # here B holds slopes, d the offsets
            # ties at kinks resolve to the lowest piece index
            j = int(np.flatnonzero(vals >= vals.max() - 1e-12)[0])
            val = float(vals.max() + 0.5 * mu * (x @ x))
            grad = self.B[j] + mu * x
            return val, grad
        c = self.fc.L - mu
        if self.strategy == "exact-1d":
            # the hull ordinate is already -d.w, so it adds to the quadratic part
            z, env = _envelope_argmin_1d(self._hull, float(x[0]), c)
            hull_val = 0.5 * c * (x[0] - z) ** 2 + env
            grad = np.array([c * (x[0] - z) + mu * x[0]])
            return float(hull_val + 0.5 * mu * x[0] ** 2), grad
        w = _simplex_qp(self.B, self.d, x, c)
        z = self.B.T @ w
        hull_val = 0.5 * c * float((x - z) @ (x - z)) - float(self.d @ w)
        grad = c * (x - z) + mu * x
        return float(hull_val + 0.5 * mu * (x @ x)), grad

    def __call__(self, x):
        return self.value_and_grad(x)


def eval_interpolant(fn: InterpolantFunction, x) -> tuple[float, np.ndarray]:
    """Value and gradient of a constructed interpolant at ``x``."""
    return fn.value_and_grad(x)


def _transformed_pieces(ds: DataSet, fc: FunctionClass) -> tuple[np.ndarray, np.ndarray]:
    """Vertex/offset data (b_i, d_i) of the hull pieces for a finite-L class."""
    c = fc.L - fc.mu
    mu = fc.mu
    Gs = ds.G - mu * ds.X                      # minimal-curvature-subtracted gradients
    B = ds.X - Gs / c
    d = 0.5 * mu * np.sum(ds.X * ds.X, axis=1) - ds.F + np.sum(Gs * Gs, axis=1) / (2.0 * c)
    return B, d


def build_interpolant(ds: DataSet, fc: FunctionClass, tol: float = 1e-8) -> InterpolantFunction:
    """Construct an interpolating function for an interpolable data set.

    Raises ``ValueError`` when the set is not interpolable for ``fc``.
    """
    report = check_interpolable(ds, fc, tol=tol)
    if not report.ok:
        raise ValueError(f"data set is not interpolable for (mu={fc.mu}, L={fc.L}); "
                         f"violated pairs: {report.violations}")
    if not fc.smooth:
        sub = curvature_subtract(ds, fc.mu)
        # affine pieces: slope g~_j, offset f~_j - g~_j . x_j
        return InterpolantFunction(fc, sub.G, sub.F - np.sum(sub.G * sub.X, axis=1),
                                   source=ds, strategy="max-affine")
    B, d = _transformed_pieces(ds, fc)
    return InterpolantFunction(fc, B, d, source=ds)


# -- hull evaluation helpers -------------------------------------------------

def _lower_hull_1d(b: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lower convex hull of the planar points (b_i, y_i), left to right."""
    order = np.lexsort((y, b))
    pts: list[tuple[float, float]] = []
    for i in order:
        p = (float(b[i]), float(y[i]))
        if pts and abs(pts[-1][0] - p[0]) < 1e-15:
            continue                            # keep the lowest point at equal abscissae
        while len(pts) >= 2:
            o, a = pts[-2], pts[-1]
            cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
            if cross <= 0.0:                    # middle point not strictly below the chord
                pts.pop()
            else:
                break
        pts.append(p)
    arr = np.asarray(pts, dtype=float)
    return arr[:, 0], arr[:, 1]


def _envelope_argmin_1d(hull: tuple[np.ndarray, np.ndarray], x: float, c: float) -> tuple[float, float]:
    """Minimize c/2 (x - z)^2 + e(z) with e the piecewise-linear lower hull.

    Returns the minimizing z and e(z); e takes value -d_i at hull vertices.
    Outside the hull abscissa range the nearest endpoint is optimal.
    """
    zs, ys = hull
    if len(zs) == 1:
        return float(zs[0]), float(ys[0])
    best_val, best = math.inf, (float(zs[0]), float(ys[0]))
    for k in range(len(zs) - 1):
        z0, z1 = zs[k], zs[k + 1]
        y0, y1 = ys[k], ys[k + 1]
        s = (y1 - y0) / (z1 - z0)
        z = min(max(x - s / c, z0), z1)
        e = y0 + s * (z - z0)
        val = 0.5 * c * (x - z) ** 2 + e
        if val < best_val:
            best_val, best = val, (float(z), float(e))
    return best


def _simplex_qp(B: np.ndarray, d: np.ndarray, x: np.ndarray, c: float) -> np.ndarray:
    """Minimize c/2 |x - B^T w|^2 - d.w over the probability simplex."""
    from cvxopt import matrix, solvers

    n = B.shape[0]
    if n == 1:
        return np.ones(1)
    P = matrix(c * (B @ B.T) + 1e-12 * np.eye(n))
    q = matrix(-(c * (B @ x) + d))
    Gm = matrix(-np.eye(n))
    h = matrix(np.zeros(n))
    A = matrix(np.ones((1, n)))
    bvec = matrix(np.ones(1))
    sol = solvers.qp(P, q, Gm, h, A, bvec,
                     options={"show_progress": False, "abstol": 1e-12,
                              "reltol": 1e-12, "feastol": 1e-10})
    if sol["status"] not in ("optimal", "unknown"):
        raise RuntimeError(f"hull program failed with status {sol['status']}")
    w = np.asarray(sol["x"]).ravel()
    w = np.maximum(w, 0.0)
    w /= w.sum()
    return _polish_simplex_qp(B, d, x, c, w)


def _polish_simplex_qp(B, d, x, c, w, tol=1e-11):
    """Active-set refinement of a simplex QP solution to near machine precision.

    Alternates a KKT solve on the current active set with primal drops
    (negative weights) and dual adds (violated stationarity), warm-started
    from the interior-point answer.
    """
    n = len(w)

    def objective(weights):
        z = B.T @ weights
        return 0.5 * c * float((x - z) @ (x - z)) - float(d @ weights)

    active = sorted(np.flatnonzero(w > 1e-7).tolist()) or [int(np.argmax(w))]
    best_w, best_val = w, objective(w)
    for _ in range(4 * n + 8):
        BA = B[active]
        m = len(active)
        K = np.zeros((m + 1, m + 1))
        K[:m, :m] = c * (BA @ BA.T)
        K[:m, m] = -1.0
        K[m, :m] = 1.0
        rhs = np.concatenate([c * (BA @ x) + d[active], [1.0]])
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        wa, nu = sol[:m], sol[m]
        if wa.min() < -tol:
            active.pop(int(np.argmin(wa)))
            if not active:
                break
            continue
        cand = np.zeros(n)
        cand[active] = np.maximum(wa, 0.0)
        s = cand.sum()
        if s <= 0:
            break
        cand /= s
        val = objective(cand)
        if val < best_val:
            best_w, best_val = cand, val
        z = B.T @ cand
        grads = -c * (B @ (x - z)) - d          # per-piece stationarity values
        reduced = grads - nu
        candidates = [i for i in range(n) if i not in active and reduced[i] < -1e-12]
        if not candidates:
            return cand
        active.append(min(candidates, key=lambda i: reduced[i]))
        active.sort()
    return best_w
