"""Solver-agnostic conic form of the worst-case program and solver adapters.

A :class:`ConicProgram` has one PSD matrix block, a block of free scalars,
and linear inequality rows ``a_f . f + <A_G, G> <= rhs``; the objective
``obj_f . f + <obj_G, G>`` is maximized.  Adapters translate this into the
embedded interior-point backends (cvxopt by default, clarabel optionally)
and translate primal/dual solutions back, undoing the per-row scaling
applied for conditioning.  Select a backend with the ``PEPKIT_SOLVER``
environment variable or the ``solver=`` argument.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConicRow",
    "ConicProgram",
    "ConicSolution",
    "to_conic",
    "solve_conic",
    "trace_polish_program",
    "available_solvers",
]

DEFAULT_SOLVER = "cvxopt"
RESIDUAL_LIMIT = 1e-6


@dataclass
class ConicRow:
    """One inequality a_f . f + <A_G, G> <= rhs, with a provenance tag."""

    af: np.ndarray
    AG: np.ndarray
    rhs: float
    tag: tuple

    def scale(self) -> float:
        m = max(np.max(np.abs(self.AG), initial=0.0),
                np.max(np.abs(self.af), initial=0.0), abs(self.rhs))
        return m if m > 0 else 1.0


@dataclass
class ConicProgram:
    """Max obj_f . f + <obj_G, G> over the rows, G >= 0, f free."""

    psd_dim: int
    n_free: int
    obj_f: np.ndarray
    obj_G: np.ndarray
    rows: list[ConicRow] = field(default_factory=list)

    def row_by_tag(self, tag) -> int:
        for k, row in enumerate(self.rows):
            if row.tag == tag:
                return k
        raise KeyError(tag)


@dataclass
class ConicSolution:
    status: str
    value: float
    f: np.ndarray
    G: np.ndarray
    t: float | None
    lam: dict                   # (i, j) -> multiplier of the pair rows
    tau: float
    eta: dict                   # iterate -> multiplier of min-gradient rows
    S: np.ndarray               # dual slack matrix of the PSD block
    row_duals: np.ndarray       # multiplier per row, program order
    residuals: dict
    solver: str
    dual_value: float


def to_conic(prob) -> ConicProgram:
    """Encode an assembled worst-case problem in the standard conic form.

    All inequalities are oriented as <=; the min-gradient criterion adds one
    auxiliary free scalar t (last position) and one row t - G_ii <= 0 per
    iterate.
    """
    N = prob.N
    n = prob.order
    mingrad = prob.criterion.kind == "mingrad"
    n_free = N + 1 + (1 if mingrad else 0)
    rows: list[ConicRow] = []
    for pair in prob.pairs:
        af = np.zeros(n_free)
        af[: N + 1] = prob.f_coeff(pair)
        rows.append(ConicRow(af=af, AG=prob.A[pair], rhs=0.0, tag=("pair",) + pair))
    rows.append(ConicRow(af=np.zeros(n_free), AG=prob.A_R, rhs=prob.R ** 2,
                         tag=("radius",)))
    obj_f = np.zeros(n_free)
    obj_G = prob.C.copy()
    if mingrad:
        for i in range(N + 1):
            AG = np.zeros((n, n))
            AG[i, i] = -1.0
            af = np.zeros(n_free)
            af[-1] = 1.0
            rows.append(ConicRow(af=af, AG=AG, rhs=0.0, tag=("mingrad", i)))
        obj_f[-1] = 1.0
    else:
        obj_f[: N + 1] = prob.b
    return ConicProgram(psd_dim=n, n_free=n_free, obj_f=obj_f, obj_G=obj_G, rows=rows)


def trace_polish_program(cp: ConicProgram, opt_value: float,
                         eps: float = 1e-9) -> ConicProgram:
    """Secondary program maximizing trace(G) over the (near-)optimal face."""
    rows = list(cp.rows)
    rows.append(ConicRow(af=-cp.obj_f.copy(), AG=-cp.obj_G.copy(),
                         rhs=-(opt_value - eps), tag=("polish",)))
    return ConicProgram(psd_dim=cp.psd_dim, n_free=cp.n_free,
                        obj_f=np.zeros(cp.n_free), obj_G=np.eye(cp.psd_dim),
                        rows=rows)


def available_solvers() -> list[str]:
    out = ["cvxopt"]
    try:
        import clarabel  # noqa: F401
        out.append("clarabel")
    except ImportError:
        pass
    return out


def solve_conic(cp: ConicProgram, solver: str | None = None,
                options: dict | None = None) -> ConicSolution:
    """Solve the conic program, returning primal and dual data."""
    name = solver or os.environ.get("PEPKIT_SOLVER", DEFAULT_SOLVER)
    name = name.lower()
    if name == "cvxopt":
        return _solve_cvxopt(cp, options or {})
    if name == "clarabel":
        return _solve_clarabel(cp, options or {})
    raise ValueError(f"unknown solver {name!r}; available: {available_solvers()}")


def _tri_indices(d: int) -> list[tuple[int, int]]:
    """Upper-triangle positions in column-major order."""
    return [(p, q) for q in range(d) for p in range(q + 1)]


def _pack_solution(cp: ConicProgram, status: str, x_free: np.ndarray, G: np.ndarray,
                   row_duals: np.ndarray, S: np.ndarray, solver: str) -> ConicSolution:
    mingrad = any(r.tag[0] == "mingrad" for r in cp.rows)
    f = x_free[: cp.n_free - 1] if mingrad else x_free.copy()
    t = float(x_free[-1]) if mingrad else None
    value = float(cp.obj_f @ x_free + np.sum(cp.obj_G * G))
    lam, eta, tau = {}, {}, 0.0
    for k, row in enumerate(cp.rows):
        if row.tag[0] == "pair":
            lam[row.tag[1:]] = float(row_duals[k])
        elif row.tag[0] == "radius":
            tau = float(row_duals[k])
        elif row.tag[0] == "mingrad":
            eta[row.tag[1]] = float(row_duals[k])
    dual_value = float(sum(row_duals[k] * cp.rows[k].rhs for k in range(len(cp.rows))))
    residuals = _residuals(cp, x_free, G, row_duals, S, value, dual_value)
    if status == "optimal" and residuals["worst"] > RESIDUAL_LIMIT:
        status = "numerical-trouble"
    return ConicSolution(status=status, value=value, f=f, G=G, t=t, lam=lam, tau=tau,
                         eta=eta, S=S, row_duals=row_duals, residuals=residuals,
                         solver=solver, dual_value=dual_value)


def _residuals(cp, x_free, G, row_duals, S, value, dual_value) -> dict:
    primal = 0.0
    for row in cp.rows:
        primal = max(primal, float(row.af @ x_free + np.sum(row.AG * G) - row.rhs))
    eig_G = float(np.linalg.eigvalsh(G).min()) if cp.psd_dim else 0.0
    eig_S = float(np.linalg.eigvalsh(S).min()) if cp.psd_dim else 0.0
    gap = abs(value - dual_value) / max(1.0, abs(value))
    worst = max(primal, -min(eig_G, 0.0), -min(eig_S, 0.0),
                -min(row_duals.min(initial=0.0), 0.0), gap)
    return {"primal": primal, "min_eig_G": eig_G, "min_eig_S": eig_S,
            "min_dual": float(row_duals.min(initial=0.0)), "gap": gap, "worst": worst}


# -- cvxopt ------------------------------------------------------------------

def _solve_cvxopt(cp: ConicProgram, options: dict) -> ConicSolution:
    from cvxopt import matrix, solvers, spmatrix

    d = cp.psd_dim
    tri = _tri_indices(d)
    n = cp.n_free + len(tri)
    m = len(cp.rows)

    c = np.zeros(n)
    c[: cp.n_free] = -cp.obj_f
    for k, (p, q) in enumerate(tri):
        c[cp.n_free + k] = -cp.obj_G[p, q] * (1.0 if p == q else 2.0)

    scales = np.array([row.scale() for row in cp.rows])
    vals, ri, ci = [], [], []
    for r, row in enumerate(cp.rows):
        s = scales[r]
        for k in np.flatnonzero(row.af):
            vals.append(row.af[k] / s)
            ri.append(r)
            ci.append(int(k))
        for k, (p, q) in enumerate(tri):
            a = row.AG[p, q]
            if a != 0.0:
                vals.append(a * (1.0 if p == q else 2.0) / s)
                ri.append(r)
                ci.append(cp.n_free + k)
    # PSD block rows: s = G, i.e. -sum_k x_k E_k + s = 0
    for k, (p, q) in enumerate(tri):
        col = cp.n_free + k
        vals.append(-1.0)
        ri.append(m + p * d + q)
        ci.append(col)
        if p != q:
            vals.append(-1.0)
            ri.append(m + q * d + p)
            ci.append(col)
    Gmat = spmatrix(vals, ri, ci, (m + d * d, n))
    h = np.zeros(m + d * d)
    h[:m] = np.array([row.rhs for row in cp.rows]) / scales

    ladder = [{"abstol": 1e-11, "reltol": 1e-10, "feastol": 1e-9, "refinement": 3},
              {"abstol": 1e-9, "reltol": 1e-8, "feastol": 1e-8, "refinement": 2},
              {"abstol": 1e-7, "reltol": 1e-6, "feastol": 1e-7, "refinement": 1}]
    if options:
        ladder = [dict(options)]
    sol, status = None, "numerical-trouble"
    for extra in ladder:
        opts = {"show_progress": False, "maxiters": 200}
        opts.update(extra)
        try:
            attempt = solvers.conelp(matrix(c), Gmat, matrix(h),
                                     dims={"l": m, "q": [], "s": [d]}, options=opts)
        except (ValueError, ZeroDivisionError, ArithmeticError) as exc:
            if sol is None:
                status = f"cvxopt raised: {exc}"
            continue
        mapped = {"optimal": "optimal",
                  "primal infeasible": "infeasible",
                  "dual infeasible": "unbounded"}.get(attempt["status"],
                                                      "numerical-trouble")
        if sol is None or mapped == "optimal":
            sol, status = attempt, mapped
        if mapped in ("optimal", "infeasible", "unbounded"):
            break
    if sol is None:
        return _failure(cp, "numerical-trouble", str(status), "cvxopt")
    if sol["x"] is None:
        return _failure(cp, status, "no primal point returned", "cvxopt")
    x = np.asarray(sol["x"]).ravel()
    x_free = x[: cp.n_free]
    G = np.zeros((d, d))
    for k, (p, q) in enumerate(tri):
        G[p, q] = G[q, p] = x[cp.n_free + k]
    # z stacks the linear duals then the PSD dual block (column-major, full)
    z = np.asarray(sol["z"]).ravel() if sol["z"] is not None else np.zeros(m + d * d)
    row_duals = z[:m] / scales
    S = z[m:].reshape(d, d, order="F")
    S = 0.5 * (S + S.T)
    return _pack_solution(cp, status, x_free, G, row_duals, S, "cvxopt")


# -- clarabel ----------------------------------------------------------------

def _solve_clarabel(cp: ConicProgram, options: dict) -> ConicSolution:
    import clarabel
    from scipy import sparse

    d = cp.psd_dim
    tri = _tri_indices(d)
    rt2 = np.sqrt(2.0)
    n = cp.n_free + len(tri)
    m = len(cp.rows)

    q = np.zeros(n)
    q[: cp.n_free] = -cp.obj_f
    for k, (p, qq) in enumerate(tri):
        q[cp.n_free + k] = -cp.obj_G[p, qq] * (1.0 if p == qq else 2.0)

    scales = np.array([row.scale() for row in cp.rows])
    rows_A, cols_A, vals_A = [], [], []
    for r, row in enumerate(cp.rows):
        s = scales[r]
        for k in np.flatnonzero(row.af):
            rows_A.append(r)
            cols_A.append(int(k))
            vals_A.append(row.af[k] / s)
        for k, (p, qq) in enumerate(tri):
            a = row.AG[p, qq]
            if a != 0.0:
                rows_A.append(r)
                cols_A.append(cp.n_free + k)
                vals_A.append(a * (1.0 if p == qq else 2.0) / s)
    # PSD triangle block: s = svec(G) with off-diagonals scaled by sqrt(2)
    for k, (p, qq) in enumerate(tri):
        rows_A.append(m + k)
        cols_A.append(cp.n_free + k)
        vals_A.append(-(1.0 if p == qq else rt2))
    A = sparse.csc_matrix((vals_A, (rows_A, cols_A)), shape=(m + len(tri), n))
    b = np.zeros(m + len(tri))
    b[:m] = np.array([row.rhs for row in cp.rows]) / scales

    cones = [clarabel.NonnegativeConeT(m), clarabel.PSDTriangleConeT(d)]
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = options.get("max_iter", 200)
    settings.tol_gap_abs = options.get("tol", 1e-10)
    settings.tol_gap_rel = options.get("tol", 1e-10)
    settings.tol_feas = options.get("tol", 1e-10)
    P = sparse.csc_matrix((n, n))
    solver = clarabel.DefaultSolver(P, q, A, b, cones, settings)
    res = solver.solve()

    name = str(res.status)
    status = "optimal" if name in ("Solved", "AlmostSolved") else \
        "infeasible" if "PrimalInfeasible" in name else \
        "unbounded" if "DualInfeasible" in name else "numerical-trouble"
    if status in ("infeasible", "unbounded"):
        return _failure(cp, status, name, "clarabel")
    x = np.asarray(res.x)
    x_free = x[: cp.n_free]
    G = np.zeros((d, d))
    for k, (p, qq) in enumerate(tri):
        G[p, qq] = G[qq, p] = x[cp.n_free + k]
    z = np.asarray(res.z)
    row_duals = z[:m] / scales
    S = np.zeros((d, d))
    for k, (p, qq) in enumerate(tri):
        v = z[m + k] if p == qq else z[m + k] / rt2
        S[p, qq] = S[qq, p] = v
    return _pack_solution(cp, status, x_free, G, row_duals, S, "clarabel")


def _failure(cp: ConicProgram, status: str, message: str, solver: str) -> ConicSolution:
    d = cp.psd_dim
    n_free = cp.n_free
    return ConicSolution(status=status, value=float("nan"), f=np.full(n_free, np.nan),
                         G=np.full((d, d), np.nan), t=None, lam={}, tau=float("nan"),
                         eta={}, S=np.full((d, d), np.nan),
                         row_duals=np.full(len(cp.rows), np.nan),
                         residuals={"worst": float("inf"), "message": message},
                         solver=solver, dual_value=float("nan"))
