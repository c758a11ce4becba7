"""Assembly of the exact worst-case semidefinite program.

Unknown iterates and gradients are folded into the Gram matrix
G = P^T P with P = [g_0 ... g_N x_0]; function values stay as a vector f.
Pairwise interpolation conditions, the starting-radius cap and G >= 0 are
all linear in (G, f), so maximizing any linear (or concave piecewise
linear) performance criterion over them is a semidefinite program whose
optimum is the exact worst case of the method.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .interpolation import FunctionClass
from .methods import StepMatrix

__all__ = [
    "STAR",
    "PerformanceCriterion",
    "PepProblem",
    "PepSolution",
    "assemble",
    "solve",
    "rescale",
]

STAR = "*"

_KINDS = ("obj", "grad", "dist", "mingrad", "linear")


@dataclass(frozen=True)
class PerformanceCriterion:
    """What to maximize: a linear form b.f + <C, G>, or the min-gradient form.

    ``obj``    final objective gap f_N - f_*
    ``grad``   squared final gradient norm |g_N|^2
    ``dist``   squared final distance |x_N - x_*|^2
    ``mingrad`` smallest squared gradient norm over all iterates (extra
                scalar variable t with t <= G_ii)
    ``linear`` explicit (b, C)
    """

    kind: str
    b: np.ndarray | None = None
    C: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown criterion kind {self.kind!r}")
        if self.kind == "linear" and (self.b is None or self.C is None):
            raise ValueError("linear criterion needs explicit b and C")

    @classmethod
    def objective(cls):
        return cls("obj")

    @classmethod
    def grad_norm_sq(cls):
        return cls("grad")

    @classmethod
    def distance_sq(cls):
        return cls("dist")

    @classmethod
    def min_grad_norm_sq(cls):
        return cls("mingrad")

    @classmethod
    def linear(cls, b, C):
        return cls("linear", b=np.asarray(b, float), C=np.asarray(C, float))


def selector_vectors(H: StepMatrix, L: float) -> tuple[np.ndarray, np.ndarray]:
    """Basis selectors (u_i, h_i) expressing g_i = P u_i and x_i = P h_i.

    Columns of P are ordered [g_0 ... g_N x_0]; step coefficients are scaled
    by 1/L since stored coefficients are L-normalized.
    """
    N = H.N
    n = N + 2
    u = np.zeros((N + 1, n))
    for i in range(N + 1):
        u[i, i] = 1.0
    hv = np.zeros((N + 1, n))
    hv[:, n - 1] = 1.0                       # x_0 enters every iterate with weight 1
    for i in range(1, N + 1):
        hv[i, :i] = -H.h[i - 1, :i] / L
    return u, hv


@dataclass
class PepProblem:
    """Assembled data of the worst-case semidefinite program."""

    fc: FunctionClass
    H: StepMatrix
    R: float
    criterion: PerformanceCriterion
    labels: list                              # iterate labels 0..N then "*"
    pairs: list                               # ordered (i, j) label pairs
    A: dict                                   # pair -> symmetric matrix
    A_R: np.ndarray
    b: np.ndarray                             # objective weight on f (zeros for mingrad)
    C: np.ndarray                             # objective weight on G (zeros for mingrad)
    u: np.ndarray
    hv: np.ndarray

    @property
    def N(self) -> int:
        return self.H.N

    @property
    def order(self) -> int:
        return self.N + 2

    def f_coeff(self, pair) -> np.ndarray:
        """Coefficient vector of (f_j - f_i) on the free values f_0..f_N."""
        i, j = pair
        vec = np.zeros(self.N + 1)
        if j != STAR:
            vec[j] += 1.0
        if i != STAR:
            vec[i] -= 1.0
        return vec


def _interp_matrix(fc: FunctionClass, ui, uj, hi, hj) -> np.ndarray:
    """Symmetric matrix A with <A, G> the quadratic part of the (i, j) condition."""
    L, mu = fc.L, fc.mu
    dh = hi - hj
    du = ui - uj
    M = (L / (L - mu)) * (np.outer(uj, dh) + np.outer(dh, uj))
    M += (1.0 / (L - mu)) * np.outer(du, du)
    M += (mu / (L - mu)) * (np.outer(ui, -dh) + np.outer(-dh, ui))
    M += (L * mu / (L - mu)) * np.outer(dh, dh)
    return 0.5 * M


def assemble(fc: FunctionClass, H: StepMatrix, R: float,
             criterion: PerformanceCriterion,
             pair_filter=None) -> PepProblem:
    """Build the semidefinite worst-case problem for (class, method, radius).

    The optimal point enters as the extra label ``"*"`` with zero selector
    vectors (so g_* = 0 and x_* = 0 implicitly) and its value eliminated as
    the constant 0.  ``pair_filter(i, j) -> bool`` optionally restricts the
    enumerated ordered pairs (used to study relaxations); by default all
    ordered pairs of distinct indices are kept.
    """
    if not fc.smooth:
        raise ValueError("smoothness constant L must be finite")
    if R <= 0:
        raise ValueError("R must be positive")
    N = H.N
    n = N + 2
    u, hv = selector_vectors(H, fc.L)
    zero = np.zeros(n)

    def uvec(lbl):
        return zero if lbl == STAR else u[lbl]

    def hvec(lbl):
        return zero if lbl == STAR else hv[lbl]

    labels = list(range(N + 1)) + [STAR]
    pairs, A = [], {}
    for i in labels:
        for j in labels:
            if i == j:
                continue
            if pair_filter is not None and not pair_filter(i, j):
                continue
            pairs.append((i, j))
            A[(i, j)] = _interp_matrix(fc, uvec(i), uvec(j), hvec(i), hvec(j))
    A_R = np.zeros((n, n))
    A_R[n - 1, n - 1] = 1.0

    b = np.zeros(N + 1)
    C = np.zeros((n, n))
    kind = criterion.kind
    if kind == "obj":
        b[N] = 1.0
    elif kind == "grad":
        C = np.outer(u[N], u[N])
    elif kind == "dist":
        C = np.outer(hv[N], hv[N])
    elif kind == "linear":
        if criterion.b.shape != (N + 1,) or criterion.C.shape != (n, n):
            raise ValueError("linear criterion has wrong shape for this problem")
        b = criterion.b.copy()
        C = 0.5 * (criterion.C + criterion.C.T)
    # mingrad keeps b = 0, C = 0; the extra variable lives in the conic layer
    return PepProblem(fc=fc, H=H, R=float(R), criterion=criterion, labels=labels,
                      pairs=pairs, A=A, A_R=A_R, b=b, C=C, u=u, hv=hv)


@dataclass
class PepSolution:
    """Primal solution of the worst-case program plus solver diagnostics."""

    value: float
    G: np.ndarray
    f: np.ndarray
    status: str                                # optimal | infeasible | unbounded | numerical-trouble
    t: float | None = None                     # mingrad auxiliary value
    duals: dict = field(default_factory=dict)  # lam, tau, eta, S from the conic layer
    residuals: dict = field(default_factory=dict)
    solver: str = ""
    dual_value: float | None = None


def solve(prob: PepProblem, solver: str | None = None, polish: bool = False) -> PepSolution:
    """Solve the assembled program; optionally polish toward an extreme optimum.

    With ``polish`` the program is re-solved maximizing the trace of G
    subject to keeping the optimal criterion value, which selects an
    extreme point of the optimal face (useful when several worst cases tie).
    """
    from . import conic

    cp = conic.to_conic(prob)
    sol = conic.solve_conic(cp, solver=solver)
    out = _to_pep_solution(prob, sol)
    if polish and out.status == "optimal":
        polished = conic.solve_conic(conic.trace_polish_program(cp, out.value), solver=solver)
        if polished.status == "optimal":
            refined = _to_pep_solution(prob, polished)
            out.G = refined.G
            out.f = refined.f
            keep = prob.b @ refined.f + float(np.sum(prob.C * refined.G))
            if prob.criterion.kind == "mingrad":
                keep = min(refined.G[i, i] for i in range(prob.N + 1))
                out.t = keep
            out.value = keep
    return out


def _to_pep_solution(prob: PepProblem, sol) -> PepSolution:
    duals = {"lam": sol.lam, "tau": sol.tau, "eta": sol.eta, "S": sol.S}
    return PepSolution(value=sol.value, G=sol.G, f=sol.f, status=sol.status,
                       t=sol.t, duals=duals, residuals=sol.residuals,
                       solver=sol.solver, dual_value=sol.dual_value)


def rescale(value_at_unit: float, kind: str, L: float, R: float) -> float:
    """Scale a worst case computed at L = R = 1 to arbitrary (L, R).

    Objective gaps scale as L R^2; squared gradient norms as L^2 R^2;
    squared distances as R^2.
    """
    if kind == "obj":
        return value_at_unit * L * R * R
    if kind in ("grad", "mingrad"):
        return value_at_unit * (L * R) ** 2
    if kind == "dist":
        return value_at_unit * R * R
    raise ValueError(f"no homogeneity rule for criterion {kind!r}")
