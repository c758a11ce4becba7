"""Closed-form worst-case values, optimal step sizes, and 1-D worst-case families.

All values are reported in normalized units: objective-type results are in
units of L*R^2 and gradient-type results in units of L*R, so the numbers
here can be compared directly against solver output obtained at L = R = 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .methods import StepMatrix, fgm, ogm, ogm_thetas

__all__ = [
    "PiecewiseQuadratic1D",
    "conj_gm_obj",
    "conj_gm_grad",
    "conj_fgm_ogm",
    "ogm_closed_form",
    "tau_gm",
    "tau_accel",
    "hopt",
    "hopt_bounds",
    "approx_hopt",
    "baselines",
    "family_builder",
]


@dataclass(frozen=True)
class PiecewiseQuadratic1D:
    """One-dimensional two-piece function: steep quadratic core, flat tails.

    Inside |x| < tau the function is (L/2) x^2; outside it continues as
    (mu/2) x^2 + a|x| + b with a = (L - mu) tau and b = -((L - mu)/2) tau^2,
    which makes value and slope continuous at +-tau.  ``tau = inf`` gives
    the pure quadratic (L/2) x^2 everywhere.
    """

    mu: float
    L: float
    tau: float
    family: str = "f1tau"

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")
        if not (0.0 <= self.mu < self.L):
            raise ValueError("need 0 <= mu < L")

    @property
    def a(self) -> float:
        return (self.L - self.mu) * self.tau if math.isfinite(self.tau) else 0.0

    @property
    def b(self) -> float:
        return -0.5 * (self.L - self.mu) * self.tau ** 2 if math.isfinite(self.tau) else 0.0

    def value_and_grad(self, x) -> tuple[float, np.ndarray]:
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if arr.shape != (1,):
            raise ValueError("one-dimensional function")
        t = float(arr[0])
        if abs(t) >= self.tau:
            val = 0.5 * self.mu * t * t + self.a * abs(t) + self.b
            grad = self.mu * t + self.a * math.copysign(1.0, t)
        else:
            val = 0.5 * self.L * t * t
            grad = self.L * t
        return val, np.array([grad])

    def __call__(self, x):
        return self.value_and_grad(x)


def _flat_branch(m: int, h: float, kappa: float) -> float:
    """kappa / ((kappa - 1) + (1 - kappa h)^(-m)), the no-overshoot branch.

    Evaluated through expm1/log1p for accuracy at small kappa; the kappa = 0
    limit is 1 / (m h + 1).  Requires kappa * h < 1.
    """
    if kappa == 0.0:
        return 1.0 / (m * h + 1.0)
    if kappa * h >= 1.0:
        raise ValueError(f"kappa*h = {kappa * h:g} >= 1: branch value undefined here")
    denom = math.expm1(-m * math.log1p(-kappa * h)) + kappa
    return kappa / denom


def conj_gm_obj(N: int, h: float, kappa: float = 0.0) -> float:
    """Exact worst-case final objective gap of constant-step gradient descent.

    Value of max(flat branch, (1-h)^(2N)) / 2 in L R^2 units, the larger of
    the no-overshoot and oscillating regimes.
    """
    _check_gm_args(N, h, kappa)
    return 0.5 * max(_flat_branch(2 * N, h, kappa), (1.0 - h) ** (2 * N))


def conj_gm_grad(N: int, h: float, kappa: float = 0.0) -> float:
    """Exact worst-case final gradient norm of gradient descent, in L R units."""
    _check_gm_args(N, h, kappa)
    return max(_flat_branch(N, h, kappa), abs(1.0 - h) ** N)


def _check_gm_args(N, h, kappa):
    if N < 1:
        raise ValueError("N must be >= 1")
    if not (0.0 <= h <= 2.0):
        raise ValueError("h must lie in [0, 2]")
    if not (0.0 <= kappa < 1.0):
        raise ValueError("kappa must lie in [0, 1)")


def tau_gm(N: int, h: float, kappa: float, R: float = 1.0, criterion: str = "obj") -> float:
    """Core radius of the worst-case two-piece function for gradient descent."""
    m = 2 * N if criterion == "obj" else N
    if criterion not in ("obj", "grad"):
        raise ValueError("criterion must be 'obj' or 'grad'")
    return R * _flat_branch(m, h, kappa)


def conj_fgm_ogm(N: int, method: str = "fgm", sequence: str = "primary") -> float:
    """Worst-case final objective gap of the accelerated methods, L R^2 units.

    Derived from the sums of the method's own step coefficients: the primary
    sequence uses the next-to-last row, the secondary the last row.
    """
    H = _accel_matrix(N, method)
    if sequence == "primary":
        s = float(np.sum(H.h[N - 2, : N - 1])) if N >= 2 else 0.0
        return 0.5 / (2.0 * s + 3.0)
    if sequence == "secondary":
        s = float(np.sum(H.h[N - 1, :N]))
        return 0.5 / (2.0 * s + 1.0)
    raise ValueError(f"unknown sequence {sequence!r}")


def tau_accel(N: int, method: str = "fgm", sequence: str = "primary", R: float = 1.0) -> float:
    """Core radius of the worst-case function for the accelerated methods."""
    H = _accel_matrix(N, method)
    if sequence == "primary":
        s = float(np.sum(H.h[N - 2, : N - 1])) if N >= 2 else 0.0
        return R / (2.0 * s + 3.0)
    if sequence == "secondary":
        s = float(np.sum(H.h[N - 1, :N]))
        return R / (2.0 * s + 1.0)
    raise ValueError(f"unknown sequence {sequence!r}")


def _accel_matrix(N: int, method: str) -> StepMatrix:
    if method == "fgm":
        return fgm(N, sequence="secondary")
    if method == "ogm":
        return ogm(N, sequence="secondary")
    raise ValueError(f"unknown accelerated method {method!r}")


def ogm_closed_form(N: int, sequence: str = "primary") -> float:
    """Closed-form worst-case objective gap for the optimized method, L R^2 units."""
    th = ogm_thetas(N)
    if sequence == "primary":
        return 1.0 / (4.0 * th[N - 1] ** 2 + 2.0)
    if sequence == "secondary":
        return 1.0 / (2.0 * th[N] ** 2)
    raise ValueError(f"unknown sequence {sequence!r}")


def hopt(N: int, kappa: float = 0.0, criterion: str = "obj") -> float:
    """Step size minimizing the worst case of gradient descent after N steps.

    Located by bisection on the crossing of the two worst-case branches,
    the unique point where they meet with slopes of opposite sign.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not (0.0 <= kappa < 1.0):
        raise ValueError("kappa must lie in [0, 1)")
    m = 2 * N if criterion == "obj" else N
    if criterion not in ("obj", "grad"):
        raise ValueError("criterion must be 'obj' or 'grad'")

    def gap(h):
        return _flat_branch(m, h, kappa) - (h - 1.0) ** m if criterion == "obj" \
            else _flat_branch(m, h, kappa) - abs(1.0 - h) ** m

    lo = 1.0
    hi = (2.0 - 1e-12) if kappa == 0.0 else 2.0 / (1.0 + kappa)
    if gap(hi) > 0.0:
        # fall back to a scan for the sign change (kept for robustness)
        grid = np.linspace(lo, 2.0 - 1e-9, 4097)
        vals = [gap(g) for g in grid]
        k = next(i for i in range(len(vals) - 1) if vals[i] > 0.0 >= vals[i + 1])
        lo, hi = float(grid[k]), float(grid[k + 1])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)


def hopt_bounds(N: int, kappa: float = 0.0, criterion: str = "obj") -> tuple[float, float]:
    """Analytic lower/upper estimates bracketing the optimal step size."""
    m = 2 * N if criterion == "obj" else N
    if criterion not in ("obj", "grad"):
        raise ValueError("criterion must be 'obj' or 'grad'")
    if kappa == 0.0:
        lower = 1.0 + (1.0 + 2.0 * m) ** (-1.0 / m)
        upper = 1.0 + (1.0 + m) ** (-1.0 / m)
        return lower, upper
    ratio = (1.0 + kappa) / (1.0 - kappa)
    inner_lo = (kappa - 1.0) / kappa + ratio ** m / kappa
    inner_hi = (kappa - 1.0) / kappa + (1.0 - kappa) ** (-m) / kappa
    lower = 1.0 + inner_lo ** (-1.0 / m)
    upper = min(1.0 + inner_hi ** (-1.0 / m), 2.0 / (1.0 + kappa))
    return lower, upper


def approx_hopt(N: int, kappa: float, criterion: str = "obj") -> float:
    """Closed-form approximation of the optimal step size (0 < kappa <= 1).

    At kappa = 0 the expression degenerates; the midpoint of the analytic
    bracket is returned instead, with a warning.
    """
    if criterion not in ("obj", "grad"):
        raise ValueError("criterion must be 'obj' or 'grad'")
    if kappa == 0.0:
        warnings.warn("approximation undefined at kappa = 0; returning bracket midpoint")
        lo, hi = hopt_bounds(N, 0.0, criterion)
        return 0.5 * (lo + hi)
    e = 1.0 / (2 * N) if criterion == "obj" else 1.0 / N
    return (1.0 + kappa ** e) / (1.0 + kappa ** (1.0 + e))


def baselines(N: int, h: float | None = None, kappa: float = 0.0,
              method: str = "gm", criterion: str = "obj",
              sequence: str = "primary") -> float:
    """Classical analytic worst-case guarantees, for comparison columns.

    Values use the same normalized units as the conjectured exact values
    (L R^2 for objective criteria, L R for gradient norms, R for distance).
    Raises on combinations with no classical bound on record.
    """
    rho = (1.0 - kappa) / (1.0 + kappa)
    if method == "gm":
        if criterion == "obj":
            if kappa == 0.0 and h is not None and abs(h - 1.0) <= 1e-12:
                return 0.5 / (N + 1.0)
            if h is None or abs(h - 2.0 / (1.0 + kappa)) <= 1e-9:
                return 0.5 * rho ** (2 * N)
            raise ValueError("objective baseline known only for h = 1 (kappa = 0) "
                             "or h = 2/(1+kappa)")
        if criterion in ("grad", "dist"):
            if h is not None and abs(h - 2.0 / (1.0 + kappa)) > 1e-9:
                raise ValueError("gradient/distance baseline requires h = 2/(1+kappa)")
            return rho ** N
    if method == "fgm":
        if criterion == "obj":
            return 2.0 / (N + 1.0) ** 2 if sequence == "primary" else 2.0 / (N + 2.0) ** 2
        if criterion == "grad":
            return 2.0 / (N + 1.0)
    if method == "mfgm" and criterion == "mingrad":
        return 8.0 / N ** 1.5
    raise ValueError(f"no baseline for method={method!r}, criterion={criterion!r}")


def family_builder(family: str, mu: float = 0.0, L: float = 1.0, R: float = 1.0,
                   N: int | None = None, h: float | None = None,
                   criterion: str = "obj", tau: float | None = None) -> PiecewiseQuadratic1D:
    """Construct one of the 1-D worst-case families.

    ``f2`` is the pure quadratic; ``f1`` the smooth-convex two-piece function
    with core radius R/(2Nh+1); ``f1tau`` the strongly convex generalization
    whose radius follows the no-overshoot branch (or an explicit ``tau``).
    """
    if family == "f2":
        return PiecewiseQuadratic1D(mu=mu, L=L, tau=math.inf, family="f2")
    if family == "f1":
        if mu != 0.0:
            raise ValueError("family 'f1' is the mu = 0 case; use 'f1tau' otherwise")
        if tau is None:
            if N is None or h is None:
                raise ValueError("family 'f1' needs N and h (or an explicit tau)")
            m = 2 * N if criterion == "obj" else N
            tau = R / (m * h + 1.0)
        return PiecewiseQuadratic1D(mu=0.0, L=L, tau=tau, family="f1")
    if family == "f1tau":
        if tau is None:
            if N is None or h is None:
                raise ValueError("family 'f1tau' needs N and h (or an explicit tau)")
            tau = R * tau_gm(N, h, mu / L, criterion=criterion)
        if tau < 0:
            raise ValueError(f"derived core radius tau = {tau:g} is negative")
        return PiecewiseQuadratic1D(mu=mu, L=L, tau=tau, family="f1tau")
    raise ValueError(f"unknown family {family!r}")
