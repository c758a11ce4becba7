"""Fixed-step first-order methods as lower-triangular step matrices.

A method running N steps is the matrix H = {h_{i,k}} with
``x_i = x_0 - sum_k (h_{i,k}/L) * g_k``, where g_k is the gradient observed
at iterate x_k.  Coefficients are stored L-normalized (the actual step is
h/L).  Accelerated two-sequence methods are reduced to this form on their
gradient-evaluation sequence; asking for the ``primary`` sequence replaces
the final row so the last iterate is the primary (averaged) point instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "StepMatrix",
    "Trajectory",
    "gm",
    "fgm",
    "ogm",
    "mfgm",
    "custom",
    "fgm_thetas",
    "ogm_thetas",
    "simulate",
]


@dataclass(frozen=True)
class StepMatrix:
    """Lower-triangular coefficients of a fixed-step method.

    ``h[i-1, k]`` holds h_{i,k} for 1 <= i <= N, 0 <= k <= i-1; entries with
    k >= i are zero.  ``has_gap_guarantee`` is true when every step uses the
    most recent gradient (h_{i,i-1} != 0), the hypothesis under which the
    dual bound is tight.
    """

    N: int
    h: np.ndarray
    label: str = "custom"
    sequence: str = "secondary"

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).reshape(self.N, self.N)
        if self.N > 0 and np.any(np.triu(h, k=1) != 0.0):
            raise ValueError("step matrix must be lower triangular")
        if self.sequence not in ("primary", "secondary"):
            raise ValueError(f"unknown sequence tag {self.sequence!r}")
        h = h.copy()
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def has_gap_guarantee(self) -> bool:
        return bool(np.all(np.diagonal(self.h) != 0.0)) if self.N > 0 else True

    def row(self, i: int) -> np.ndarray:
        """Coefficients h_{i,0..i-1} of iterate i (1-based)."""
        return self.h[i - 1, :i]

    def to_json(self) -> str:
        rows = [self.h[r, : r + 1].tolist() for r in range(self.N)]
        return json.dumps({"N": self.N, "rows": rows, "label": self.label,
                           "sequence": self.sequence}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "StepMatrix":
        obj = json.loads(text)
        N = int(obj["N"])
        h = np.zeros((N, N))
        for r, row in enumerate(obj["rows"]):
            row = np.asarray(row, dtype=float)
            if row.shape[0] not in (r + 1, N):
                raise ValueError(f"row {r} has {row.shape[0]} entries, expected {r + 1}")
            h[r, : row.shape[0]] = row
        return cls(N=N, h=h, label=obj.get("label", "custom"),
                   sequence=obj.get("sequence", "secondary"))


def gm(N: int, h: float) -> StepMatrix:
    """Constant-step gradient descent, x_{i+1} = x_i - (h/L) g_i.

    In cumulative form every past gradient carries the same coefficient h.
    Step sizes outside (0, 2) are accepted (callers may warn).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    mat = np.tril(np.full((N, N), float(h)))
    return StepMatrix(N=N, h=mat, label=f"gm(h={h:g})")


def fgm_thetas(N: int) -> np.ndarray:
    """Momentum scalars theta_0..theta_N of the fast gradient method."""
    th = np.ones(N + 1)
    for i in range(N):
        th[i + 1] = 0.5 * (1.0 + math.sqrt(4.0 * th[i] ** 2 + 1.0))
    return th


def ogm_thetas(N: int) -> np.ndarray:
    """Momentum scalars of the optimized gradient method (boosted final term)."""
    th = fgm_thetas(N)
    if N >= 1:
        th[N] = 0.5 * (1.0 + math.sqrt(8.0 * th[N - 1] ** 2 + 1.0))
    return th


def _accelerated(N: int, sequence: str, thetas: np.ndarray, diag: Callable[[int], float],
                 label: str) -> StepMatrix:
    # math-indexed table: Hm[i, k] = h_{i,k}
    Hm = np.zeros((N + 1, N + 1))
    Hm[1, 0] = diag(0)
    for i in range(1, N):
        ratio = (thetas[i] - 1.0) / thetas[i + 1]
        if i >= 2:
            Hm[i + 1, : i - 1] = Hm[i, : i - 1] + ratio * (Hm[i, : i - 1] - Hm[i - 1, : i - 1])
        Hm[i + 1, i - 1] = Hm[i, i - 1] + ratio * (Hm[i, i - 1] - 1.0)
        Hm[i + 1, i] = diag(i)
    if sequence == "primary" and N >= 1:
        Hm[N, : N - 1] = Hm[N - 1, : N - 1]
        Hm[N, N - 1] = 1.0
    return StepMatrix(N=N, h=Hm[1:, :N], label=label, sequence=sequence)


def fgm(N: int, sequence: str = "secondary") -> StepMatrix:
    """Fast (momentum-accelerated) gradient method coefficients."""
    if N < 1:
        raise ValueError("N must be >= 1")
    th = fgm_thetas(N)
    return _accelerated(N, sequence, th, lambda i: (th[i] - 1.0) / th[i + 1] + 1.0,
                        label="fgm")


def ogm(N: int, sequence: str = "secondary") -> StepMatrix:
    """Optimized gradient method coefficients (doubled momentum, boosted last step)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    th = ogm_thetas(N)
    return _accelerated(N, sequence, th, lambda i: (2.0 * th[i] - 1.0) / th[i + 1] + 1.0,
                        label="ogm")


def mfgm(N: int) -> StepMatrix:
    """N/2 accelerated steps followed by N/2 unit gradient steps.

    The accelerated half ends on its primary iterate; the gradient phase
    continues from that point.  N must be even and >= 2.
    """
    if N < 2 or N % 2 != 0:
        raise ValueError("N must be an even integer >= 2")
    half = N // 2
    F = fgm(half, sequence="primary")
    h = np.zeros((N, N))
    h[:half, :half] = F.h
    for r in range(half, N):
        h[r, :half] = F.h[half - 1, :half]
        h[r, half: r + 1] = 1.0
    return StepMatrix(N=N, h=h, label="mfgm", sequence="primary")


def custom(coeffs, label: str = "custom", sequence: str = "secondary") -> StepMatrix:
    """Wrap externally supplied coefficients.

    ``coeffs`` may be a full square array or ragged rows (row i holding its
    i+1 coefficients).  Rejects non-triangular input.
    """
    if isinstance(coeffs, np.ndarray) and coeffs.ndim == 2:
        N = coeffs.shape[0]
        if coeffs.shape != (N, N):
            raise ValueError("square coefficient array required")
        return StepMatrix(N=N, h=coeffs, label=label, sequence=sequence)
    rows = [np.atleast_1d(np.asarray(r, dtype=float)) for r in coeffs]
    N = len(rows)
    h = np.zeros((N, N))
    for r, row in enumerate(rows):
        if row.shape[0] not in (r + 1, N):
            raise ValueError(f"row {r} has {row.shape[0]} entries, expected {r + 1}")
        if row.shape[0] == N and np.any(row[r + 1:] != 0.0):
            raise ValueError("step matrix must be lower triangular")
        h[r, : min(row.shape[0], r + 1)] = row[: r + 1]
    return StepMatrix(N=N, h=h, label=label, sequence=sequence)


@dataclass
class Trajectory:
    """Iterates, gradients and values produced by running a method."""

    xs: np.ndarray          # (N+1, d)
    gs: np.ndarray          # (N+1, d)
    fs: np.ndarray          # (N+1,)

    def criterion(self, kind: str, fstar: float = 0.0, xstar=None) -> float:
        """Criterion value in squared units where applicable.

        ``obj``: f(x_N) - fstar.  ``grad``: |g_N|^2.  ``dist``: |x_N - xstar|^2.
        ``mingrad``: min_i |g_i|^2.
        """
        if kind == "obj":
            return float(self.fs[-1] - fstar)
        if kind == "grad":
            return float(self.gs[-1] @ self.gs[-1])
        if kind == "dist":
            xstar = np.zeros_like(self.xs[-1]) if xstar is None else np.asarray(xstar, float)
            diff = self.xs[-1] - xstar
            return float(diff @ diff)
        if kind == "mingrad":
            return float(np.min(np.sum(self.gs * self.gs, axis=1)))
        raise ValueError(f"unknown criterion kind {kind!r}")


def simulate(H: StepMatrix, fn, x0, L: float = 1.0) -> Trajectory:
    """Run the method on an evaluable function from ``x0``.

    ``fn(x)`` must return ``(value, gradient)``.  Iterates follow
    x_i = x_0 - sum_k (h_{i,k}/L) g_k with g_k evaluated along the way.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.shape[0]
    n = H.N
    xs = np.zeros((n + 1, d))
    gs = np.zeros((n + 1, d))
    fs = np.zeros(n + 1)
    xs[0] = x0
    fs[0], gs[0] = fn(x0)
    for i in range(1, n + 1):
        xs[i] = x0 - (H.h[i - 1, :i] / L) @ gs[:i]
        fs[i], gs[i] = fn(xs[i])
    return Trajectory(xs=xs, gs=gs, fs=fs)
