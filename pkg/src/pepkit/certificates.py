"""Machine-checkable upper-bound certificates from dual solutions.

A certificate is a set of nonnegative weights: one per pairwise
interpolation inequality (lambda), one for the starting-radius cap (tau),
plus the PSD slack matrix S they induce.  The weighted combination of
valid inequalities proves ``criterion <= tau * R^2`` for every admissible
function and starting point; verification recomputes everything from
scratch so a certificate can be trusted independently of the solver that
produced it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .pep import STAR, PepProblem, PepSolution

__all__ = ["DualCertificate", "CertificateReport", "extract", "verify", "render_proof"]


@dataclass
class DualCertificate:
    lam: dict                       # ordered pair -> multiplier
    tau: float
    S: np.ndarray
    bound: float                    # tau * R^2
    eta: dict = field(default_factory=dict)   # min-gradient row multipliers

    def to_json(self) -> str:
        obj = {
            "lambda": {f"{i},{j}": v for (i, j), v in self.lam.items()},
            "tau": self.tau,
            "bound": self.bound,
            "S": self.S.tolist(),
        }
        if self.eta:
            obj["eta"] = {str(k): v for k, v in self.eta.items()}
        return json.dumps(obj, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DualCertificate":
        obj = json.loads(text)
        lam = {}
        for key, v in obj["lambda"].items():
            a, b = key.split(",")
            lam[(a if a == STAR else int(a), b if b == STAR else int(b))] = float(v)
        eta = {int(k): float(v) for k, v in obj.get("eta", {}).items()}
        return cls(lam=lam, tau=float(obj["tau"]), S=np.asarray(obj["S"], dtype=float),
                   bound=float(obj["bound"]), eta=eta)


@dataclass
class CertificateReport:
    ok: bool
    min_lambda: float
    tau: float
    min_eig_S: float
    stationarity: float             # max |b - sum lam (e_j - e_i)| (f-space)
    recompute_residual: float       # |S_stored - S_recomputed|_max
    complementarity: float | None   # <S, G> when a primal G is supplied
    gap: float | None               # |bound - primal value| when supplied
    restricted_support: bool        # lam lives on {(i, i+1)} U {(*, i)}


def _effective_C(prob: PepProblem, cert: DualCertificate) -> np.ndarray:
    C = prob.C.copy()
    if cert.eta:
        for i, w in cert.eta.items():
            C[i, i] += w
    return C


def recompute_slack(prob: PepProblem, cert: DualCertificate) -> np.ndarray:
    """S = tau * A_R - C + sum lam_ij A_ij, rebuilt from problem data."""
    S = cert.tau * prob.A_R - _effective_C(prob, cert)
    for pair, w in cert.lam.items():
        S = S + w * prob.A[pair]
    return S


def extract(prob: PepProblem, sol: PepSolution, tol: float = 1e-6) -> DualCertificate:
    """Build and sanity-check a certificate from a solved problem.

    Raises ``ValueError`` when the solver returned no usable duals or the
    certificate fails verification at ``tol``.
    """
    duals = sol.duals
    if not duals or duals.get("lam") is None:
        raise ValueError("solution carries no dual information")
    lam = {pair: max(0.0, float(v)) for pair, v in duals["lam"].items()}
    tau = max(0.0, float(duals["tau"]))
    eta = {k: max(0.0, float(v)) for k, v in (duals.get("eta") or {}).items()}
    cert = DualCertificate(lam=lam, tau=tau, S=np.zeros((prob.order, prob.order)),
                           bound=tau * prob.R ** 2, eta=eta)
    cert.S = recompute_slack(prob, cert)
    report = verify(cert, prob, tol=tol, G=sol.G, primal_value=sol.value)
    if not report.ok:
        raise ValueError(f"certificate verification failed: {report}")
    return cert


def verify(cert: DualCertificate, prob: PepProblem, tol: float = 1e-6,
           G: np.ndarray | None = None,
           primal_value: float | None = None) -> CertificateReport:
    """Re-derive every certificate invariant and report the residuals.

    Checks multiplier nonnegativity, the value-space stationarity equation,
    positive semidefiniteness of the recomputed slack matrix and, when a
    primal solution is supplied, complementary slackness and the bound gap.
    """
    S = recompute_slack(prob, cert)
    recompute_residual = float(np.max(np.abs(S - cert.S))) if cert.S is not None else 0.0
    min_eig = float(np.linalg.eigvalsh(S).min())
    min_lambda = min((min(cert.lam.values(), default=0.0),
                      min(cert.eta.values(), default=0.0), cert.tau))
    resid = -prob.b.copy()
    for pair, w in cert.lam.items():
        resid += w * prob.f_coeff(pair)
    stationarity = float(np.max(np.abs(resid)))
    if cert.eta:
        # the auxiliary objective variable must carry total weight one
        stationarity = max(stationarity, abs(sum(cert.eta.values()) - 1.0))
    comp = float(np.sum(S * G)) if G is not None else None
    gap = abs(cert.bound - primal_value) if primal_value is not None else None
    allowed = {(i, i + 1) for i in range(prob.N)} | {(STAR, i) for i in range(prob.N + 1)}
    outside = sum(abs(w) for pair, w in cert.lam.items() if pair not in allowed)
    scale = max(1.0, abs(primal_value)) if primal_value is not None else 1.0
    ok = (min_lambda >= -tol and min_eig >= -tol and stationarity <= tol
          and recompute_residual <= tol
          and (comp is None or comp <= 10 * tol * scale)
          and (gap is None or gap <= 10 * tol * scale))
    return CertificateReport(ok=ok, min_lambda=min_lambda, tau=cert.tau,
                             min_eig_S=min_eig, stationarity=stationarity,
                             recompute_residual=recompute_residual,
                             complementarity=comp, gap=gap,
                             restricted_support=outside <= tol)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _label(i) -> str:
    return "x_*" if i == STAR else f"x_{i}"


def _pair_inequality_text(prob: PepProblem, pair) -> str:
    i, j = pair
    fc = prob.fc
    fi, fj = ("f_*" if i == STAR else f"f({_label(i)})"), ("f_*" if j == STAR else f"f({_label(j)})")
    gi, gj = ("0" if i == STAR else f"g({_label(i)})"), ("0" if j == STAR else f"g({_label(j)})")
    base = f"{fi} >= {fj} + <{gj}, {_label(i)} - {_label(j)}>"
    if fc.mu == 0.0:
        extra = f" + 1/(2L)|{gi} - {gj}|^2"
    else:
        extra = (f" + 1/(2(1-k))[ (1/L)|{gi} - {gj}|^2 + mu|{_label(i)} - {_label(j)}|^2"
                 f" - (2mu/L)<{gi} - {gj}, {_label(i)} - {_label(j)}> ]")
    return base + extra


def render_proof(cert: DualCertificate, prob: PepProblem) -> str:
    """Human-readable weighted-inequality proof of the certified bound.

    Emits the exact identity
    ``criterion = sum lam_ij * (inequality_ij) + tau * (radius bound) - <S, G>``
    with the slack quadratic form expanded as a sum of squares (a single
    completed square when S has rank one).
    """
    lines = []
    crit_names = {"obj": "f(x_N) - f_*", "grad": "|g(x_N)|^2", "dist": "|x_N - x_*|^2",
                  "mingrad": "min_i |g(x_i)|^2", "linear": "b.f + <C, G>"}
    lines.append(f"Certified worst-case bound for method '{prob.H.label}', "
                 f"N = {prob.N}, class (mu = {_fmt(prob.fc.mu)}, L = {_fmt(prob.fc.L)}), "
                 f"R = {_fmt(prob.R)}")
    lines.append(f"criterion: {crit_names[prob.criterion.kind]}")
    lines.append(f"bound:     tau * R^2 = {_fmt(cert.bound)}")
    lines.append("")
    lines.append("The criterion decomposes exactly as the weighted sum")
    lines.append("  criterion = sum_ij lambda_ij * [lhs_ij] + tau * [|x_0 - x_*|^2 - R^2]"
                 " - <S, G>")
    lines.append("where every bracketed term is <= 0 for admissible data and <S, G> >= 0,")
    lines.append("so criterion <= tau * R^2.  The active inequalities and weights:")
    lines.append("")
    show = max(1e-12, 1e-6 * max([cert.tau] + [abs(v) for v in cert.lam.values()]))
    for pair in prob.pairs:
        w = cert.lam.get(pair, 0.0)
        if abs(w) <= show:
            continue
        i, j = pair
        tag = f"lambda({i},{j}) = {_fmt(w)}"
        lines.append(f"  {tag:<28s}:  {_pair_inequality_text(prob, pair)}")
    if cert.eta:
        for i, w in sorted(cert.eta.items()):
            if abs(w) > 1e-12:
                lines.append(f"  eta({i}) = {_fmt(w):<18s}:  t <= |g(x_{i})|^2")
    lines.append(f"  tau = {_fmt(cert.tau):<22s}:  |x_0 - x_*|^2 <= R^2")
    lines.append("")
    S = recompute_slack(prob, cert)
    w_eig, V = np.linalg.eigh(S)
    names = [f"g_{i}" for i in range(prob.N + 1)] + ["x_0"]
    sq_lines = []
    for k in range(len(w_eig) - 1, -1, -1):
        if w_eig[k] <= 1e-9 * max(w_eig.max(), 1.0):
            continue
        terms = []
        for p, name in enumerate(names):
            coef = V[p, k]
            if abs(coef) > 1e-9:
                terms.append(f"{_fmt(coef)}*{name}")
        sq_lines.append(f"  {_fmt(w_eig[k])} * ({' + '.join(terms)})^2")
    rank = len(sq_lines)
    head = "a single completed square" if rank == 1 else f"a sum of {rank} squares"
    lines.append(f"Slack quadratic form <S, G> as {head}:")
    lines.extend(sq_lines if sq_lines else ["  0"])
    return "\n".join(lines)
