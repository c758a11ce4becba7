"""Command-line front end: solve, interp, hopt, sweep.

Values are always reported twice: in normalized units (L = R = 1, the form
used throughout the comparison tables) and rescaled to the requested
(L, R).  Exit codes: 0 success, 2 invalid configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import analysis, certificates, conic, pep, reconstruction, sdpa
from .interpolation import DataSet, FunctionClass, check_interpolable
from .methods import StepMatrix, custom, fgm, gm, mfgm, ogm

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class ConfigError(ValueError):
    pass


def build_method(name: str, N: int, h: float | None, sequence: str,
                 h_file: str | None) -> StepMatrix:
    if name == "gm":
        if h is None:
            raise ConfigError("--method gm requires --h")
        if not (0.0 < h < 2.0):
            print(f"warning: step size h={h:g} outside (0, 2)", file=sys.stderr)
        return gm(N, h)
    if name == "fgm":
        return fgm(N, sequence=sequence)
    if name == "ogm":
        return ogm(N, sequence=sequence)
    if name == "mfgm":
        return mfgm(N)
    if name == "custom":
        if not h_file:
            raise ConfigError("--method custom requires --h-file")
        with open(h_file) as fh:
            return StepMatrix.from_json(fh.read())
    raise ConfigError(f"unknown method {name!r}")


def _criterion(kind: str) -> pep.PerformanceCriterion:
    if kind not in ("obj", "grad", "dist", "mingrad"):
        raise ConfigError(f"unknown criterion {kind!r}")
    return pep.PerformanceCriterion(kind)


def cmd_solve(args) -> int:
    if not (0.0 <= args.mu < args.L):
        raise ConfigError("need 0 <= mu < L")
    if args.R <= 0:
        raise ConfigError("R must be positive")
    H = build_method(args.method, args.N, args.h, args.sequence, args.h_file)
    kappa = args.mu / args.L
    fc = FunctionClass(kappa, 1.0)
    criterion = _criterion(args.criterion)
    prob = pep.assemble(fc, H, 1.0, criterion)
    cp = conic.to_conic(prob)
    if args.export_sdpa:
        with open(args.export_sdpa, "w") as fh:
            fh.write(sdpa.export_sdpa(cp))
    sol = pep.solve(prob, solver=args.solver, polish=args.polish)
    if sol.status in ("infeasible", "unbounded"):
        print(f"solver reported {sol.status}", file=sys.stderr)
        return EXIT_SOLVER
    if sol.status == "numerical-trouble":
        print(f"warning: solution residuals above tolerance "
              f"({sol.residuals.get('worst'):.2e})", file=sys.stderr)

    report = {
        "method": H.label, "N": args.N, "mu": args.mu, "L": args.L, "R": args.R,
        "criterion": args.criterion, "status": sol.status, "solver": sol.solver,
        "value_normalized": sol.value,
        "value_rescaled": pep.rescale(sol.value, args.criterion, args.L, args.R),
    }
    if args.criterion in ("grad", "mingrad"):
        report["norm_normalized"] = math.sqrt(max(sol.value, 0.0))
        report["norm_rescaled"] = math.sqrt(max(report["value_rescaled"], 0.0))

    cert = None
    try:
        cert = certificates.extract(prob, sol, tol=max(args.tol, 1e-6))
        rep = certificates.verify(cert, prob, tol=max(args.tol, 1e-6), G=sol.G,
                                  primal_value=sol.value)
        report["certificate"] = {
            "bound_normalized": cert.bound,
            "tau": cert.tau,
            "gap": rep.gap,
            "min_eig_slack": rep.min_eig_S,
            "restricted_support": rep.restricted_support,
        }
    except ValueError as exc:
        report["certificate"] = {"error": str(exc)}
    if cert is not None and args.certificate:
        with open(args.certificate, "w") as fh:
            fh.write(cert.to_json())
    if cert is not None and args.proof:
        with open(args.proof, "w") as fh:
            fh.write(certificates.render_proof(cert, prob) + "\n")

    try:
        inst = reconstruction.rebuild(prob, sol)
        tau = inst.family.tau if inst.family else None
        report["worst_case"] = {
            "rank": inst.rank,
            "achieved_normalized": inst.achieved,
            "family": inst.family.family if inst.family else None,
            # an unbounded core radius marks the pure quadratic; keep JSON strict
            "tau": tau if tau is not None and math.isfinite(tau) else None,
        }
    except ValueError as exc:
        report["worst_case"] = {"error": str(exc)}
    _emit(args, report)
    return EXIT_OK


def cmd_interp(args) -> int:
    with open(args.data) as fh:
        text = fh.read()
    if not json.loads(text).get("triples"):
        # no data, nothing to violate
        _emit(args, {"interpolable": True, "min_slack": 0.0, "violations": []})
        return EXIT_OK
    ds = DataSet.from_json(text)
    fc = FunctionClass(args.mu, args.L)
    rep = check_interpolable(ds, fc, tol=args.tol)
    _emit(args, {"interpolable": rep.ok, "min_slack": rep.min_slack,
                 "violations": [list(p) for p in rep.violations]})
    return EXIT_OK


def cmd_hopt(args) -> int:
    kappa = args.kappa if args.kappa is not None else args.mu / args.L
    if not (0.0 <= kappa < 1.0):
        raise ConfigError("need 0 <= kappa < 1")
    if args.criterion not in ("obj", "grad"):
        raise ConfigError("hopt supports criteria 'obj' and 'grad'")
    h = analysis.hopt(args.N, kappa, args.criterion)
    lo, hi = analysis.hopt_bounds(args.N, kappa, args.criterion)
    value = (analysis.conj_gm_obj(args.N, h, kappa) if args.criterion == "obj"
             else analysis.conj_gm_grad(args.N, h, kappa))
    _emit(args, {"N": args.N, "kappa": kappa, "criterion": args.criterion,
                 "h_opt": h, "lower": lo, "upper": hi, "value_normalized": value})
    return EXIT_OK


def _sweep_rows(args) -> tuple[list[str], list[list]]:
    Ns = [int(x) for x in args.N_list.split(",")] if args.N_list else None
    solver = args.solver
    if args.table == "table1":
        Ns = Ns or [1, 2, 5, 10]
        header = ["N", "h_opt", "conjecture", "sdp", "rel_error"]
        rows = []
        for N in Ns:
            h = analysis.hopt(N, 0.0, "obj")
            conj = analysis.conj_gm_obj(N, h, 0.0)
            prob = pep.assemble(FunctionClass(0.0, 1.0), gm(N, h), 1.0,
                                pep.PerformanceCriterion("obj"))
            val = pep.solve(prob, solver=solver).value
            rows.append([N, h, conj, val, abs(val - conj) / conj])
        return header, rows
    if args.table == "table4":
        Ns = Ns or [2, 4, 10]
        header = ["N", "fgm_last_norm", "fgm_best_norm", "fgm_baseline_norm",
                  "mfgm_best_norm", "mfgm_baseline_norm",
                  "fgm_best_rel_baseline", "mfgm_best_rel_baseline"]
        rows = []
        for N in Ns:
            fc = FunctionClass(0.0, 1.0)
            last = pep.solve(pep.assemble(fc, fgm(N, "primary"), 1.0,
                                          pep.PerformanceCriterion("grad")),
                             solver=solver).value
            best = pep.solve(pep.assemble(fc, fgm(N, "primary"), 1.0,
                                          pep.PerformanceCriterion("mingrad")),
                             solver=solver).value
            fgm_base = analysis.baselines(N, method="fgm", criterion="grad")
            if N % 2 == 0:
                mbest = math.sqrt(pep.solve(
                    pep.assemble(fc, mfgm(N), 1.0,
                                 pep.PerformanceCriterion("mingrad")),
                    solver=solver).value)
                mbase = analysis.baselines(N, method="mfgm", criterion="mingrad")
                mrel = abs(mbest - mbase) / mbase
            else:
                mbest = mbase = mrel = float("nan")
            best = math.sqrt(best)
            rows.append([N, math.sqrt(last), best, fgm_base, mbest, mbase,
                         abs(best - fgm_base) / fgm_base, mrel])
        return header, rows
    if args.table == "figure4":
        Ns = Ns or list(range(1, 11))
        header = ["N", "fgm_primary_conj", "fgm_primary_baseline",
                  "fgm_secondary_conj", "fgm_secondary_baseline",
                  "primary_rel_baseline", "secondary_rel_baseline"]
        rows = []
        for N in Ns:
            cp = analysis.conj_fgm_ogm(N, "fgm", "primary")
            bp = analysis.baselines(N, method="fgm", criterion="obj",
                                    sequence="primary")
            cs = analysis.conj_fgm_ogm(N, "fgm", "secondary")
            bs = analysis.baselines(N, method="fgm", criterion="obj",
                                    sequence="secondary")
            rows.append([N, cp, bp, cs, bs, abs(cp - bp) / bp, abs(cs - bs) / bs])
        return header, rows
    if args.table == "figure5":
        Ns = Ns or [2, 4, 6, 8, 10]
        header = ["N", "fgm_last_norm", "fgm_last_baseline",
                  "fgm_best_norm", "mfgm_best_norm", "mfgm_best_baseline",
                  "fgm_last_rel_baseline"]
        rows = []
        fc = FunctionClass(0.0, 1.0)
        for N in Ns:
            last = math.sqrt(pep.solve(
                pep.assemble(fc, fgm(N, "primary"), 1.0,
                             pep.PerformanceCriterion("grad")),
                solver=solver).value)
            best = pep.solve(pep.assemble(fc, fgm(N, "primary"), 1.0,
                                          pep.PerformanceCriterion("mingrad")),
                             solver=solver).value
            if N % 2 == 0:
                mbest = math.sqrt(pep.solve(
                    pep.assemble(fc, mfgm(N), 1.0,
                                 pep.PerformanceCriterion("mingrad")),
                    solver=solver).value)
                mbase = analysis.baselines(N, method="mfgm", criterion="mingrad")
            else:
                mbest, mbase = float("nan"), float("nan")
            base = analysis.baselines(N, method="fgm", criterion="grad")
            rows.append([N, last, base, math.sqrt(best), mbest, mbase,
                         abs(last - base) / base])
        return header, rows
    raise ConfigError(f"unknown sweep table {args.table!r}")


def cmd_sweep(args) -> int:
    header, rows = _sweep_rows(args)
    if args.format == "json":
        payload = [dict(zip(header, row)) for row in rows]
        text = json.dumps(payload, indent=2)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(header)
        writer.writerows(rows)
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text, end="" if text.endswith("\n") else "\n")
    return EXIT_OK


def _emit(args, payload: dict) -> None:
    if getattr(args, "format", "json") == "csv":
        flat = _flatten(payload)
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(flat.keys())
        writer.writerow(flat.values())
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text, end="")


def _flatten(payload: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, prefix=f"{name}."))
        elif isinstance(value, list):
            out[name] = json.dumps(value)
        else:
            out[name] = value
    return out


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pepkit",
        description="Exact worst-case analysis of fixed-step first-order methods.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--solver", default=None,
                       help="conic backend (default: PEPKIT_SOLVER env or cvxopt)")

    ps = sub.add_parser("solve", help="worst case of a method, with certificate")
    ps.add_argument("--method", required=True,
                    choices=("gm", "fgm", "ogm", "mfgm", "custom"))
    ps.add_argument("--h", type=float, default=None, help="gm step size (normalized)")
    ps.add_argument("--h-file", default=None, help="step-matrix JSON for --method custom")
    ps.add_argument("--N", type=int, required=True)
    ps.add_argument("--mu", type=float, default=0.0)
    ps.add_argument("--L", type=float, default=1.0)
    ps.add_argument("--R", type=float, default=1.0)
    ps.add_argument("--criterion", choices=("obj", "grad", "dist", "mingrad"),
                    default="obj")
    ps.add_argument("--sequence", choices=("primary", "secondary"), default="primary")
    ps.add_argument("--export-sdpa", default=None, metavar="PATH")
    ps.add_argument("--certificate", default=None, metavar="PATH")
    ps.add_argument("--proof", default=None, metavar="PATH")
    ps.add_argument("--polish", action="store_true",
                    help="select an extreme optimal point (useful when several "
                         "worst cases tie)")
    common(ps)
    ps.set_defaults(func=cmd_solve)

    pi = sub.add_parser("interp", help="decide interpolability of a data-set file")
    pi.add_argument("--data", required=True, help="data-set JSON path")
    pi.add_argument("--mu", type=float, default=0.0)
    pi.add_argument("--L", type=float, default=math.inf)
    common(pi)
    pi.set_defaults(func=cmd_interp)

    ph = sub.add_parser("hopt", help="optimal constant step size for gradient descent")
    ph.add_argument("--N", type=int, required=True)
    ph.add_argument("--kappa", type=float, default=None)
    ph.add_argument("--mu", type=float, default=0.0)
    ph.add_argument("--L", type=float, default=1.0)
    ph.add_argument("--criterion", choices=("obj", "grad"), default="obj")
    common(ph)
    ph.set_defaults(func=cmd_hopt)

    pw = sub.add_parser("sweep", help="replicate a comparison table as CSV/JSON")
    pw.add_argument("--table", required=True,
                    choices=("table1", "table4", "figure4", "figure5"))
    pw.add_argument("--N-list", default=None, help="comma-separated N values")
    common(pw)
    pw.set_defaults(func=cmd_sweep, format="csv")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
