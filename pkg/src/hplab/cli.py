"""Command-line entry point: ``hplab {verify,subspace,solve,convergence}``.

Exit codes: 0 pass, 1 quantitative failure, 2 usage or domain error.
Reports are JSON (``{"header": ..., "body": ...}``) or CSV (``#`` header
lines followed by a table). Only the header carries run-dependent data such as
timestamps and wall-clock time.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

from . import __version__
from . import _kernels
from . import expr as E
from . import invariant as inv
from . import solutions as S
from . import solver as SV
from . import verify as V

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

FAMILY_FLAGS = ("n", "c1", "c2", "beta", "omega", "alpha", "t0")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HPLAB_THREADS", "1")))
    except ValueError:
        raise UsageError("HPLAB_THREADS must be an integer")


def _header(args) -> dict:
    return {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "version": __version__,
        "backend": _kernels.BACKEND,
        "command": args.command,
        "seed": args.seed,
    }


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".hplab-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, bool):
        return "true" if x else "false"
    return "" if x is None else str(x)


def render(header: dict, body: dict, columns: list[str], rows: list[list], fmt: str) -> str:
    """JSON carries the table under ``body["table"]``; CSV is the table itself."""
    if fmt == "json":
        doc = {"header": header, "body": {**body, "table": {"columns": columns, "rows": rows}}}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    for k in sorted(header):
        buf.write(f"# {k}: {header[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def emit(args, body: dict, columns, rows) -> None:
    text = render(_header(args), body, columns, rows, args.format)
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _family_kwargs(args) -> dict:
    return {k: getattr(args, k) for k in FAMILY_FLAGS if getattr(args, k, None) is not None}


def _build(name: str, kw: dict) -> S.SolutionFamily:
    try:
        return S.build_family(name, **kw)
    except KeyError as exc:
        raise UsageError(str(exc.args[0]))
    except S.EmptyValidityRegion as exc:
        raise UsageError(str(exc))
    except ValueError as exc:
        raise UsageError(str(exc))


# ---------------------------------------------------------------------------
# commands


def cmd_verify(args) -> int:
    fam = _build(args.family, _family_kwargs(args))
    try:
        rep = V.residual(fam, args.n_eta, args.n_t, t_max=args.t_max)
    except (ValueError, E.DomainError) as exc:
        raise UsageError(str(exc))
    passed = rep.max_abs_residual <= args.threshold
    body = {
        "family": fam.to_dict(),
        "equation": rep.equation,
        "grid": {"eta": rep.eta.tolist(), "t": rep.t.tolist()},
        "max_abs_residual": rep.max_abs_residual,
        "mean_abs_residual": rep.mean_abs_residual,
        "argmax": {"eta": rep.argmax[0], "t": rep.argmax[1]},
        "threshold": args.threshold,
        "passed": passed,
    }
    columns = ["case", "max_abs_residual", "mean_abs_residual", "argmax_eta", "argmax_t"]
    rows = [[fam.name, rep.max_abs_residual, rep.mean_abs_residual, rep.argmax[0], rep.argmax[1]]]
    if args.controls:
        ctrl = V.negative_controls(fam, t_max=args.t_max, n_eta=args.n_eta, n_t=args.n_t)
        body["controls"] = {k: r.max_abs_residual for k, r in ctrl.items()}
        body["control_threshold"] = args.control_threshold
        for k, r in ctrl.items():
            rows.append([f"{fam.name}~{k}", r.max_abs_residual, r.mean_abs_residual, r.argmax[0], r.argmax[1]])
            passed = passed and r.max_abs_residual > args.control_threshold
        body["passed"] = passed
    emit(args, body, columns, rows)
    if not passed:
        print(f"verify: {fam.name} failed (max residual {rep.max_abs_residual:.3g})", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_subspace(args) -> int:
    try:
        basis = inv.parse_basis(args.basis)
        sub = inv.SubspaceSpec(basis, (args.eta_min, args.eta_max), args.M, args.trials,
                               (args.coef_min, args.coef_max), args.seed)
        verdict = inv.check_invariance(args.op, sub, args.threshold, n=args.n)
    except (E.ParseError, inv.IllConditionedBasis, E.DomainError, ValueError) as exc:
        raise UsageError(str(exc))
    map_check = inv.w3_map_check(verdict, sub) if args.op.replace(" ", "") == "u*lap(u)" else None
    k = sub.k
    body = {
        "operator": args.op,
        "basis": [E.to_str(b) for b in sub.basis],
        "M": sub.M,
        "N": sub.trials,
        "threshold": args.threshold,
        "verdict": verdict.label,
        "worst_residual": verdict.worst_relative_residual,
        "smallest_singular_value": verdict.smallest_singular_value,
        "map_check": map_check,
    }
    columns = ["trial", "relative_residual"] + [f"c{j + 1}" for j in range(k)] + [f"a{j + 1}" for j in range(k)]
    rows = [[i, r, *map(float, c), *map(float, a)]
            for i, (r, c, a) in enumerate(zip(verdict.residuals, verdict.coefficients, verdict.maps))]
    emit(args, body, columns, rows)
    return EXIT_OK if verdict.invariant else EXIT_FAIL


_EQ_FAMILY = {
    "porous-decay": "theorem21-classical",
    "quasilinear": "theorem22-blowup",
    "periodic-forced": "theorem21-periodic",
}
# positive initial data for the quasilinear runs (see README)
_QUASILINEAR_DEFAULTS = {"t0": 1.0, "c1": -1.0, "c2": 0.0}


def _problem(args) -> SV.EvolutionProblem:
    kw = _family_kwargs(args)
    name = args.family or _EQ_FAMILY[args.eq]
    if args.family is None and args.eq == "porous-decay" and "beta" in kw:
        name = "theorem21-caputo"
    if name == "theorem22-blowup" and args.family is None:
        kw = {**_QUASILINEAR_DEFAULTS, **kw}
    fam = _build(name, kw)
    try:
        grid = SV.RadialGrid(args.eta_min, args.eta_max, args.grid)
        return SV.EvolutionProblem(fam, grid, SV.Equation(args.eq))
    except ValueError as exc:
        raise UsageError(str(exc))


def _scheme(args, p: SV.EvolutionProblem) -> SV.Scheme:
    if args.scheme:
        return SV.Scheme(args.scheme)
    if p.op.kind is SV.Kind.CAPUTO and p.op.beta != 1.0:
        return SV.Scheme.FRACTIONAL_L1
    return SV.Scheme.RK4


def _t_end(args, p) -> float:
    if args.t_end is not None:
        return args.t_end
    return 0.5 if math.isfinite(p.t_limit) else 1.0


def _run(p, spec) -> SV.RunResult:
    try:
        return SV.run(p, spec)
    except ValueError as exc:
        raise UsageError(str(exc))


def cmd_solve(args) -> int:
    p = _problem(args)
    t_end = _t_end(args, p)
    snaps = tuple(float(x) for x in args.snapshots.split(",")) if args.snapshots else ()
    spec = SV.RunSpec(t_end, _scheme(args, p), args.dt, snaps)
    try:
        res = _run(p, spec)
    except SV.SolverError as exc:
        print(f"solve: {exc}", file=sys.stderr)
        return EXIT_FAIL
    body = {
        "equation": p.equation.value,
        "family": p.family.to_dict(),
        "grid": {"eta_min": p.grid.eta_min, "eta_max": p.grid.eta_max, "I": p.grid.I},
        **res.to_dict(),
    }
    columns = ["t", "linf", "l2", "rel_linf"]
    rows = [[s.t, s.linf, s.l2, s.rel_linf] for s in res.snapshots]
    emit(args, body, columns, rows)
    if args.snapshot_dir:
        for s in res.snapshots:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["eta", "u_real", "u_imag", "exact_real", "exact_imag", "abs_err"])
            for row in s.rows():
                w.writerow([repr(x) for x in row])
            _atomic_write(os.path.join(args.snapshot_dir, f"snapshot_t{s.t:.6g}.csv"), buf.getvalue())
    if args.max_error is not None and not res.linf <= args.max_error:
        print(f"solve: L-infinity error {res.linf:.3g} exceeds {args.max_error:g}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_convergence(args) -> int:
    base = _problem(args)
    scheme = _scheme(args, base)
    t_end = _t_end(args, base)
    temporal = scheme is SV.Scheme.FRACTIONAL_L1 or args.dts
    if temporal:
        counts = [int(x) for x in (args.dts or "16,32,64,128").split(",")]
        if any(b <= a for a, b in zip(counts, counts[1:])):
            raise UsageError("--dts step counts must increase")
        if len(counts) < 3:
            raise UsageError("--dts needs at least three step counts")

        def one(nsteps):
            return _run(base, SV.RunSpec(t_end, scheme, t_end / nsteps))
        res_list = _map(one, counts)
        h = [t_end / c for c in counts]
        resolutions = counts
        floor = args.min_order if args.min_order is not None else 1.3
    else:
        grids = [int(x) for x in args.grids.split(",")]
        if any(b <= a for a, b in zip(grids, grids[1:])):
            raise UsageError("--grids must increase")
        if len(grids) < 3:
            raise UsageError("--grids needs at least three grids")

        def one(I):
            ns = argparse.Namespace(**{**vars(args), "grid": I})
            p = _problem(ns)
            return _run(p, SV.RunSpec(t_end, scheme, args.dt))
        res_list = _map(one, grids)
        h = [(args.eta_max - args.eta_min) / (I - 1) for I in grids]
        resolutions = grids
        floor = args.min_order if args.min_order is not None else 1.8
    try:
        rep = V.fit_order([r.linf for r in res_list], h, resolutions, [r.l2 for r in res_list],
                          label="temporal" if temporal else "spatial")
    except ValueError as exc:
        print(f"convergence: {exc}", file=sys.stderr)
        return EXIT_FAIL
    passed = rep.global_order >= floor
    body = {"equation": base.equation.value, "scheme": scheme.value, "t_end": t_end,
            "min_order": floor, "passed": passed, **rep.to_dict()}
    columns = ["resolution", "h", "linf", "l2", "order"]
    rows = []
    for i, r in enumerate(rep.resolutions):
        rows.append([r, rep.h[i], rep.errors_linf[i], rep.errors_l2[i],
                     rep.pairwise[i] if i < len(rep.pairwise) else None])
    rows.append(["global", None, None, None, rep.global_order])
    emit(args, body, columns, rows)
    if not passed:
        print(f"convergence: order {rep.global_order:.3f} below floor {floor:g}", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


def _map(fn, items):
    workers = min(_threads(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--seed", type=int, default=0)


def _family_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("family parameters")
    for k in ("n", "c1", "c2", "beta", "omega", "alpha", "t0"):
        g.add_argument(f"--{k}", type=float)


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eq", choices=tuple(_EQ_FAMILY), default="porous-decay")
    p.add_argument("--family", help="override the family generating initial and boundary data")
    p.add_argument("--scheme", choices=[s.value for s in SV.Scheme])
    p.add_argument("--eta-min", type=float, default=0.1)
    p.add_argument("--eta-max", type=float, default=8.0)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float)
    _family_args(p)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hplab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"hplab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="residual of an exact family in its equation")
    p.add_argument("--family", required=True, help=", ".join(S.family_names()))
    p.add_argument("--threshold", type=float, default=1e-9)
    p.add_argument("--t-max", type=float)
    p.add_argument("--n-eta", type=int, default=40)
    p.add_argument("--n-t", type=int, default=40)
    p.add_argument("--controls", action="store_true", help="also run the perturbed negative controls")
    p.add_argument("--control-threshold", type=float, default=1e-6)
    _family_args(p)
    _common(p)

    p = sub.add_parser("subspace", help="numerical invariant-subspace check")
    p.add_argument("--op", required=True, help='operator text in u and lap, e.g. "u*lap(u)"')
    p.add_argument("--basis", default=";".join(inv.W3_BASIS), help="';'-separated functions of eta")
    p.add_argument("--M", type=int)
    p.add_argument("--trials", type=int, default=inv.DEFAULT_TRIALS)
    p.add_argument("--eta-min", type=float, default=inv.DEFAULT_RANGE[0])
    p.add_argument("--eta-max", type=float, default=inv.DEFAULT_RANGE[1])
    p.add_argument("--coef-min", type=float, default=inv.DEFAULT_COEF_RANGE[0])
    p.add_argument("--coef-max", type=float, default=inv.DEFAULT_COEF_RANGE[1])
    p.add_argument("--threshold", type=float, default=inv.DEFAULT_THRESHOLD)
    p.add_argument("--n", type=float, help="value substituted for n in the operator text")
    _common(p)

    p = sub.add_parser("solve", help="finite-difference run against an exact family")
    _solver_args(p)
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--snapshots", help="comma-separated snapshot times")
    p.add_argument("--snapshot-dir", help="write one CSV per snapshot here")
    p.add_argument("--max-error", type=float, help="exit 1 if the final L-infinity error exceeds this")
    _common(p)

    p = sub.add_parser("convergence", help="grid or time-step refinement study")
    _solver_args(p)
    p.add_argument("--grids", default="50,100,200,400")
    p.add_argument("--dts", help="increasing step counts for a temporal study")
    p.add_argument("--grid", type=int, default=200, help="grid for temporal studies")
    p.add_argument("--min-order", type=float)
    _common(p)
    return ap


COMMANDS = {"verify": cmd_verify, "subspace": cmd_subspace, "solve": cmd_solve,
            "convergence": cmd_convergence}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"hplab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
