"""Command line entry point: ``planimm <subcommand> ...``.

Exit status is 0 when every check passes, 1 when a check fails, and 2 for
usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from planimm import __version__
from planimm.boundary import BoundaryData
from planimm.compat import DEFAULT_RELATIVE_TOL, compatibility_defect
from planimm.config import ConfigError, load_config
from planimm.counterexample3d import run_counterexample
from planimm.field import Grid2, MapField, ScalarField, curl, curl_via_dual, dual_map, jacobian_det
from planimm.geodesic import reconstruct_map
from planimm.maps import MAPS, get_map, parse_map_spec
from planimm.metric import induced_metric, verify_lemma1
from planimm.solver import Prescription, solve, sup_distance, uniqueness_experiment
from planimm.verify import ALGEBRA_TOL, algebra_suite, convergence_table

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(out: Path | None, name: str, data) -> None:
    if out is not None:
        (out / name).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def _write_csv(out: Path | None, name: str, rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    if out is not None:
        (out / name).write_text(buf.getvalue(), encoding="utf-8")
    return buf.getvalue()


def _echo(out, args, extra=None) -> None:
    data = {k: v for k, v in vars(args).items() if k != "func"}
    if extra:
        data.update(extra)
    _write_json(out, "run.json", data)


def _grid(args) -> Grid2:
    try:
        return Grid2.square(args.grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _map(spec: str):
    try:
        return parse_map_spec(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_verify_algebra(args) -> int:
    out = _out_dir(args)
    results = algebra_suite(args.samples, args.seed)
    rows = [{"identity": k, "max_error": v, "pass": v <= ALGEBRA_TOL} for k, v in results.items()]
    for r in rows:
        print(f"{'PASS' if r['pass'] else 'FAIL'}  {r['max_error']:.3e}  {r['identity']}")
    _echo(out, args)
    _write_csv(out, "algebra.csv", rows)
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL


def cmd_verify_ops(args) -> int:
    out = _out_dir(args)
    m = _map(args.map)
    sizes = [int(s) for s in args.grids.split(",")]
    rows = convergence_table(m, sizes)
    print(_write_csv(out, "convergence.csv", rows), end="")
    ok = all(r["jac_ratio"] is None or (r["jac_ratio"] >= args.min_ratio and r["curl_ratio"] >= args.min_ratio)
             for r in rows)
    identity_rows = []
    for name in sorted(MAPS):
        fmap = MAPS[name]()
        for n in sizes:
            f = fmap.sample(Grid2.square(n))
            same_jac = np.array_equal(jacobian_det(dual_map(f)).values, jacobian_det(f).values)
            same_curl = np.array_equal(curl(f).values, curl_via_dual(f).values)
            identity_rows.append({"map": fmap.label(), "n": n, "jac_dual_equal": same_jac,
                                  "curl_trace_equal": same_curl})
            ok &= same_jac and same_curl
    _write_csv(out, "dual_identities.csv", identity_rows)
    bad = [r for r in identity_rows if not (r["jac_dual_equal"] and r["curl_trace_equal"])]
    print(f"dual-map identities exact on {len(identity_rows) - len(bad)}/{len(identity_rows)} cases")
    _echo(out, args)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify_lemma1(args) -> int:
    out = _out_dir(args)
    m = _map(args.map)
    f = m.sample(_grid(args))
    report = verify_lemma1(f)
    data = {"map": m.label(), "grid": args.grid, "tol": args.tol, **report.to_dict()}
    print(f"max metric discrepancy {report.max_discrepancy:.3e}, "
          f"(trace, det) discrepancy {report.max_char_discrepancy:.3e}, "
          f"defective nodes {len(report.defective_nodes)}")
    _echo(out, args)
    _write_json(out, "lemma1.json", data)
    if out is not None:
        f.save(out / "map.field")
        induced_metric(f).save(out / "metric.field")
    ok = report.ok and report.max_discrepancy < args.tol and report.max_char_discrepancy < args.tol
    return EXIT_OK if ok else EXIT_FAIL


def cmd_reconstruct(args) -> int:
    out = _out_dir(args)
    m = _map(args.map)
    f = m.sample(_grid(args))
    rec, report = reconstruct_map(induced_metric(f), BoundaryData.from_field(f), args.directions,
                                  oracle=m, interpolation=args.interpolation)
    data = report.to_dict()
    print(f"max spread {report.max_spread:.3e}, max error {report.max_error:.3e}, "
          f"failures {len(report.failures)}")
    _echo(out, args)
    _write_json(out, "reconstruction.json", data)
    if out is not None:
        rec.save(out / "reconstruction.field")
    ok = not report.failures and report.max_spread < args.tol and report.max_error < args.tol
    return EXIT_OK if ok else EXIT_FAIL


def _load(args):
    try:
        return load_config(args.config)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def cmd_solve(args) -> int:
    out = _out_dir(args)
    cfg = _load(args)
    m = cfg.analytic_map()
    p = Prescription.from_map(m, cfg.grid)
    if cfg.init == "identity":
        init = MapField(cfg.grid, p.boundary.apply(get_map("identity").sample(cfg.grid).values))
    else:
        init = p.boundary.blend()
    report = solve(p, init, cfg.solver)
    exact = m.sample(cfg.grid)
    err = sup_distance(report.solution, exact)
    data = {**report.to_dict(), "oracle": m.label(), "oracle_error": err}
    print(f"converged={report.converged} iterations={report.iterations} "
          f"residual={report.residual_max:.3e} oracle error={err:.3e} ({report.message})")
    _write_json(out, "config.json", cfg.to_dict())
    _write_json(out, "solve.json", data)
    _write_csv(out, "history.csv", report.history)
    if out is not None:
        report.solution.save(out / "solution.field")
    return EXIT_OK if report.converged else EXIT_FAIL


def cmd_uniqueness(args) -> int:
    out = _out_dir(args)
    cfg = _load(args)
    p = Prescription.from_map(cfg.analytic_map(), cfg.grid)
    report = uniqueness_experiment(p, cfg.n_starts, cfg.sigma, cfg.seed, cfg.solver,
                                   threads=args.threads)
    print(f"{report.n_converged}/{cfg.n_starts} starts converged; "
          f"max pairwise sup-distance {report.max_distance:.3e}")
    _write_json(out, "config.json", cfg.to_dict())
    _write_json(out, "uniqueness.json", report.to_dict())
    if out is not None:
        for k in report.converged:
            report.reports[k].solution.save(out / f"solution_{k:03d}.field")
    ok = (report.n_converged >= max(2, cfg.min_converged)
          and report.max_distance < cfg.distance_tol)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_compat(args) -> int:
    out = _out_dir(args)
    if args.curl_file or args.boundary_file:
        if not (args.curl_file and args.boundary_file):
            raise UsageError("--curl-file and --boundary-file must be given together")
        try:
            crl = ScalarField.load(args.curl_file)
            b = BoundaryData.from_field(MapField.load(args.boundary_file))
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from None
    else:
        if args.map is None or args.grid is None:
            raise UsageError("compat needs --map and --grid, or --curl-file and --boundary-file")
        f = _map(args.map).sample(_grid(args))
        b = BoundaryData.from_field(f)
        crl = ScalarField(f.grid, args.curl_const) if args.curl_const is not None else curl(f)
    report = compatibility_defect(crl, b)
    print(report.summary())
    _echo(out, args)
    _write_json(out, "compat.json", report.to_dict())
    return EXIT_OK if report.ok(args.rel_tol) else EXIT_FAIL


def cmd_counterexample3d(args) -> int:
    out = _out_dir(args)
    report = run_counterexample()
    print(report.table())
    _echo(out, args)
    _write_json(out, "counterexample3d.json", report.to_dict())
    return EXIT_OK if report.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="directory for reports and field files")
    common.add_argument("--json-errors", action="store_true",
                        help="report errors as JSON on stderr")
    common.add_argument("--threads", type=int, default=1, help="cap on worker threads")

    parser = _Parser(prog="planimm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify-algebra", parents=[common], help="Cl(2,0) identity suite")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_algebra)

    p = sub.add_parser("verify-ops", parents=[common], help="operator convergence and dual identities")
    p.add_argument("--map", default="sinusoidal:amplitude=0.1")
    p.add_argument("--grids", default="17,33,65")
    p.add_argument("--min-ratio", type=float, default=3.0)
    p.set_defaults(func=cmd_verify_ops)

    p = sub.add_parser("verify-lemma1", parents=[common], help="metric from (Jac, curl) eigendata")
    p.add_argument("--map", required=True)
    p.add_argument("--grid", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_verify_lemma1)

    p = sub.add_parser("reconstruct", parents=[common], help="map from metric + boundary by geodesics")
    p.add_argument("--map", required=True)
    p.add_argument("--grid", type=int, required=True)
    p.add_argument("--directions", type=int, default=8)
    p.add_argument("--tol", type=float, default=5e-3)
    p.add_argument("--interpolation", choices=("bilinear", "bicubic"), default="bilinear")
    p.set_defaults(func=cmd_reconstruct)

    for name, func, help_ in (("solve", cmd_solve, "solve one prescription"),
                              ("uniqueness", cmd_uniqueness, "multi-start uniqueness experiment")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--config", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("compat", parents=[common], help="curl/boundary compatibility defect")
    p.add_argument("--map")
    p.add_argument("--grid", type=int)
    p.add_argument("--curl-const", type=float)
    p.add_argument("--curl-file")
    p.add_argument("--boundary-file")
    p.add_argument("--rel-tol", type=float, default=DEFAULT_RELATIVE_TOL)
    p.set_defaults(func=cmd_compat)

    p = sub.add_parser("counterexample3d", parents=[common], help="3D equal Jac/curl, unequal metrics")
    p.set_defaults(func=cmd_counterexample3d)
    return parser


def _error(kind: str, message: str, as_json: bool) -> None:
    if as_json:
        print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    else:
        print(f"planimm: {kind}: {message}", file=sys.stderr)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    as_json = "--json-errors" in argv
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        _error("usage", str(exc), as_json)
        return EXIT_USAGE
    if args.threads < 1:
        _error("usage", "--threads must be positive", as_json)
        return EXIT_USAGE
    try:
        import numba

        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    except ImportError:  # pragma: no cover
        pass
    try:
        return args.func(args)
    except UsageError as exc:
        _error("usage", str(exc), as_json)
        return EXIT_USAGE
    except (ValueError, RuntimeError) as exc:
        _error(type(exc).__name__, str(exc), as_json)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
