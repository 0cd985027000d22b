"""Command-line front end: ``bsquant <command> --config <path> [--out <dir>] [--seed <u64>]``.

Exit codes: 0 ok, 1 a check failed, 2 the configuration is unusable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import exact
from .acs import check_gamma_invariance, check_integrability
from .analysis import SweepRecord, SweepResult, SweepSetup, adiabatic_sweep, lp_norm
from .config import U64_MAX, ConfigError, ExperimentConfig
from .group_actions import verify_action_axioms
from .jacobi import relation_check, seeded_points
from .prequantum import BSPoint, NotLiftableError, bs_points, check_liftable
from .theta import ApproxThetaSection, ConvergenceError, ThetaSection

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
COMMANDS = ("check", "bs", "theta-eval", "norms", "sweep", "jacobi")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(v) -> str:
    return repr(float(v))


def _emit(text: str, out: Path | None, name: str | None, default: str):
    if out is None:
        sys.stdout.write(text)
        return
    path = out / (name or default)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}")


def _section(cfg: ExperimentConfig, t: float = 1.0):
    family = cfg.build_family()
    lift = cfg.build_lift(family)
    omega = cfg.build_omega(family.n)
    m = cfg.bs_index(family.n)
    cls = ApproxThetaSection if cfg.approximate else ThetaSection
    try:
        return cls(lift, m, cfg.adiabatic(omega, t), eps=cfg.tolerances.trunc_eps)
    except NotLiftableError:
        raise
    except (ValueError, TypeError) as err:
        if isinstance(err, ConvergenceError):
            raise
        raise ConfigError(str(err)) from err


# commands ----------------------------------------------------------------------------

def cmd_check(cfg: ExperimentConfig, out: Path | None, seed: int) -> int:
    family = cfg.build_family()
    omega = cfg.build_omega(family.n) if "invariance" in cfg.checks or "integrability" in cfg.checks else None
    rows = []
    for name in cfg.checks:
        if name == "liftable":
            rep = check_liftable(family, cfg.N, seed=seed)
            rows.append((name, rep.liftable, rep.witness))
        elif name == "action":
            rep = verify_action_axioms(family, seed=seed)
            rows.append((name, rep.passed, rep.witness))
        elif name == "integrability":
            rep = check_integrability(omega)
            rows.append((name, rep.integrable, None if rep.witness is None else {"ijk": list(rep.witness)}))
        elif name == "invariance":
            rep = check_gamma_invariance(omega, family, seed=seed, tol=cfg.tolerances.check_tol)
            rows.append((name, rep.passed, rep.witness))
    report = [{"check": n, "passed": bool(ok), "witness": w} for n, ok, w in rows]
    for item in report:
        status = "PASS" if item["passed"] else "FAIL"
        extra = "" if item["passed"] else f" witness={json.dumps(item['witness'], default=str, sort_keys=True)}"
        print(f"{item['check']}: {status}{extra}")
    if out is not None:
        _emit(json.dumps(report, default=str, indent=2, sort_keys=True) + "\n", out, cfg.outputs.json_path,
              "check.json")
    return EXIT_OK if all(item["passed"] for item in report) else EXIT_FAILED


def cmd_bs(cfg: ExperimentConfig, out: Path | None, seed: int) -> int:
    family = cfg.build_family()
    pts = bs_points(family, cfg.N)
    n = family.n
    header = ["index"] + [f"m_{k + 1}" for k in range(n)] + [f"x_{k + 1}" for k in range(n)]
    rows = [[i, *p.m, *(_num(v) for v in p.point_float)] for i, p in enumerate(pts)]
    _emit(_csv_text(header, rows), out, cfg.outputs.csv, "bs.csv")
    return EXIT_OK


def cmd_theta_eval(cfg: ExperimentConfig, out: Path | None, seed: int) -> int:
    section = _section(cfg, cfg.t_list[0])
    n = section.n
    x, y = seeded_points(n, cfg.points, seed)
    values = section.evaluate(x, y)
    header = [f"x_{k + 1}" for k in range(n)] + [f"y_{k + 1}" for k in range(n)] + ["re", "im", "abs"]
    rows = [[*(_num(v) for v in x[k]), *(_num(v) for v in y[k]), _num(values[k].real), _num(values[k].imag),
             _num(abs(values[k]))] for k in range(len(x))]
    _emit(_csv_text(header, rows), out, cfg.outputs.csv, "theta.csv")
    return EXIT_OK


def cmd_norms(cfg: ExperimentConfig, out: Path | None, seed: int) -> int:
    grid = cfg.build_grid()
    tol = cfg.tolerances.quad_tol
    result = SweepResult()
    for t in cfg.t_list:
        section = _section(cfg, t)
        for p in (1, 2):
            r = lp_norm(section, p, grid=grid)
            closed = None if r.closed_form is None else r.closed_form ** (1.0 / p)
            rel = None if closed is None else abs(r.norm - closed) / closed
            result.records.append(SweepRecord(t, f"l{p}_norm", r.norm, closed, rel, tol))
    _emit(result.to_csv(), out, cfg.outputs.csv, "norms.csv")
    failed = any(r.rel_err is not None and r.rel_err > r.tolerance for r in result.records)
    return EXIT_FAILED if failed else EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, out: Path | None, seed: int) -> int:
    family = cfg.build_family()
    lift = cfg.build_lift(family)
    omega = cfg.build_omega(family.n)
    setup = SweepSetup(lift=lift, m=cfg.bs_index(family.n), omega=omega, approximate=cfg.approximate,
                       eps=cfg.tolerances.trunc_eps, grid=cfg.build_grid(), quantities=tuple(cfg.quantities),
                       test_base=cfg.test_base(family.n),
                       test_radius=cfg.test_section.radius if cfg.test_section else 6.0,
                       tolerance=cfg.tolerances.quad_tol)
    result = adiabatic_sweep(setup, cfg.t_list)
    _emit(result.to_csv(), out, cfg.outputs.csv, "sweep.csv")
    if out is not None:
        _emit(result.to_json() + "\n", out, cfg.outputs.json_path, "sweep.json")
    for q, slope in sorted(result.slopes.items()):
        print(f"slope {q}: {slope:.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_jacobi(cfg: ExperimentConfig, out: Path | None, seed: int) -> int:
    family = cfg.build_family()
    n = family.n
    if family.name != "flat_torus" or not np.array_equal(exact.to_float(family.chart), np.eye(n)):
        raise ConfigError("the jacobi command needs flat_torus with C = I")
    if cfg.phases is not None and any(p % 1 for p in cfg.phases):
        raise ConfigError("the jacobi command needs trivial generator phases")
    omega = cfg.build_omega(n)
    if not omega.is_constant():
        raise ConfigError("the jacobi command needs a constant omega")
    W = omega(np.zeros(n))
    points = seeded_points(n, cfg.points, seed)
    tol = cfg.tolerances.check_tol
    rows, failed = [], False
    for bs in bs_points(family, cfg.N):
        res = relation_check(BSPoint(bs.m, cfg.N), W, points)
        failed |= res >= tol
        rows.append([*bs.m, _num(res), _num(tol)])
    header = [f"m_{k + 1}" for k in range(n)] + ["residual", "tolerance"]
    _emit(_csv_text(header, rows), out, cfg.outputs.csv, "jacobi.csv")
    return EXIT_FAILED if failed else EXIT_OK


HANDLERS = {"check": cmd_check, "bs": cmd_bs, "theta-eval": cmd_theta_eval, "norms": cmd_norms,
            "sweep": cmd_sweep, "jacobi": cmd_jacobi}


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bsquant", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--seed", type=_seed, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = ExperimentConfig.load(args.config)
        seed = cfg.seed if args.seed is None else args.seed
        return HANDLERS[args.command](cfg, args.out, seed)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (NotLiftableError, ConvergenceError) as err:
        print(f"check failed: {err}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
