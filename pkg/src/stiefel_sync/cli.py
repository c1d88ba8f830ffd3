"""Command-line experiment runner.

Subcommands:
    run <config.json> [...] [--out DIR]   execute scenarios (batch runs in
                                          parallel, capped by the
                                          STIEFEL_SYNC_THREADS variable)
    gen <template> --seed K [--set k=v]   write a scenario file
    audit <traj.csv> --config <cfg.json>  re-check the inequality audits on
                                          an emitted series file

Exit codes: 0 success; 2 scenario parse/validation error; 3 integration
divergence; 4 audit violation; 5 declared expectation unmet; 1 anything else.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, diagnostics
from .errors import DivergenceError, ScenarioError, StiefelSyncError
from .scenario import (
    RunReport,
    Scenario,
    TEMPLATES,
    generate_scenario,
    parse_override_value,
    run_scenario,
)
from .series_io import emit_series, read_series

__all__ = [
    "main",
    "build_parser",
    "run_scenario",
    "generate_scenario",
    "emit_series",
    "read_series",
    "RunReport",
    "Scenario",
]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SCENARIO = 2
EXIT_DIVERGENCE = 3
EXIT_AUDIT = 4
EXIT_EXPECTATION = 5


def _thread_cap() -> int:
    raw = os.environ.get("STIEFEL_SYNC_THREADS", "")
    if raw.strip():
        try:
            cap = int(raw)
        except ValueError:
            raise ScenarioError(f"STIEFEL_SYNC_THREADS must be an integer, got {raw!r}")
        if cap < 1:
            raise ScenarioError("STIEFEL_SYNC_THREADS must be >= 1")
        return cap
    return os.cpu_count() or 1


def _resolve_config(path: str) -> str:
    """A plain name that is not a file on disk falls back to the bundled
    scenario of that name."""
    if os.path.exists(path):
        return path
    candidate = os.path.join(os.path.dirname(__file__), "scenarios", f"{path}.json")
    if os.path.exists(candidate):
        return candidate
    raise ScenarioError(f"scenario not found: {path!r} (no such file or bundled name)")


def _report_exit_code(report: RunReport) -> int:
    if report.audits is not None and not all(a["passed"] for a in report.audits):
        return EXIT_AUDIT
    if any(not e["ok"] for e in report.expectations):
        return EXIT_EXPECTATION
    return EXIT_OK


def _print_report(report: RunReport, out) -> None:
    print(f"scenario {report.scenario}: {'ok' if report.ok else 'FAILED'}", file=out)
    if report.framework is not None:
        flags = ", ".join(
            f"{c['name']}={'ok' if c['satisfied'] else 'FAIL'}"
            for c in report.framework["conditions"]
        )
        print(f"  framework: {flags}", file=out)
    if report.consensus is not None:
        print(f"  consensus: {report.consensus['kind']}", file=out)
    if report.decay is not None:
        print(
            f"  decay: rate={report.decay['rate']:.6g} r2={report.decay['r_squared']:.6f}"
            f" bound={report.decay['delta_lower']:.6g}",
            file=out,
        )
    if report.gain is not None:
        gains = ", ".join(f"l{p}={g:.6g}" for p, g in sorted(report.gain.items()))
        print(f"  gain: {gains}", file=out)
    if report.audits is not None:
        for audit in report.audits:
            verdict = "pass" if audit["passed"] else "FAIL"
            print(
                f"  audit {audit['name']}: max_violation={audit['max_violation']:.3e}"
                f" tol={audit['tol']:.3e} {verdict}",
                file=out,
            )
    for expectation in report.expectations:
        verdict = "ok" if expectation["ok"] else "UNMET"
        print(f"  expect {expectation['name']}: {verdict} ({expectation['detail']})", file=out)
    for artifact in report.artifacts:
        print(f"  wrote {artifact}", file=out)


def _cmd_run(args, out, err) -> int:
    paths = [_resolve_config(c) for c in args.configs]

    def one(path: str) -> tuple[int, RunReport | None, Exception | None]:
        try:
            report = run_scenario(path, out_dir=args.out)
            return _report_exit_code(report), report, None
        except ScenarioError as exc:
            return EXIT_SCENARIO, None, exc
        except DivergenceError as exc:
            return EXIT_DIVERGENCE, None, exc
        except StiefelSyncError as exc:
            return EXIT_ERROR, None, exc

    if len(paths) == 1:
        results = [one(paths[0])]
    else:
        with ThreadPoolExecutor(max_workers=min(_thread_cap(), len(paths))) as pool:
            results = list(pool.map(one, paths))

    worst = EXIT_OK
    for path, (code, report, exc) in zip(paths, results):
        if report is not None:
            _print_report(report, out)
        if exc is not None:
            print(f"error in {path}: {exc}", file=err)
        worst = max(worst, code)
    return worst


def _cmd_gen(args, out, err) -> int:
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            print(f"error: --set needs key=value, got {item!r}", file=err)
            return EXIT_SCENARIO
        key, _, value = item.partition("=")
        overrides[key] = parse_override_value(value)
    try:
        path = generate_scenario(args.template, args.seed, overrides, args.out)
    except ScenarioError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_SCENARIO
    print(f"wrote {path}", file=out)
    return EXIT_OK


def _cmd_audit(args, out, err) -> int:
    try:
        scenario = Scenario.from_file(_resolve_config(args.config))
        series = read_series(args.series)
    except (ScenarioError, StiefelSyncError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_SCENARIO

    cfg = scenario.model
    times = series.get("t")
    if times is None or "diam_S" not in series:
        print("error: series lacks the required t and diam_S columns", file=err)
        return EXIT_SCENARIO

    audits = []
    try:
        audits.append(diagnostics.audit_diameter_bound_series(times, series["diam_S"], cfg))
        if {"corr_sq", "corr_skew_sq", "diam_S_tilde"} <= series.keys():
            audits.append(
                diagnostics.audit_correlation_contraction_series(
                    times,
                    series["corr_sq"],
                    series["corr_skew_sq"],
                    series["diam_S"],
                    series["diam_S_tilde"],
                    cfg,
                )
            )
        agent_columns = sorted(
            (name for name in series if name.startswith("dist_agent_")),
            key=lambda name: int(name.rsplit("_", 1)[1]),
        )
        if agent_columns and "diam_S_tilde" in series:
            dists = np.column_stack([series[name] for name in agent_columns])
            z = np.maximum(series["diam_S"], series["diam_S_tilde"])
            audits.append(
                diagnostics.audit_agent_distance_bound_series(times, dists, z, cfg)
            )
    except StiefelSyncError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_SCENARIO

    failed = False
    for audit in audits:
        verdict = "pass" if audit.passed else "FAIL"
        failed = failed or not audit.passed
        print(
            f"audit {audit.name}: max_violation={audit.max_violation:.3e}"
            f" tol={audit.tol:.3e} {verdict}",
            file=out,
        )
    return EXIT_AUDIT if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stiefel-sync",
        description="Simulate and verify consensus dynamics on Stiefel manifolds.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one or more scenario files")
    run_p.add_argument("configs", nargs="+", help="scenario paths or bundled names")
    run_p.add_argument("--out", default=".", help="output directory (default: cwd)")

    gen_p = sub.add_parser("gen", help="generate a scenario from a template")
    gen_p.add_argument("template", choices=TEMPLATES)
    gen_p.add_argument("--seed", type=int, required=True)
    gen_p.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="override a field (dotted path)"
    )
    gen_p.add_argument("--out", default=None, help="output file (default: <name>.json)")

    audit_p = sub.add_parser("audit", help="re-run inequality audits on an emitted CSV")
    audit_p.add_argument("series", help="trajectory/diagnostics CSV")
    audit_p.add_argument("--config", required=True, help="scenario path or bundled name")
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args, out, err)
        if args.command == "gen":
            return _cmd_gen(args, out, err)
        if args.command == "audit":
            return _cmd_audit(args, out, err)
        raise AssertionError(f"unhandled command {args.command!r}")
    except ScenarioError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_SCENARIO
    except DivergenceError as exc:
        print(f"error: diverged (last good time {exc.last_good_time:.6g}): {exc}", file=err)
        return EXIT_DIVERGENCE
    except StiefelSyncError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
