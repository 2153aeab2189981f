"""Command-line entry point: run, sweep, verify, report."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import engine, pdf, reporter
from .config import InvalidConfig, RunConfig, load_config
from .structural import verify

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_VERIFY = 0, 2, 3, 4
OUT_ENV = "RUNNERPCG_OUT"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _config_from_args(args) -> RunConfig:
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
    except FileNotFoundError:
        raise CliError(f"config file not found: {args.config}", EXIT_USAGE)
    except json.JSONDecodeError as exc:
        raise CliError(f"config is not valid JSON: {exc}", EXIT_USAGE)
    except InvalidConfig as exc:
        raise CliError(f"invalid config: {exc}", EXIT_USAGE)
    changes = {}
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"--set expects KEY=VALUE, got {item!r}", EXIT_USAGE)
        changes[key.strip()] = _parse_value(value)
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "auto_remove", False):
        changes["auto_remove"] = True
    try:
        return cfg.replace(**changes) if changes else cfg
    except (InvalidConfig, TypeError) as exc:
        raise CliError(f"invalid config: {exc}", EXIT_USAGE)


def _clock(fixed: str | None) -> datetime:
    if not fixed:
        return datetime.now(timezone.utc)
    try:
        ts = datetime.fromisoformat(fixed.replace("Z", "+00:00"))
    except ValueError:
        raise CliError(f"--fixed-timestamp must be ISO-8601, got {fixed!r}", EXIT_USAGE)
    return ts if ts.tzinfo else ts.replace(tzinfo=timezone.utc)


def write_run_outputs(state, summary: dict, out: Path) -> dict[str, Path]:
    out.mkdir(parents=True, exist_ok=True)
    text = reporter.render_text(state.reports)
    paths = {
        "events": engine.write_events(state.events, out / "events.jsonl"),
        "summary": out / "summary.json",
        "reports": reporter.export_json(state.reports, out / "reports.json"),
        "text": out / "report.txt",
        "pdf": pdf.export_pdf(text, out / "report.pdf"),
        "perf": out / "perf.json",
    }
    paths["summary"].write_text(engine.dumps_summary(summary), encoding="utf-8")
    paths["text"].write_text(text, encoding="utf-8")
    paths["perf"].write_text(json.dumps(engine.perf_report(state), indent=2) + "\n", encoding="utf-8")
    return paths


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    out = Path(args.out or os.environ.get(OUT_ENV) or "runnerpcg-out")
    state, summary = engine.run(cfg, _clock(args.fixed_timestamp))
    try:
        write_run_outputs(state, summary, out)
    except OSError as exc:
        raise CliError(str(exc), EXIT_INPUT)
    rq1 = summary["RQ1"]
    print(f"distance {summary['distance']:.1f} m, {summary['ticks']} ticks, end: {summary['end_reason']}")
    print(f"segments {rq1['S_total']} blocked {rq1['S_blocked']} detected {rq1['B_detected']} "
          f"removed {rq1['B_removed']} encounters {rq1['encounters']} reports {summary['reports']}")
    print(f"outputs written to {out}")
    return EXIT_OK


SWEEP_COLUMNS = ("param", "value", "seed", "tiles", "O_intended_per_tile", "mean_realized_per_tile",
                 "max_realized", "rho_spawn", "R_block", "encounters", "distance")


def _sweep_row(job) -> dict:
    cfg_dict, param, value = job
    cfg = RunConfig.from_dict(cfg_dict)
    _, summary = engine.run(cfg)
    rq2 = summary["RQ2"]
    tiles = rq2["tiles"]
    return {
        "param": param, "value": value, "seed": cfg.seed, "tiles": tiles,
        "O_intended_per_tile": engine.spawner.intended_count(
            engine.spawner.build_grid(cfg.x_range, cfg.clear_half_width, cfg.lane_center).N, cfg.p_spawn),
        "mean_realized_per_tile": rq2["mean_realized_per_tile"],
        "max_realized": max(rq2["realized_series"], default=0),
        "rho_spawn": rq2["rho_spawn"],
        "R_block": summary["RQ1"]["R_block"],
        "encounters": summary["RQ1"]["encounters"],
        "distance": summary["distance"],
    }


def sweep(cfg: RunConfig, param: str, values, seeds, workers: int = 1) -> list[dict]:
    jobs = []
    for value in values:
        for seed in seeds:
            try:
                d = cfg.replace(**{param: value, "seed": seed}).to_dict()
            except (InvalidConfig, TypeError) as exc:
                raise CliError(f"invalid sweep point {param}={value}: {exc}", EXIT_USAGE)
            jobs.append((d, param, value))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_row, jobs))
    return [_sweep_row(j) for j in jobs]


def _fmt_cell(v) -> str:
    if v is None:
        return "n/a"
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    values = [_parse_value(v) for v in args.values.split(",") if v.strip()]
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    rows = sweep(cfg, args.param, values, seeds, args.workers)
    print("\t".join(SWEEP_COLUMNS))
    for row in rows:
        print("\t".join(_fmt_cell(row[c]) for c in SWEEP_COLUMNS))
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config_from_args(args)
    checks = verify(cfg)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.ok]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_report(args) -> int:
    try:
        reports = reporter.load_reports(args.reports)
    except FileNotFoundError:
        raise CliError(f"reports file not found: {args.reports}", EXIT_INPUT)
    except (ValueError, TypeError) as exc:
        raise CliError(str(exc), EXIT_INPUT)
    text = reporter.render_text(reports)
    if args.pdf:
        pdf.export_pdf(text, args.pdf)
        print(f"wrote {args.pdf}")
    if args.text:
        Path(args.text).write_text(text, encoding="utf-8")
        print(f"wrote {args.text}")
    if not args.pdf and not args.text:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="runnerpcg", description="Endless-runner generation and evaluation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def config_args(p):
        p.add_argument("--config", help="JSON config mirroring RunConfig field names")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config field (repeatable)")

    p = sub.add_parser("run", help="simulate one run and write all outputs")
    config_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--auto-remove", action="store_true")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./runnerpcg-out)")
    p.add_argument("--fixed-timestamp", metavar="ISO", help="clock origin for report timestamps")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter sweep over seeds")
    config_args(p)
    p.add_argument("--param", default="p_spawn")
    p.add_argument("--values", default="10,20,30,40,50,60,70,80,90,100")
    p.add_argument("--seeds", default="1,2,3")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", help="also write the table as CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="recompute the structural bounds")
    config_args(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="render a reports.json file")
    p.add_argument("reports")
    p.add_argument("--pdf", metavar="PATH")
    p.add_argument("--text", metavar="PATH")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.code == EXIT_USAGE:
            parser.print_usage(sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
