"""Command-line entry point for the hbtsim toolkit."""

import argparse
import json
import logging
import sys
from pathlib import Path

import pandas as pd
from tabulate import tabulate

from hbtsim.core.config import settings
from hbtsim.core.errors import ConfigurationError, HbtsimError
from hbtsim.core.models import TimeTagHeader
from hbtsim.core.runconfig import RunConfig, load_run_config
from hbtsim.core.tracing import configure_logging
from hbtsim.io.timetag import format_csv, parse_binary, parse_csv, picoseconds_to_ticks, write_binary
from hbtsim.pipeline.workflow import MeasurementWorkflow, is_csv, write_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _status(message: str) -> None:
    print(message, file=sys.stderr)


def _preview(frame: pd.DataFrame) -> None:
    _status(tabulate(frame, headers="keys", tablefmt="github", showindex=False, floatfmt=".6g"))


def _load(args: argparse.Namespace) -> RunConfig:
    run = load_run_config(args.config, args.set)
    return run.with_overrides(seed=getattr(args, "seed", None), threads=getattr(args, "threads", None))


def _emit_json(payload: dict, out: Path | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")


def cmd_simulate(args: argparse.Namespace) -> int:
    run = _load(args)
    _status(f"🔬 Simulating {run.source.describe()} ({run.mode.describe()}, seed {run.seed})...")
    summary = MeasurementWorkflow(run).run_simulate(args.out)
    _status(
        f"✅ {summary['records']} time tags ({summary['bytes']} bytes) -> {summary['timetags']}; "
        f"R_I={summary['R_I']:.6g}, M={summary['M']}, N={summary['N']}"
    )
    _status(f"📝 Summary -> {summary['summary']}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    run = _load(args)
    _status(f"📊 Analyzing {args.timetags}...")
    frame = MeasurementWorkflow(run).run_analyze(Path(args.timetags))
    _preview(frame)
    text = write_table(frame, args.out or run.table_path, args.format)
    if args.out is None and run.table_path is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    run = _load(args)
    payload = MeasurementWorkflow(run).oracle()
    _status(f"🎯 Oracle g2_click = {payload['g2_click']}")
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    run = _load(args)
    if run.sweep_axis is None:
        raise ConfigurationError("a sweep needs sweep.axis and sweep.values", field="sweep.axis")
    _status(f"🔁 Sweeping {run.sweep_axis.value} over {len(run.sweep_values)} values...")
    frame = MeasurementWorkflow(run).run_sweep()
    _preview(frame)
    text = write_table(frame, args.out or run.table_path, args.format)
    if args.out is None and run.table_path is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_gen_timetags(args: argparse.Namespace) -> int:
    source = Path(args.input)
    target = args.out
    if target is None:
        raise ConfigurationError("gen-timetags needs --out", field="--out")
    data = source.read_bytes()

    if is_csv(source):
        records = picoseconds_to_ticks(parse_csv(data.decode("utf-8")), args.resolution)
        channels = args.channels or (int(records["channel"].max()) + 1 if records.size else 1)
        header = TimeTagHeader(resolution=args.resolution, channel_count=channels)
    else:
        header, records = parse_binary(data)

    target.parent.mkdir(parents=True, exist_ok=True)
    if is_csv(target):
        target.write_text(format_csv(records, header.resolution), encoding="utf-8")
    else:
        with target.open("wb") as sink:
            write_binary(records, header, sink)
    _status(f"✅ Converted {records.size} records: {source} -> {target}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "oracle": cmd_oracle,
    "sweep": cmd_sweep,
    "gen-timetags": cmd_gen_timetags,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="key = value run configuration file")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one configuration key (repeatable)",
    )
    common.add_argument("--out", type=Path, default=None, help="Output file (default: stdout or config)")
    common.add_argument("--log-level", default=None, help="Log level (default: HBTSIM_LOG_LEVEL)")

    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=None, help="Simulation seed (overrides config)")
    seeded.add_argument("--threads", type=int, default=None, help="Worker threads (never changes results)")

    tabular = argparse.ArgumentParser(add_help=False)
    tabular.add_argument("--format", choices=["csv", "json"], default="csv", help="Table format (default: csv)")

    parser = argparse.ArgumentParser(
        prog="hbtsim",
        description="hbtsim - pulsed-light HBT click-coherence simulation and analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common, seeded], help="Simulate and write time tags plus a JSON summary")

    analyze = sub.add_parser("analyze", parents=[common, tabular], help="Estimate g2 from a time-tag file")
    analyze.add_argument("timetags", help="TTG2 or .csv time-tag file")

    sub.add_parser("oracle", parents=[common], help="Exact click probabilities as JSON")
    sub.add_parser("sweep", parents=[common, seeded, tabular], help="Simulate and analyze along a sweep axis")

    convert = sub.add_parser("gen-timetags", parents=[common], help="Convert time tags between CSV and TTG2")
    convert.add_argument("input", help="Input file (.csv or TTG2)")
    convert.add_argument("--resolution", type=int, default=1, help="Picoseconds per tick for TTG2 output")
    convert.add_argument("--channels", type=int, default=None, help="Channel count for TTG2 output")
    return parser


def main(argv: list[str] | None = None) -> int:
    """
    Run one hbtsim command.

    Returns:
        Exit code: 0 on success, 1 on runtime errors, 2 on configuration errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        settings.validate()
    except ValueError as exc:
        _status(f"❌ Configuration error: {exc}")
        return EXIT_CONFIG

    try:
        configure_logging(args.log_level)
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        _status(f"❌ Configuration error: {exc}")
        return EXIT_CONFIG
    except (HbtsimError, OSError) as exc:
        _status(f"❌ Error: {exc}")
        return EXIT_RUNTIME
    except Exception as exc:
        logger.debug("unhandled error", exc_info=True)
        _status(f"❌ Error: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


def run_cli() -> None:
    """Run hbtsim in CLI mode."""
    sys.exit(main())


if __name__ == "__main__":
    run_cli()
