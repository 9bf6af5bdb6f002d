"""Command-line entry point: sweeps, trace simulation and SINR campaigns.

Every CSV starts with a ``#`` comment block (tool version, config digest,
seed, subcommand) followed by an RFC-4180 table. Identical configurations
give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import __version__
from .baselines import Scheme, run_campaign_baseline
from .config import ConfigError, ExperimentConfig, parse_config
from .experiments import (
    RANGE_COLUMNS,
    RATE_COLUMNS,
    RESOLUTION_COLUMNS,
    SINR_COLUMNS,
    compare_sinr,
    range_sweep,
    rate_sweep,
    resolution_sweep,
    sinr_rows,
)
from .tdr import run_campaign, validate_configuration

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
TRACE_COLUMNS = ("symbol_index", "sample_index", "amplitude")

logger = logging.getLogger("ocdm_tdr")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(path: Path, columns, rows, cfg: ExperimentConfig, command: str) -> None:
    """Write one CSV with the provenance comment block."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# tool: ocdm_tdr {__version__}\r\n")
        fh.write(f"# command: {command}\r\n")
        fh.write(f"# config_sha256: {cfg.digest()}\r\n")
        fh.write(f"# seed: {cfg.seed}\r\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows([_cell(v) for v in row] for row in rows)


def _bandwidths_hz(cfg):
    return [b * 1e3 for b in cfg.sweep.bandwidth_khz]


def cmd_resolution(cfg, out, args):
    rows = resolution_sweep(cfg.cable_velocities(), _bandwidths_hz(cfg))
    write_table(out / "resolution.csv", RESOLUTION_COLUMNS, rows, cfg, "resolution-sweep")
    return [out / "resolution.csv"]


def cmd_range(cfg, out, args):
    rows = range_sweep(cfg.system, cfg.cable_velocities(), cfg.sweep.cp_length, cfg.sweep.n_plm)
    write_table(out / "range.csv", RANGE_COLUMNS, rows, cfg, "range-sweep")
    return [out / "range.csv"]


def cmd_rates(cfg, out, args):
    rows = rate_sweep(cfg.system, cfg.schemes, cfg.sweep.cp_length, cfg.sweep.n_plm)
    write_table(out / "rates.csv", RATE_COLUMNS, rows, cfg, "rates")
    return [out / "rates.csv"]


def _simulate_scheme(scheme, cfg, scenario, n_symbols):
    if scheme is Scheme.OCDM:
        return run_campaign(cfg.system, scenario, cfg.noise, n_symbols, cfg.seed)
    return run_campaign_baseline(scheme, cfg.system, scenario, cfg.noise, n_symbols, cfg.seed)


def cmd_simulate(cfg, out, args):
    """One trace file per scheme and (observer, injector) pair."""
    scenario = cfg.scenario.build(cfg.system)
    validate_configuration(cfg.system, scenario)
    n_symbols = max(cfg.sweep.n_symbols)
    tables = {}
    for name in cfg.schemes:
        scheme = Scheme(name)
        result = _simulate_scheme(scheme, cfg, scenario, n_symbols)
        for m in result.measurements:
            rows = tables.setdefault((scheme.value, m.observer, m.injector), [])
            offset = m.window_index * m.estimate.size
            rows.extend((m.symbol_index, offset + k, float(a)) for k, a in enumerate(m.estimate))
    written = []
    for (scheme, i, j), rows in sorted(tables.items()):
        path = out / "traces" / scheme / f"trace_obs{i}_inj{j}.csv"
        write_table(path, TRACE_COLUMNS, rows, cfg, f"simulate {scheme}")
        written.append(path)
    return written


def cmd_compare(cfg, out, args):
    scenario = cfg.scenario.build(cfg.system)
    validate_configuration(cfg.system, scenario)
    reports = compare_sinr(
        cfg.system, scenario, cfg.noise, cfg.schemes, cfg.trials, cfg.seed, workers=args.workers
    )
    write_table(out / "sinr.csv", SINR_COLUMNS, sinr_rows(reports), cfg, "compare-sinr")
    return [out / "sinr.csv"]


COMMANDS = {
    "resolution-sweep": (cmd_resolution, "range resolution versus bandwidth per cable preset"),
    "range-sweep": (cmd_range, "maximum unambiguous range versus n_plm per CP length"),
    "rates": (cmd_rates, "reflectogram and transferogram rates versus n_plm per scheme"),
    "simulate": (cmd_simulate, "per-pair measurement traces for every configured scheme"),
    "compare-sinr": (cmd_compare, "Monte-Carlo per-modem reflectogram SINR per scheme"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ocdm-tdr", description="OCDM-based distributed TDR experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", required=True, help="JSON experiment configuration")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides the config)")
        p.add_argument("--trials", type=int, help="Monte-Carlo trials (overrides the config)")
        p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
        p.add_argument("--quiet", action="store_true", help="only report errors")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s: %(message)s")
    try:
        if args.workers < 1:
            raise ConfigError("--workers", "must be >= 1")
        cfg = parse_config(args.config).with_overrides(seed=args.seed, trials=args.trials, output_dir=args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    handler, _ = COMMANDS[args.command]
    try:
        written = handler(cfg, Path(cfg.output_dir), args)
    except Exception as exc:  # noqa: BLE001 - any failure past validation is a runtime error
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_RUNTIME
    logger.info("%s: wrote %d file(s) under %s", args.command, len(written), cfg.output_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
