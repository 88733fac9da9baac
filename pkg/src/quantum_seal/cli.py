"""Command-line entry point: ``quantum-seal {run,histogram,route-demo,validate-config}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, PreconditionError
from .network import NoRoute
from .scenario import (
    ScenarioConfig,
    histogram,
    histogram_range_ps,
    load_config,
    read_reports,
    route_demo,
    run_scenario,
    write_histogram,
    write_outputs,
)

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="scenario TOML file")
    common.add_argument("--seed", type=int, help="override master_seed")
    common.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    common.add_argument("--debug-origins", action="store_true",
                        help="include photon/dark-count provenance in the event log")

    p = argparse.ArgumentParser(prog="quantum-seal", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="simulate, analyse and write all outputs")
    h = sub.add_parser("histogram", parents=[common], help="write the coincidence histogram only")
    h.add_argument("--bin-width-ps", type=int, help="bin width in picoseconds")
    r = sub.add_parser("route-demo", parents=[common], help="route before/after the run's seal reports")
    r.add_argument("--src")
    r.add_argument("--dst")
    r.add_argument("--reports", type=Path, help="replay this reports.jsonl instead of simulating")
    sub.add_parser("validate-config", parents=[common], help="check a scenario file and exit")
    return p


def _load(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out_dir(args, cfg: ScenarioConfig) -> Path:
    return args.out if args.out is not None else Path(cfg.output.dir)


def _fmt_path(path) -> str:
    return "NoRoute" if path is NoRoute else " -> ".join(path)


def _cmd_run(args, cfg) -> int:
    result = run_scenario(cfg)
    paths = write_outputs(result, _out_dir(args, cfg), args.debug_origins)
    overall = result.overall_estimate()
    if overall is not None:
        print(f"v_hat={overall.v_hat:.4f} +/- {overall.std_err:.4f} (n={overall.n_central})")
    for window, old, new in result.transitions():
        print(f"window {window}: {old.value} -> {new.value}")
    print(f"final state: {result.final_state.value}")
    for name, path in sorted(paths.items()):
        print(f"wrote {name}: {path}")
    return EXIT_OK


def _cmd_histogram(args, cfg) -> int:
    if args.bin_width_ps is not None and args.bin_width_ps <= 0:
        raise ConfigError("--bin-width-ps must be positive")
    width = args.bin_width_ps or cfg.output.histogram_bin_width_ps
    result = run_scenario(cfg)
    rows = histogram(result.coincidences, width, histogram_range_ps(cfg.setup))
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "histogram.csv"
    write_histogram(path, rows)
    print(f"wrote histogram: {path} ({len(rows)} bins)")
    return EXIT_OK


def _cmd_route_demo(args, cfg) -> int:
    if cfg.network is None:
        raise ConfigError("scenario has no [network] block")
    src, dst = args.src, args.dst
    if src is None or dst is None:
        if cfg.network.route is None:
            raise ConfigError("give --src/--dst or network.route")
        src, dst = cfg.network.route
    for node in (src, dst):
        if node not in cfg.network.nodes:
            raise ConfigError(f"unknown node {node!r}")
    if args.reports is not None:
        reports = read_reports(args.reports)
    else:
        reports = run_scenario(cfg).reports()
    before, after, graph = route_demo(cfg, src, dst, reports)
    print(f"policy: {cfg.network.policy.mode.value}")
    print(f"before: {_fmt_path(before)}")
    print(f"after:  {_fmt_path(after)}")
    for link in sorted(graph.links.values(), key=lambda l: l.id):
        if link.sealed:
            print(f"link {link.id}: {link.status.value}")
    return EXIT_OK


def _cmd_validate(args, cfg) -> int:
    print(f"ok: {args.config} ({cfg.total_windows} windows, {len(cfg.attacks)} attack plan(s))")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "histogram": _cmd_histogram,
    "route-demo": _cmd_route_demo,
    "validate-config": _cmd_validate,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, PreconditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
