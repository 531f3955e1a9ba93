"""Command-line interface: ``gridwiener <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import dynamics, grid, spectral, topology
from .errors import GridWienerError
from .experiments import estimate_topology, load_config, run_once, run_sweep
from .estimation import write_bank_csv

EXIT_CODES = {
    "config": 2,
    "case": 3,
    "instability": 4,
    "overflow": 5,
    "estimation": 6,
    "topology": 7,
    "io": 8,
}

# flag -> RunConfig field
_CONFIG_FLAGS = {
    "--ts": ("ts", float),
    "--samples": ("samples", int),
    "--burn-in": ("burn_in", int),
    "--seed": ("seed", int),
    "--psd": ("psd", float),
    "--fir-order": ("fir_order", int),
    "--rho": ("rho", float),
    "--tau": ("tau", str),
    "--omega-points": ("omega_points", int),
    "--noise-blocks": ("noise_blocks", int),
    "--snr": ("snr", float),
    "--workers": ("workers", int),
    "--omega-full": ("omega_full", str),
    "--noise-kind": ("noise_kind", str),
    "--ar-coefficient": ("ar_coefficient", float),
    "--difference": ("difference", int),
    "--smoothing": ("smoothing", int),
}


def _add_config_flags(p):
    for flag, (dest, kind) in _CONFIG_FLAGS.items():
        p.add_argument(flag, dest=dest, type=kind, default=None)
    p.add_argument("--config", type=Path, default=None, help="key = value config file")


def _config(args):
    overrides = {dest: getattr(args, dest, None) for dest, _ in _CONFIG_FLAGS.values()}
    return load_config(args.config, overrides)


def _read_any_panel(path, ts):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return dynamics.read_panel_csv(path, ts)
    return dynamics.read_panel(path)


def _load_case(path):
    path = Path(path)
    if not path.exists() and not path.is_absolute():
        try:
            return grid.load_case(grid.bundled_case(str(path)))
        except GridWienerError:
            pass
    return grid.load_case(path)


def cmd_gen_case(args):
    g = grid.generate_graph(args.kind, args.n, args.seed, args.b_range, args.m_range, args.d_range)
    grid.write_case(g, args.out)
    print(f"wrote {args.out}: N={g.node_count} edges={len(g.edges)}")


def cmd_simulate(args):
    cfg = _config(args)
    g = _load_case(args.case)
    panel = dynamics.simulate(g, cfg.noise(), cfg.ts, cfg.samples, cfg.burn_in)
    out = Path(args.out)
    if out.suffix.lower() == ".csv":
        dynamics.write_panel_csv(out, panel)
    else:
        dynamics.write_panel(out, panel)
    print(f"N={panel.n_nodes} T={panel.n_samples} t_s={panel.ts!r} seed={cfg.seed}")


def _emit(est, bank, responses, args, truth):
    topology.write_edges_csv(args.out, est)
    if args.responses:
        spectral.write_response_csv(args.responses, responses)
    if args.bank:
        write_bank_csv(args.bank, bank)
    if truth is not None:
        line = topology.score(truth, est).line()
        print(line)
        if args.report:
            Path(args.report).write_text(line + "\n")


def cmd_estimate(args):
    cfg = _config(args)
    panel = _read_any_panel(args.panel, cfg.ts)
    truth = _load_case(args.truth) if args.truth else None
    est, bank, responses = estimate_topology(panel, cfg, prune_edges=not args.no_prune)
    _emit(est, bank, responses, args, truth)


def cmd_oracle(args):
    cfg = _config(args)
    g = _load_case(args.case)
    resp = spectral.oracle_wiener_response(g, cfg.psd, cfg.ts, cfg.grid())
    spectral.write_response_csv(args.out, resp)
    n = g.node_count
    print(f"wrote {n * (n - 1)} directed responses on {len(cfg.grid())} frequencies")


def cmd_evaluate(args):
    cfg = _config(args)
    truth = _load_case(args.truth or args.case)
    if args.edges:
        est = topology.read_edges_csv(args.edges, truth.node_count)
        print(topology.score(truth, est).line())
        return
    report, est = run_once(truth, cfg, prune_edges=not args.no_prune)
    if args.out:
        topology.write_edges_csv(args.out, est)
    print(report.line())


def cmd_sweep(args):
    cfg = _config(args)
    g = _load_case(args.case)
    counts = [int(float(s)) for s in args.sample_list.split(",") if s.strip()]

    def progress(row, _est):
        status = row.error or f"rel_err={row.relative_error!r}"
        print(f"samples={row.samples_per_node} seed={row.seed} {status}", file=sys.stderr)

    result = run_sweep(g, counts, cfg, prune_edges=not args.no_prune, on_row=progress)
    result.write_csv(args.out, timing=not args.no_timing)
    for row in result.rows:
        print(f"{row.samples_per_node},{row.relative_error!r},{row.fp},{row.fn},{row.seed}")


def _range(text):
    lo, _, hi = text.partition(",")
    return float(lo), float(hi or lo)


def build_parser():
    parser = argparse.ArgumentParser(prog="gridwiener", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-case", help="write a synthetic case directory")
    p.add_argument("--kind", choices=grid.GRAPH_KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--b-range", type=_range, default=(0.5, 2.0), help="lo,hi")
    p.add_argument("--m-range", type=_range, default=(0.0015, 0.0025), help="lo,hi")
    p.add_argument("--d-range", type=_range, default=(0.15, 0.25), help="lo,hi")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen_case)

    p = sub.add_parser("simulate", help="simulate a phase-angle panel")
    p.add_argument("--case", required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the topology from a panel")
    p.add_argument("--panel", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="estimated edges CSV")
    p.add_argument("--truth", default=None, help="case directory to score against")
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--responses", type=Path, default=None, help="also write FIR responses CSV")
    p.add_argument("--bank", type=Path, default=None, help="also write tap CSV")
    p.add_argument("--report", type=Path, default=None, help="also write the error report line")
    _add_config_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("oracle", help="model-based Wiener responses")
    p.add_argument("--case", required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("evaluate", help="score an edges CSV, or run simulate+estimate+score")
    p.add_argument("--case", default=None)
    p.add_argument("--truth", default=None)
    p.add_argument("--edges", type=Path, default=None, help="score this edges CSV instead of simulating")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--no-prune", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="relative error versus samples per node")
    p.add_argument("--case", required=True)
    p.add_argument("--sample-list", required=True, help="comma-separated ascending sample counts")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--no-timing", action="store_true", help="leave wall_time_s empty")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "evaluate" and not (args.case or args.truth):
        parser.error("evaluate needs --case or --truth")
    try:
        args.func(args)
    except GridWienerError as exc:
        print(f"{exc.category}: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)
    except (OSError, ValueError) as exc:
        category = "io" if isinstance(exc, OSError) else "input"
        print(f"{category}: {exc}", file=sys.stderr)
        return EXIT_CODES.get(category, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
