"""Phase response of the Wiener filters into one node from its two-hop neighbourhood.

Prints |phase| at a few frequencies for every neighbour and strict two-hop
neighbour of the chosen node and writes the full profile as CSV. Uses the
model oracle by default; ``--samples`` adds the FIR estimate from a simulated
panel alongside it.

    python3 scripts/phase_profile.py --node 25
    python3 scripts/phase_profile.py --node 25 --samples 1e6 --workers 4
"""

import argparse
import csv

import numpy as np

from gridwiener import RunConfig, estimate_bank, fir_frequency_response, load_case, neighbor_sets, simulate
from gridwiener.grid import bundled_case
from gridwiener.spectral import oracle_wiener_response


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="ieee39_damped")
    ap.add_argument("--node", type=int, default=25, help="1-based node id")
    ap.add_argument("--samples", default=None)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="phase_profile.csv")
    args = ap.parse_args(argv)

    g = load_case(bundled_case(args.case))
    cfg = RunConfig(workers=args.workers)
    grid = cfg.grid()
    j = args.node - 1
    ns = neighbor_sets(g)
    sources = [(i, "neighbour") for i in sorted(ns.neighbors[j])]
    sources += [(i, "two-hop") for i in sorted(ns.strict_two_hop(j))]

    curves = {"oracle": oracle_wiener_response(g, cfg.psd, cfg.ts, grid)}
    if args.samples:
        panel = simulate(g, cfg.noise(), cfg.ts, int(float(args.samples)), cfg.burn_in)
        curves["fir"] = fir_frequency_response(estimate_bank(panel, cfg.fir_order, workers=args.workers), grid)

    picks = [0, 8, 16, 32, 64]
    print("source  kind       " + "  ".join(f"w={grid.points[k]:.2f}" for k in picks))
    for name, resp in curves.items():
        print(f"[{name}]")
        for i, kind in sources:
            ph = np.abs(resp.phase(j, i))
            print(f"{i + 1:>6}  {kind:<9}  " + "  ".join(f"{ph[k]:6.3f}" for k in picks))

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("source", "kind", "curve", "omega", "abs_phase"))
        for name, resp in curves.items():
            for i, kind in sources:
                for om, ph in zip(grid.points, np.abs(resp.phase(j, i))):
                    w.writerow((i + 1, kind, name, repr(float(om)), repr(float(ph))))


if __name__ == "__main__":
    main()
