#!/usr/bin/env python3
"""Run one stochastic trajectory with the default setup and plot-free summary.

Writes diagnostics and snapshots under out/demo/ and prints the headline
numbers (mass drift, energy, entropy, stop status).
"""

import argparse
import json
from pathlib import Path

from stfe2d import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=32, help="grid nodes per side")
    ap.add_argument("--steps", type=int, default=500, help="number of base steps")
    ap.add_argument("--lambda0", type=float, default=0.1, help="noise amplitude")
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", type=Path, default=Path("out/demo"))
    args = ap.parse_args()

    from stfe2d.grid import Grid
    from stfe2d.integrator import stable_dt
    from stfe2d.material import Material

    dt = stable_dt(Grid(args.n, args.n, 1.0, 1.0), Material())
    config = {
        "grid": {"nx": args.n, "ny": args.n, "Lx": 1.0, "Ly": 1.0},
        "noise": {"lambda0": args.lambda0, "seed": args.seed},
        "run": {"t_max": args.steps * dt, "snapshot_times": [0.0],
                "diag_interval": 10},
        "initial": {"kind": "cosine-perturbed", "base": 1.0, "amplitude": 0.1},
        "output": {"dir": str(args.out), "prefix": "demo"},
    }
    args.out.mkdir(parents=True, exist_ok=True)
    cfg_path = args.out / "config.json"
    cfg_path.write_text(json.dumps(config, indent=2))
    raise SystemExit(cli.main(["run", str(cfg_path)]))


if __name__ == "__main__":
    main()
