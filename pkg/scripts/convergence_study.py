#!/usr/bin/env python3
"""Print the mesh-refinement error tables and fitted slopes."""

import argparse

from stfe2d.harness import refinement_study

LEVELS = {
    "interp": (8, 16, 32, 64, 128),
    "laplacian_eig": (8, 16, 32, 64),
    "ritz": (8, 16, 32, 64),
    "noise_b3star": (8, 16, 32, 64, 128),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--study", choices=sorted(LEVELS), default=None,
                    help="run a single study (default: all)")
    args = ap.parse_args()

    for kind in ([args.study] if args.study else LEVELS):
        table = refinement_study(kind, LEVELS[kind])
        print(f"\n== {kind} ==")
        header = "h".ljust(12) + "".join(m.rjust(14) for m in table.metric_names)
        print(header)
        for idx, h in enumerate(table.hs):
            row = f"{h:<12.5g}" + "".join(
                f"{table.errors[m][idx]:>14.5e}" for m in table.metric_names)
            print(row)
        for metric, slope in table.slopes.items():
            if slope is not None:
                print(f"slope[{metric}] = {slope:.4f}")


if __name__ == "__main__":
    main()
