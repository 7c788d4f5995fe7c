"""Command-line entry points: run | check | converge.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime abort
(positivity or overflow), 3 self-check failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io as sio
from .config import ConfigError, assemble, load_config
from .harness import refinement_study
from .integrator import SimulationAbort, run
from .oracle import run_checks

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_CHECK = 3


def _load_bundle(path, out):
    try:
        cfg = load_config(path)
        return assemble(cfg)
    except ConfigError as exc:
        print("configuration rejected:", file=out)
        for v in exc.violations:
            print(f"  - {v}", file=out)
        return None


def cmd_run(args, out=None) -> int:
    out = out or sys.stdout
    bundle = _load_bundle(args.config, out)
    if bundle is None:
        return EXIT_VALIDATION
    bundle.out_dir.mkdir(parents=True, exist_ok=True)
    diag_path = bundle.out_dir / f"{bundle.prefix}_diag.csv"
    snap_index = [0]

    def snapshot_cb(state):
        path = bundle.out_dir / f"{bundle.prefix}_snap{snap_index[0]:04d}.bin"
        sio.write_snapshot(path, state.u, state.t)
        snap_index[0] += 1

    with sio.DiagWriter(diag_path) as writer:
        try:
            result = run(bundle.initial, bundle.run, bundle.material, bundle.noise,
                         diag_cb=writer.append, snapshot_cb=snapshot_cb)
        except SimulationAbort as exc:
            print(f"runtime abort: {exc}", file=out)
            return EXIT_RUNTIME

    final = result.final
    sio.write_snapshot(bundle.out_dir / f"{bundle.prefix}_final.bin",
                       final.u, final.t)
    stopped = (f"stopped at t = {final.stop_time:.6g}" if final.stopped
               else "ran to the horizon")
    print(f"{final.step} steps to t = {final.t:.6g}; {stopped}; "
          f"mass drift {result.max_mass_drift:.3e}; sup R = {result.sup_R:.6g}",
          file=out)
    print(f"diagnostics: {diag_path}", file=out)
    return EXIT_OK


def cmd_check(args, out=None) -> int:
    out = out or sys.stdout
    results = run_checks()
    ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        ok = ok and res.passed
        print(f"{status} {res.name}: {res.detail}", file=out)
    return EXIT_OK if ok else EXIT_CHECK


_CONVERGE_LEVELS = {
    "interp": (8, 16, 32, 64, 128),
    "laplacian_eig": (8, 16, 32, 64),
    "ritz": (8, 16, 32, 64),
    "noise_b3star": (8, 16, 32, 64, 128),
}


def cmd_converge(args, out=None) -> int:
    out = out or sys.stdout
    bundle = _load_bundle(args.config, out)
    if bundle is None:
        return EXIT_VALIDATION
    bundle.out_dir.mkdir(parents=True, exist_ok=True)
    path = bundle.out_dir / f"{bundle.prefix}_rates.csv"
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("study,metric,h,value\n")
        for kind, ns in _CONVERGE_LEVELS.items():
            table = refinement_study(kind, ns, Lx=bundle.grid.Lx, Ly=bundle.grid.Ly,
                                     model=bundle.noise, eps=bundle.material.eps)
            for study, metric, h, value in table.rows():
                fh.write(f"{study},{metric},{h:.17g},{value:.17g}\n")
            for metric, slope in table.slopes.items():
                if slope is not None:
                    fh.write(f"{study},{metric}_slope,0,{slope:.17g}\n")
                    print(f"{kind}/{metric}: slope {slope:.3f}", file=out)
    print(f"rate table: {path}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stfe2d",
        description="Stochastic thin-film solver on a periodic rectangle")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one trajectory from a JSON config")
    p_run.add_argument("config", type=Path)
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="run the identity and oracle suites")
    p_check.set_defaults(func=cmd_check)

    p_conv = sub.add_parser("converge", help="run the refinement studies")
    p_conv.add_argument("config", type=Path)
    p_conv.set_defaults(func=cmd_converge)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
