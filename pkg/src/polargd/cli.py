"""Command-line entry point: ``polargd {simulate,calibrate,softout,turbo,estimate}``."""
from __future__ import annotations

import argparse
import sys

from .harness import (
    ConfigError,
    ExperimentConfig,
    run_bler_experiment,
    run_calibration,
    run_estimate,
    run_softout_compare,
    run_turbo,
)

SCHEMAS = {
    "simulate": "ebn0_db,trials,errors,undetected,bler,bler_lo,bler_hi,uer,uer_lo,uer_hi,mdr,ler",
    "calibrate": "ebn0_db,metric,bin,lo,hi,count,errors,predicted,measured  (metric: proposed|list|forney)",
    "softout": "ebn0_db,method,bits,bit_errors,ber,ber_lo,ber_hi  (method: bcjr|proposed_L<l>|pyndiah_L<l>)",
    "turbo": "ebn0_db,blocks,errors,failures,bler,bler_lo,bler_hi,avg_iterations",
    "estimate": "ebn0_db,h,log_q_star,is_argmax  (h_true, h_hat and RMSE in '#' header lines)",
}
RUNNERS = {
    "simulate": run_bler_experiment,
    "calibrate": run_calibration,
    "softout": run_softout_compare,
    "turbo": run_turbo,
    "estimate": run_estimate,
}
HELP = {
    "simulate": "BLER/UER/MDR/LER of a decode-and-test rule over an Eb/N0 sweep",
    "calibrate": "predicted vs measured error rate in half-decade bins",
    "softout": "BER of hard decisions on exact and list-based APP LLRs",
    "turbo": "block turbo decoding of a product code",
    "estimate": "pilot-free channel gain estimation on a grid",
}


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON file; flags given on the command line override it")
    p.add_argument("--out", default=S, help="CSV output path ('-' for stdout, the default)")
    p.add_argument("--workers", type=int, default=S, help="worker processes (results do not depend on it)")
    p.add_argument("--seed", type=int, default=S, help="master seed")
    p.add_argument("--ebn0-db", dest="ebn0_db", default=S, help="value or start:step:stop (inclusive)")
    p.add_argument("--code", default=S, help="rm:m,r or nr5g:N,K")
    p.add_argument("--frozen", choices=["static", "convolutional"], default=S)
    p.add_argument("--list-size", dest="list_size", type=int, default=S)
    p.add_argument("--trials", type=int, default=S, help="trial budget per point")
    p.add_argument("--target-errors", dest="target_errors", type=int, default=S, help="stop a point early")
    p.add_argument("--chunk-size", dest="chunk_size", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polargd",
        description="Generalized decoding of polar-like codes: Monte Carlo experiments.",
        epilog="CSV columns:\n" + "\n".join(f"  {k}: {v}" for k, v in SCHEMAS.items()),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS
    for name in RUNNERS:
        p = sub.add_parser(name, help=HELP[name], description=f"{HELP[name]}. CSV columns: {SCHEMAS[name]}")
        _add_common(p)
        if name == "simulate":
            p.add_argument("--rule", choices=["threshold", "forney", "crc"], default=S)
            p.add_argument("--epsilon", type=float, default=S, help="accept iff estimated correctness > 1 - epsilon")
            p.add_argument("--forney-t", dest="forney_t", type=float, default=S)
            p.add_argument("--crc", default=S, help="Koopman hex, e.g. 0x30")
        if name == "calibrate":
            p.add_argument("--forney-list", dest="forney_list", type=int, default=S)
        if name == "softout":
            p.add_argument("--softout-lists", dest="softout_lists", type=_ints, default=S, help="e.g. 1,2")
            p.add_argument("--beta", type=float, default=S)
        if name == "turbo":
            p.add_argument("--component", dest="code", default=S, help="component code, rm:m,r or nr5g:N,K")
            p.add_argument("--siso", choices=["proposed", "pyndiah"], default=S)
            p.add_argument("--alpha", type=_floats, default=S, help="per-half-iteration schedule, e.g. 0.5")
            p.add_argument("--beta-schedule", dest="beta_schedule", type=_floats, default=S)
            p.add_argument("--imax", type=int, default=S)
        if name == "estimate":
            p.add_argument("--gain", type=float, default=S, help="true gain (default: uniform over the grid)")
            p.add_argument("--grid", type=_floats, default=S, help="h_min,h_max,steps")
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    path = args.pop("config")
    try:
        if "grid" in args:
            h_min, h_max, steps = args["grid"]
            args["grid"] = [h_min, h_max, int(steps)]
        cfg = ExperimentConfig.load(path, args)
        if cfg.out is None:
            cfg.out = "-"
        RUNNERS[command](cfg)
    except (ConfigError, ValueError) as exc:
        print(f"polargd: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
