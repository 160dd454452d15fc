"""Command-line harness for the interpolation error studies.

Subcommands mirror the experiment runners; results are written as CSV to
``--out`` or stdout.  Exit codes: 0 success, 2 configuration/precondition
error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import sys

from . import experiments
from .errors import ConvergenceError

_EXPERIMENT_DEFAULTS = {
    "transport-accuracy": dict(n=200, r=6, interval=(0.0, 1.0), num_nodes=2),
    "qr-interp": dict(n=100, r=6, interval=(-1.1, 1.1), num_nodes=6),
    "svd-interp": dict(n=100, r=6, m=50, interval=(0.0, 0.5), num_nodes=2,
                       methods="hermite,geodesic"),
    "snapshot-interp": dict(n=1001, r=6, interval=(1.7, 2.3), num_nodes=6),
    "tangent-vs-manifold": dict(n=100, r=6, m=50, interval=(0.0, 0.5), num_nodes=2,
                                methods="hermite"),
    "bound-check": dict(n=40, r=4),
}


def _interval(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}")
    return float(parts[0]), float(parts[1])


def _add_common(sub: argparse.ArgumentParser, defaults: dict) -> None:
    sub.add_argument("--n", type=int, default=defaults.get("n", 100), help="ambient rows")
    sub.add_argument("--r", type=int, default=defaults.get("r", 6), help="columns / rank")
    sub.add_argument("--m", type=int, default=defaults.get("m", 50), help="right factor columns")
    sub.add_argument("--nodes", type=int, default=defaults.get("num_nodes", 6),
                     help="number of Chebyshev sample nodes")
    sub.add_argument("--interval", type=_interval,
                     default=defaults.get("interval", (-1.1, 1.1)),
                     metavar="a,b", help="sampling interval")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--h", type=float, default=1e-4, help="FD step for velocity transport")
    sub.add_argument("--tau", type=float, default=1e-14, help="log convergence threshold")
    sub.add_argument("--centering", choices=["q", "p"], default="q")
    sub.add_argument("--methods", default=defaults.get("methods", "hermite,geodesic,rbf"),
                     help="comma list from hermite,geodesic,rbf")
    sub.add_argument("--rbf-shape", type=float, default=1.0)
    sub.add_argument("--out", default=None, help="CSV output path (default: stdout)")


def _config(args: argparse.Namespace) -> experiments.ExperimentConfig:
    return experiments.ExperimentConfig(
        n=args.n,
        r=args.r,
        m=args.m,
        interval=tuple(args.interval),
        num_nodes=args.nodes,
        seed=args.seed,
        h=args.h,
        tau=args.tau,
        centering=args.centering,
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        rbf_shape=args.rbf_shape,
    )


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _cmd_transport(args) -> int:
    table = experiments.run_transport_accuracy(_config(args))
    lines = ["h,transport_rel_err"]
    lines += [f"{h!r},{err!r}" for h, err in table]
    _write("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_report(runner):
    def cmd(args) -> int:
        report = runner(_config(args))
        _write(experiments.report_to_csv(report), args.out)
        return 0

    return cmd


def _cmd_bound(args) -> int:
    config = _config(args)
    lines = ["delta,delta_tilde,s0,observed_dist,bound_flat,bound_max_curvature"]
    worst = 0.0
    for delta in (0.1, 0.2, 0.3):
        row = experiments.bound_check_instance(config, delta, delta, 0.1)
        lines.append(
            ",".join(
                repr(row[key])
                for key in (
                    "delta", "delta_tilde", "s0",
                    "observed_dist", "bound_flat", "bound_max_curvature",
                )
            )
        )
        worst = max(
            worst,
            row["observed_dist"] - row["bound_flat"],
            row["bound_max_curvature"] - row["observed_dist"],
        )
    _write("\n".join(lines) + "\n", args.out)
    print(f"largest excursion beyond the curvature envelope: {worst:.3e}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stiefel-hermite",
        description="Hermite interpolation error studies on the Stiefel manifold",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    handlers = {
        "transport-accuracy": _cmd_transport,
        "qr-interp": _cmd_report(experiments.run_qr_interp),
        "svd-interp": _cmd_report(experiments.run_svd_interp),
        "snapshot-interp": _cmd_report(experiments.run_snapshot_experiment),
        "tangent-vs-manifold": _cmd_report(experiments.run_tangent_vs_manifold),
        "bound-check": _cmd_bound,
    }
    for name, handler in handlers.items():
        sub = subs.add_parser(name)
        _add_common(sub, _EXPERIMENT_DEFAULTS[name])
        sub.set_defaults(func=handler)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
