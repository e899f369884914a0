"""``softqec`` command line."""

from __future__ import annotations

import argparse
import sys
import time

from .experiments import KINDS, ConfigError, ExperimentConfig, load_config_file, run

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

_FLAGS = [
    # name, type, help
    ("output", str, "directory for result files"),
    ("d", int, "surface code distance"),
    ("variant", str, "rotated or planar"),
    ("n", int, "repetition length, or outer block length for the T rule"),
    ("p", float, "data flip rate"),
    ("q", float, "measurement flip rate (defaults to p)"),
    ("r", float, "SWAP ratio; sets T = ceil(3 sqrt(n) d / r)"),
    ("T", int, "rounds of syndrome extraction"),
    ("decoder", str, "ufd or mwpm"),
    ("trials", int, "number of trials"),
    ("cutoff", float, "discard soft outputs at or below this value"),
    ("discard", float, "target discarded fraction when no cutoff is given"),
    ("V", int, "gates in the postselected circuit"),
    ("epsilon", float, "target total variation distance"),
    ("T_mem", int, "memory time to extrapolate to"),
    ("k", int, "number of blocks in the extrapolation"),
    ("outer_rounds", int, "outer-code rounds in hierarchical runs"),
    ("inner_trials", int, "inner samples used to build the soft-output distribution"),
    ("joint", str, "load the soft-output distribution from this JSON file"),
    ("max_iter", int, "BP iteration limit"),
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="softqec", description="Soft-output decoding experiments.")
    sub = parser.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--threads", type=int, default=None, help="worker processes (default 1)")
        sp.add_argument("--config", help="TOML config, or a manifest.json from an earlier run")
        sp.add_argument("--quiet", action="store_true", help="no progress on stderr")
        for name, typ, text in _FLAGS:
            sp.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, default=None, help=text)
    return parser


def config_from_args(args) -> ExperimentConfig:
    data = load_config_file(args.config) if args.config else {}
    data = {k: v for k, v in data.items() if k not in ("kind", "seed")}
    for name, _, _ in _FLAGS + [("threads", int, "")]:
        val = getattr(args, name)
        if val is not None:
            data[name] = val
    return ExperimentConfig.from_mapping({"kind": args.kind, "seed": args.seed, **data}).validate()


def _progress_printer():
    last = [0.0]

    def report(done, total):
        now = time.monotonic()
        if now - last[0] >= 1.0 or done == total:
            last[0] = now
            print(f"{done}/{total}", file=sys.stderr, flush=True)
    return report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"softqec: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = run(cfg, None if args.quiet else _progress_printer())
    except Exception as exc:  # report any failure as a runtime error
        print(f"softqec: {cfg.kind} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"softqec: wrote {out}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
