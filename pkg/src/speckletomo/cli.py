"""Command-line interface.

    speckle-tomo simulate    --config exp.cfg --out runs/
    speckle-tomo reconstruct --config exp.cfg --seed 3 [--input capture.pgm]
    speckle-tomo evaluate    --config exp.cfg
    speckle-tomo pipeline    --config exp.cfg --threads 4
    speckle-tomo oracle

Exit codes: 0 success, 2 invalid config, 3 I/O or file-format error,
4 memory-effect limit violated while ``--strict`` is set.
"""

import argparse
import logging
import os
import sys

import scipy.fft

from . import pipeline
from .config import ConfigError, load_config
from .io import FormatError
from .oracles import run_oracle_suite

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_MEMORY = 4

log = logging.getLogger("speckletomo")


def _default_threads():
    value = os.environ.get("SPECKLE_TOMO_THREADS")
    return int(value) if value else 1


def _common_flags(suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=default(None), help="flat key = value config file")
    p.add_argument("--seed", type=int, default=default(None), help="run only this seed")
    p.add_argument("--out", default=default(None), help="output directory (overrides config)")
    p.add_argument(
        "--threads",
        type=int,
        default=default(None),
        help="FFT worker threads (default: $SPECKLE_TOMO_THREADS or 1)",
    )
    p.add_argument(
        "--strict",
        action="store_true",
        default=default(False),
        help="exit with code 4 if the memory-effect scaling limit is violated",
    )
    p.add_argument("-v", "--verbose", action="store_true", default=default(False))
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog="speckle-tomo",
        description="Single-shot 3D imaging through scattering media (simulation and reconstruction)",
        parents=[_common_flags(suppress=False)],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    flags = _common_flags(suppress=True)
    sub.add_parser("simulate", parents=[flags], help="render speckle captures and ground truth")
    rec = sub.add_parser("reconstruct", parents=[flags], help="reconstruct from captures")
    rec.add_argument("--input", help="capture file (.pgm or .spkv); default: the simulated capture")
    sub.add_parser("evaluate", parents=[flags], help="score reconstructions against ground truth")
    sub.add_parser("pipeline", parents=[flags], help="simulate, reconstruct and evaluate")
    orc = sub.add_parser("oracle", parents=[flags], help="run the brute-force oracle comparisons")
    orc.add_argument("--instances", type=int, default=100)
    return parser


def _run(args):
    if args.command == "oracle":
        ok = run_oracle_suite(n_instances=args.instances, seed=args.seed or 0)
        return EXIT_OK if ok else EXIT_FAILED

    config = load_config(args.config)
    if args.out is not None:
        config.out = args.out
    seeds = (args.seed,) if args.seed is not None else config.seeds

    # simulate/pipeline emit the warning themselves, alongside the artifacts
    check = pipeline.memory_check(config, warn=args.command not in ("simulate", "pipeline"))
    print(
        f"memory-effect limit: |s^(M-1) - 1| * d = {check.lhs:.4f} px "
        f"{'<=' if check.ok else '>'} {check.rhs:.4f} px"
    )
    if args.strict and not check.ok:
        return EXIT_MEMORY

    if args.command == "pipeline":
        summary = pipeline.run_pipeline(config, seeds)
        for row in summary["per_seed"]:
            print(f"seed {row['seed']}: NCC {row['ncc']:.4f}")
        return EXIT_OK

    if args.command == "reconstruct" and args.input is not None and len(seeds) != 1:
        raise ConfigError("--input needs a single --seed")

    for seed in seeds:
        if args.command == "simulate":
            pipeline.run_simulate(config, seed, warn=seed == seeds[0])
            print(f"seed {seed}: wrote {pipeline.seed_dir(config, seed)}")
        elif args.command == "reconstruct":
            result = pipeline.run_reconstruct(config, seed, args.input)
            print(f"seed {seed}: final Fourier error {result.error_history[-1]:.4g}"
                  if result.error_history else f"seed {seed}: done")
        elif args.command == "evaluate":
            report = pipeline.run_evaluate(config, seed)
            print(
                f"seed {seed}: NCC {report.best_ncc:.4f} shift {report.best_shift} "
                f"inverted {report.conjugate_inverted}"
            )
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    threads = args.threads if args.threads is not None else _default_threads()
    try:
        with scipy.fft.set_workers(max(1, threads)):
            return _run(args)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    except (OSError, FormatError) as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
