"""Command-line entry point ``wsma-mud``.

Subcommands::

    wsma-mud sequences generate --type grassmann -K 4 -L 2 -o seq.txt
    wsma-mud sequences inspect seq.txt
    wsma-mud train -K 2 --n-epoch 100000 -o fcnn.npz
    wsma-mud evaluate --detector ml --detector fcnn:fcnn.npz --snr 14 20
    wsma-mud sweep config.yaml

The default seed comes from ``WSMA_SEED`` when set. Exit status is 0 on
success and 2 on a configuration, checkpoint or convergence error.
"""

import argparse
import json
import logging
import sys

from . import __version__
from .bench import SweepConfig, build_sequences, default_seed, evaluate_points, format_csv, \
    run_experiment, Detector
from .channel import make_link
from .checkpoint import save_checkpoint
from .errors import WsmaError
from .labels import build_codebook
from .numerics import RandomStream, strict_mode
from .signatures import (coherence_lower_bound, equiangular_spread, generate_grassmann, generate_wbe,
                         load_sequences, save_sequences, welch_bound)
from .trainer import TrainConfig, train


def _add_link_args(p, K=2):
    p.add_argument("-K", type=int, default=K, help="number of UEs")
    p.add_argument("-L", type=int, default=2, help="spreading length")
    p.add_argument("--Nr", type=int, default=3, help="receive antennas")
    p.add_argument("-M", type=int, default=4, help="QAM order")
    p.add_argument("--sequence-type", default="grassmann", choices=("grassmann", "wbe", "file"))
    p.add_argument("--sequence-file")
    p.add_argument("--sequence-pool", type=int, help="sequences generated before keeping the first K")
    p.add_argument("--seed", type=int, default=None, help="default: $WSMA_SEED or 0")


def _sweep_config(args, **extra):
    return SweepConfig(K=args.K, L=args.L, Nr=args.Nr, M=args.M, sequence_type=args.sequence_type,
                       sequence_file=args.sequence_file, sequence_pool=args.sequence_pool,
                       seed=args.seed, **extra)


def _link(config):
    return make_link(config.K, config.L, config.Nr, config.M, build_sequences(config))


def cmd_sequences_generate(args):
    seed = default_seed() if args.seed is None else args.seed
    gen = generate_grassmann if args.type == "grassmann" else generate_wbe
    S = gen(args.K, args.L, RandomStream(seed).child(0))
    save_sequences(S, args.output)
    print(f"wrote {args.output}: K={S.K} L={S.L} tsc={S.tsc:.9g} coherence={S.coherence:.9g}")


def cmd_sequences_inspect(args):
    S = load_sequences(args.path)
    info = {
        "K": S.K, "L": S.L, "overloading_factor": S.overloading_factor,
        "tsc": S.tsc, "welch_bound": welch_bound(S.K, S.L),
        "coherence": S.coherence, "coherence_lower_bound": coherence_lower_bound(S.K, S.L),
        "equiangular_spread": equiangular_spread(S),
    }
    print(json.dumps(info, indent=2))


def cmd_train(args):
    config = _sweep_config(args)
    link = _link(config)
    tc = TrainConfig(n_epoch=args.n_epoch, batch_size=args.batch_size,
                     train_noise_variance=args.train_noise_variance, learning_rate=args.learning_rate,
                     seed=config.seed, include_spread_matrix=args.include_spread_matrix,
                     label_mode=args.label_mode, architecture=args.architecture,
                     log_every=args.log_every)
    codebook = build_codebook(tc.label_mode, link.M, link.K)
    params, spec, trace = train(tc, link, codebook, strict=not args.no_strict)
    meta = tc.to_dict()
    meta["final_loss"] = float(trace[-100:].mean()) if len(trace) else None
    save_checkpoint(params, spec, codebook, meta, args.output, link=link)
    print(f"wrote {args.output}: {spec.output_size}-output {tc.architecture}, "
          f"final loss {meta['final_loss']}")


def cmd_evaluate(args):
    config = _sweep_config(args, trials_per_point=args.trials, detectors=args.detector,
                           snr_grid_db=args.snr, stratified=args.stratified)
    link = _link(config)
    detectors = [Detector(d, link) for d in config.detectors]
    points = []
    with strict_mode(not args.no_strict):
        for snr in config.snr_grid_db:
            points += evaluate_points(link, detectors, snr, config.trials_per_point, config.seed,
                                      config.stratified)
    order = {d: i for i, d in enumerate(config.detectors)}
    points.sort(key=lambda p: (order[p.detector], p.snr_db))
    sys.stdout.write(format_csv(points))


def cmd_sweep(args):
    points = run_experiment(args.config)
    print(f"{len(points)} points written")


def build_parser():
    parser = argparse.ArgumentParser(prog="wsma-mud", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    seq = sub.add_parser("sequences", help="design or inspect signature sequences")
    seq_sub = seq.add_subparsers(dest="action", required=True)
    g = seq_sub.add_parser("generate")
    g.add_argument("--type", default="grassmann", choices=("grassmann", "wbe"))
    g.add_argument("-K", type=int, default=4)
    g.add_argument("-L", type=int, default=2)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_sequences_generate)
    i = seq_sub.add_parser("inspect")
    i.add_argument("path")
    i.set_defaults(func=cmd_sequences_inspect)

    t = sub.add_parser("train", help="train a neural detector and save a checkpoint")
    _add_link_args(t)
    defaults = TrainConfig()
    t.add_argument("--architecture", default=defaults.architecture, choices=("fcnn", "cnn2d"))
    t.add_argument("--label-mode", default=defaults.label_mode)
    t.add_argument("--n-epoch", type=int, default=defaults.n_epoch)
    t.add_argument("--batch-size", type=int, default=None)
    t.add_argument("--train-noise-variance", type=float, default=defaults.train_noise_variance)
    t.add_argument("--learning-rate", type=float, default=defaults.learning_rate)
    t.add_argument("--include-spread-matrix", action="store_true")
    t.add_argument("--log-every", type=int, default=0)
    t.add_argument("--no-strict", action="store_true", help="allow multithreaded BLAS")
    t.add_argument("-o", "--output", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="SER of detectors at given SNRs, CSV to stdout")
    _add_link_args(e)
    e.add_argument("--detector", action="append", required=True)
    e.add_argument("--snr", type=float, nargs="+", required=True)
    e.add_argument("--trials", type=int, default=10_000)
    e.add_argument("--stratified", action="store_true")
    e.add_argument("--no-strict", action="store_true")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="run the sweep described by a config file")
    s.add_argument("config")
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (WsmaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
