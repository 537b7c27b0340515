# Copyright (c) 2024 NestedVAE developers
#
# MIT License
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
#
# Command-line entry point: ``nestedvae build-data | train | evaluate | change-detect``.
#
# ===============================================================================================


import argparse
import logging
import os
import sys
from typing import List, Optional

from nestedvae.config import MODEL_KINDS, PROTOCOLS, apply_overrides, load_config
from nestedvae.datasets import read_dataset
from nestedvae.errors import NestedVAEError
from nestedvae.protocols import evaluate, train_all, write_datasets

__all__ = [
    'build_parser',
    'main',
]

logger = logging.getLogger('nestedvae')

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', default=None, help='JSON experiment file (defaults when omitted).')
    parser.add_argument('--seed', type=int, default=None, help='Run a single seed instead of the configured list.')
    parser.add_argument('--out', default=None, help='Output directory.')


def _runs(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument('--holdout-domain', type=int, default=None, metavar='K',
                       help='Domain excluded from training and probed at test time.')
    group.add_argument('--sweep-domains', action='store_true',
                       help='One run per held-out domain.')
    parser.add_argument('--model', choices=MODEL_KINDS, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='nestedvae', description='Nested VAE experiments.')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='Debug logging.')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='Warnings and errors only.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('build-data', help='Build the train/test dataset containers.')
    _common(p)

    p = sub.add_parser('train', help='Train one model per seed and held-out domain.')
    _common(p)
    _runs(p)
    p.add_argument('--epochs', type=int, default=None)

    for name, fixed in (('evaluate', None), ('change-detect', 'change')):
        p = sub.add_parser(name, help='Evaluate trained checkpoints.' if fixed is None
                           else 'Change-detection accuracy of trained checkpoints.')
        _common(p)
        _runs(p)
        p.add_argument('--checkpoint', default=None, help='Checkpoint of a single run.')
        if fixed is None:
            p.add_argument('--protocol', choices=PROTOCOLS, default=None)
        p.add_argument('--plot', action='store_true', help='Also write projection.png.')
        p.set_defaults(fixed_protocol=fixed)
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)


def _cmd_build_data(cfg) -> None:
    train_path, test_path = write_datasets(cfg)
    for path in (train_path, test_path):
        ds = read_dataset(path)
        counts = ds.counts()
        print('{}: {} items, {} classes, {} domains'.format(path, len(ds), len(counts['class']), len(counts['domain'])))
        logger.info('%s class counts %s domain counts %s', path, counts['class'], counts['domain'])


def _cmd_train(cfg) -> None:
    for run, log in train_all(cfg):
        last = log.epochs[-1]
        print('seed={} holdout={} total={:.6f} -> {}'.format(run.seed, run.holdout, last['total'], run.directory))


def _cmd_evaluate(cfg, args) -> None:
    report = evaluate(cfg, args.checkpoint)
    for row in report.rows:
        where = 'all' if row.domain is None else row.domain
        print('{} {} {}: {:.4f} +- {:.4f} (n={})'.format(row.probe, where, row.metric, row.mean, row.stderr, row.n_runs))
    for key, value in sorted(report.adjusted_parity.items()):
        print('adjusted parity {}: {:.4f}'.format(key, value))
    if report.change_detection_accuracy is not None:
        print('change detection accuracy: {:.4f}'.format(report.change_detection_accuracy))
    if args.plot:
        from nestedvae.utils.plotting import plot_projection
        plot_projection(os.path.join(cfg.out_dir, 'projection.csv'), os.path.join(cfg.out_dir, 'projection.png'),
                        title=cfg.model_kind)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        cfg = load_config(args.config)
        protocol = getattr(args, 'fixed_protocol', None) or getattr(args, 'protocol', None)
        apply_overrides(cfg,
                        seed=args.seed,
                        holdout_domain=getattr(args, 'holdout_domain', None),
                        sweep_domains=getattr(args, 'sweep_domains', None),
                        model_kind=getattr(args, 'model', None),
                        epochs=getattr(args, 'epochs', None),
                        out_dir=args.out,
                        protocol=protocol)
        if args.command == 'build-data':
            _cmd_build_data(cfg)
        elif args.command == 'train':
            _cmd_train(cfg)
        else:
            _cmd_evaluate(cfg, args)
    except (NestedVAEError, OSError) as exc:
        logger.error('%s', exc)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
