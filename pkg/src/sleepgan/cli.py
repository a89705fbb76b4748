"""Command-line pipeline: simulate -> temporalize -> train -> generate -> evaluate.

Exit codes: 0 success, 1 validation or config error, 2 I/O error,
3 numeric abort during training.  Progress goes to stderr and written
paths to stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from ._io import atomic_write
from .codec import encode_matrix, fit_codec
from .errors import ConfigError, IngestError, NonFiniteGradient, SleepGanError
from .evaluate import AGE_GROUPS, build_report
from .ingest import WINDOW_MIN, awake_fraction_at, parse_events
from .simulate import PopulationConfig, default_population, simulate_events_csv
from .temporalize import FeatureMatrix, build_feature_matrix
from .wgan import (
    GanConfig,
    checkpoint_codec,
    load_checkpoint,
    sample,
    save_checkpoint,
    train,
    write_loss_log,
)

log = logging.getLogger("sleepgan")


class CliError(Exception):
    def __init__(self, code, exc):
        self.code = code
        self.exc = exc
        super().__init__(str(exc))


def _read_text(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(2, exc) from None


def _read_config(path):
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(1, ConfigError(f"cannot read config {path}: {exc.strerror}")) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(1, ConfigError(f"config {path} is not valid JSON: {exc}")) from None
    if not isinstance(doc, dict):
        raise CliError(1, ConfigError(f"config {path} must hold a JSON object"))
    return doc


def _write(path, data):
    try:
        atomic_write(path, data)
    except OSError as exc:
        raise CliError(2, exc) from None
    print(path)


def cmd_simulate(args):
    doc = _read_config(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.n is not None:
        doc["n_persons"] = args.n
    config = PopulationConfig.from_dict(doc) if doc else default_population()
    text = simulate_events_csv(config)
    _write(args.output, text)
    log.info("simulated %d persons, %d event rows", config.n_persons, text.count("\n") - 1)


def cmd_temporalize(args):
    persons = parse_events(_read_text(args.events), sleep_code=args.sleep_code)
    matrix = build_feature_matrix(persons)
    log.info("awake fraction at 10:00am: %.4f", awake_fraction_at(persons, WINDOW_MIN))
    _write(args.output, matrix.to_csv())
    log.info("wrote %d rows x %d columns", len(matrix), len(matrix.columns))


def _load_matrix(path):
    return FeatureMatrix.from_csv(_read_text(path))


def cmd_train(args):
    doc = _read_config(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.iterations is not None:
        doc["iterations"] = args.iterations
    config = GanConfig.from_dict(doc)
    matrix = _load_matrix(args.matrix)
    codec = fit_codec(matrix)
    resume = load_checkpoint(args.resume) if args.resume else None
    cp, loss_log = train(encode_matrix(codec, matrix), config, codec, resume=resume)
    try:
        save_checkpoint(cp, args.output)
    except OSError as exc:
        raise CliError(2, exc) from None
    print(args.output)
    if args.loss_log:
        _write(args.loss_log, write_loss_log(loss_log))
    if loss_log:
        log.info("trained to iteration %d, final wasserstein estimate %.6g", cp.iteration, loss_log[-1][1])


def cmd_generate(args):
    try:
        cp = load_checkpoint(args.checkpoint)
    except OSError as exc:
        raise CliError(2, exc) from None
    synth = sample(cp, checkpoint_codec(cp), args.n, args.seed if args.seed is not None else 0)
    _write(args.output, synth.to_csv())
    log.info("generated %d rows", len(synth))


def cmd_evaluate(args):
    real, synth = _load_matrix(args.real), _load_matrix(args.synth)
    report = build_report(real, synth, tuple(args.groups))
    try:
        report.write(args.output)
    except OSError as exc:
        raise CliError(2, exc) from None
    print(Path(args.output) / "report.json")
    log.info("mean-per-hour MAE %.4f min, max covariate deviation %.4f",
             report.mae, report.max_covariate_deviation)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (u64)")
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("--json-errors", action="store_true",
                        help="report errors as one JSON object on stderr")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sleepgan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="write a simulated event CSV")
    p.add_argument("-n", type=int, default=None, help="number of persons")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("temporalize", parents=[common], help="event CSV -> 34-column matrix CSV")
    p.add_argument("events")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--sleep-code", default="sleep")
    p.set_defaults(func=cmd_temporalize)

    p = sub.add_parser("train", parents=[common], help="train the WGAN on a matrix CSV")
    p.add_argument("matrix")
    p.add_argument("-o", "--output", required=True, help="checkpoint path")
    p.add_argument("--loss-log", default=None, help="CSV of iteration,wasserstein_estimate")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--resume", default=None, help="checkpoint to continue from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", parents=[common], help="sample synthetic rows")
    p.add_argument("checkpoint")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", parents=[common], help="compare real and synthetic matrices")
    p.add_argument("real")
    p.add_argument("synth")
    p.add_argument("-o", "--output", required=True, help="report directory")
    p.add_argument("--groups", nargs="+", default=["15-24"], choices=AGE_GROUPS,
                   help="age groups for quantile curves")
    p.set_defaults(func=cmd_evaluate)
    return parser


def _report_error(exc, json_errors):
    if json_errors:
        errors = getattr(exc, "errors", [exc])
        doc = {"error": type(exc).__name__, "message": str(exc),
               "errors": [{"type": type(e).__name__, "line": getattr(e, "line", None),
                           "message": str(e)} for e in errors]}
        print(json.dumps(doc), file=sys.stderr)
        return
    for e in getattr(exc, "errors", [exc]):
        print(f"sleepgan: {type(e).__name__}: {e}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except CliError as err:
        _report_error(err.exc, args.json_errors)
        return err.code
    except NonFiniteGradient as exc:
        _report_error(exc, args.json_errors)
        return 3
    except (IngestError, SleepGanError) as exc:
        _report_error(exc, args.json_errors)
        return 1
    except OSError as exc:
        _report_error(exc, args.json_errors)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
