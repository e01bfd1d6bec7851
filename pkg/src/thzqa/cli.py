"""Command-line front end.

Exit codes: 0 success, 1 usage/validation failure, 2 I/O failure.
Every option can also come from a JSON file given with ``--config`` whose
keys mirror the long flag names; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import classify as cls
from . import synth
from .evaluation import EvaluationError, MosRecord, evaluate, srocc
from .image import ImageFormatError, load_cube, load_image, max_intensity_projection, save_image
from .metrics import MetricId, NiqeError, NiqeModel, niqe_fit, parse_metrics, score_all
from .tables import (
    TableError, dumps_json, mos_rows, read_labels, read_mos, read_score_table, rows_to_csv,
    score_table_from_scores, score_table_to_csv,
)

log = logging.getLogger("thzqa")

IMAGE_SUFFIXES = (".pgm", ".png")
DEFAULT_METRICS = "avg_intensity,fish,fish_bb,s3,cpbd"


class UsageError(Exception):
    """Bad invocation; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _write(path: Path, data: bytes | str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.write_bytes(data)


def _image_files(directory: Path) -> list[Path]:
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())


def _image_format(path: Path) -> str:
    return "png" if path.suffix.lower() == ".png" else "pgm"


# --------------------------------------------------------------------------
# commands


def cmd_synth(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    out = Path(args.out)
    fmt = args.format
    samples = synth.generate_dataset(args.count, args.seed)
    suffix = "." + fmt
    for s in samples:
        _write(out / (s.image_id + suffix), save_image(s.image, fmt, args.maxval))
    _write(out / "manifest.csv", rows_to_csv(synth.manifest_rows(samples, suffix)))
    records = [MosRecord(s.image_id, s.mos, len(s.scores), s.scores) for s in samples]
    _write(out / "mos.csv", mos_rows(records))
    print(f"wrote {len(samples)} images, manifest.csv and mos.csv to {out}")
    return 0


def cmd_project(args) -> int:
    cube = load_cube(Path(args.cube).read_bytes())
    out = Path(args.out)
    _write(out, save_image(max_intensity_projection(cube), _image_format(out), args.maxval))
    print(f"projected {cube.width}x{cube.height}x{cube.depth} cube to {out}")
    return 0


def cmd_score(args) -> int:
    try:
        metrics = parse_metrics(args.metrics)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    model = None
    if MetricId.NIQE in metrics:
        if not args.niqe_model:
            raise UsageError("niqe requested: --niqe-model is required")
        model = NiqeModel.from_json(Path(args.niqe_model).read_text(encoding="utf-8"))
    files = _image_files(Path(args.images))
    if not files:
        raise UsageError(f"no .pgm/.png images in {args.images}")
    scores, extra_flags = {}, {}
    failed = 0
    for path in files:
        image_id = path.stem
        try:
            image = load_image(path.read_bytes(), _image_format(path))
        except (OSError, ImageFormatError) as exc:
            log.warning("%s: unreadable (%s)", path.name, exc)
            extra_flags[image_id] = ["unreadable"]
            failed += 1
            continue
        recs, flags = [], []
        for metric in metrics:
            try:
                recs.extend(score_all(image, [metric], model, image_id))
            except (ValueError, NiqeError) as exc:
                log.warning("%s: %s failed (%s)", image_id, metric.value, exc)
                flags.append(f"{metric.value}:error")
        scores[image_id] = recs
        if flags:
            extra_flags[image_id] = flags
    if failed == len(files):
        print(f"error: none of the {failed} images could be read", file=sys.stderr)
        return 2
    table = score_table_from_scores(metrics, scores, extra_flags)
    _write(Path(args.out), score_table_to_csv(table))
    print(f"scored {len(files) - failed} images with {len(metrics)} metrics; {failed} unreadable")
    return 0


def cmd_fit_niqe(args) -> int:
    files = _image_files(Path(args.corpus))
    corpus = [load_image(p.read_bytes(), _image_format(p)) for p in files]
    model = niqe_fit(corpus, args.patch_size, args.sharp_fraction)
    _write(Path(args.out), model.to_json())
    print(f"fitted NIQE model on {len(corpus)} images")
    return 0


def _metric_columns(table, requested: str | None) -> list[str]:
    if not requested:
        return list(table.metrics)
    cols = []
    for name in requested.split(","):
        name = name.strip()
        try:
            key = MetricId.parse(name).value
        except ValueError:
            key = name
        if key not in table.metrics:
            raise UsageError(f"metric column {name!r} not in score table")
        cols.append(key)
    return cols


def cmd_evaluate(args) -> int:
    from . import plotting

    table = read_score_table(Path(args.scores))
    mos = read_mos(Path(args.mos))
    reports = []
    for column in _metric_columns(table, args.metrics):
        report = evaluate(table.column(column), mos, column)
        reports.append(report)
        if args.plots:
            plots = Path(args.plots)
            _write(plots / f"scatter_{column}.svg",
                   plotting.scatter_svg(report.mapped, report.mos, report.regression, column))
            _write(plots / f"bland_altman_{column}.svg",
                   plotting.bland_altman_svg(report.mapped, report.mos, report.bland_altman, column))
        print(f"{column:>14}  n={report.n:<4d} plcc={report.plcc:.4f} srocc={report.srocc:+.4f} "
              f"rmse={report.rmse:.4f} r2={report.r2:.4f}")
    _write(Path(args.out), dumps_json([r.to_dict() for r in reports]))
    return 0


def _replay(args) -> int:
    predicted, truth = read_labels(Path(args.replay))
    report = cls.confusion(predicted, truth)
    _write(Path(args.out), dumps_json({"metric": args.metric, "mode": "replay", **report.to_dict()}))
    print(f"overall accuracy {report.overall_accuracy:.2f}%  "
          f"false positive rate {report.false_positive_rate:.2f}%")
    return 0


def cmd_classify(args) -> int:
    if args.replay:
        return _replay(args)
    if not args.metric:
        raise UsageError("--metric is required")
    table = read_score_table(Path(args.scores))
    try:
        column = MetricId.parse(args.metric).value
    except ValueError:
        column = args.metric
    if column not in table.metrics:
        raise UsageError(f"metric column {args.metric!r} not in score table")
    values = table.column(column)
    ids = sorted(values)
    mos = read_mos(Path(args.mos)) if args.mos else None

    if args.polarity:
        polarity = cls.Polarity.parse(args.polarity)
        source = "flag"
    elif mos is not None:
        common = [k for k in ids if k in mos]
        polarity = cls.polarity_from_srocc(srocc([values[k] for k in common], [mos[k] for k in common]))
        source = "srocc"
    elif column in cls.DEFAULT_POLARITY:
        polarity = cls.DEFAULT_POLARITY[column]
        source = "default"
    else:
        raise UsageError("polarity unresolved: pass --polarity or --mos")

    try:
        result = cls.cluster_2means_1d([values[k] for k in ids])
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    predicted = dict(zip(ids, cls.predict_labels(result, polarity)))
    out = {
        "metric": column,
        "polarity": polarity.value,
        "polarity_source": source,
        "split_value": result.split_value,
        "centroids": list(result.centroids),
        "inertia": result.inertia,
        "n": len(ids),
    }
    if mos is not None:
        truth = cls.threshold_labels({k: mos[k] for k in ids if k in mos}, args.threshold)
        common = sorted(truth)
        report = cls.confusion([predicted[k] for k in common], [truth[k] for k in common])
        out.update(report.to_dict())
        print(f"overall accuracy {report.overall_accuracy:.2f}%  "
              f"false positive rate {report.false_positive_rate:.2f}%")
    else:
        n_ok = sum(1 for v in predicted.values() if v is cls.QualityLabel.ACCEPTABLE)
        print(f"split at {result.split_value:.6g}: {n_ok} acceptable, {len(ids) - n_ok} bad")
    _write(Path(args.out), dumps_json(out))
    return 0


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thzqa", description="THz security image quality toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic phantom dataset with pseudo-MOS")
    p.add_argument("--count", type=int, default=181)
    p.add_argument("--seed", type=int, default=synth.DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("pgm", "png"), default="pgm")
    p.add_argument("--maxval", type=int, choices=(255, 65535), default=65535)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("project", help="maximum-intensity projection of a THZCUBE1 file")
    p.add_argument("--cube", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--maxval", type=int, choices=(255, 65535), default=65535)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("score", help="score a directory of images")
    p.add_argument("--images", required=True)
    p.add_argument("--metrics", default=DEFAULT_METRICS)
    p.add_argument("--niqe-model")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("fit-niqe", help="fit a NIQE model on a pristine corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--patch-size", type=int, default=96)
    p.add_argument("--sharp-fraction", type=float, default=0.75)
    p.set_defaults(func=cmd_fit_niqe)

    p = sub.add_parser("evaluate", help="compare metric scores with MOS")
    p.add_argument("--scores", required=True)
    p.add_argument("--mos", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", help="comma-separated subset of score columns")
    p.add_argument("--plots", help="directory for SVG figures")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("classify", help="two-class quality gate on one metric")
    p.add_argument("--scores")
    p.add_argument("--metric")
    p.add_argument("--mos")
    p.add_argument("--polarity", choices=("higher", "lower"))
    p.add_argument("--threshold", type=float, default=cls.MOS_THRESHOLD)
    p.add_argument("--replay", help="labels CSV (image_id,truth,predicted) to tabulate directly")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Strip --config and return argv with config values inserted before explicit flags."""
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return argv
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    try:
        config = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"bad config file: {exc}") from None
    if not isinstance(config, dict):
        raise UsageError("config file must hold a JSON object")
    if not rest:
        raise UsageError("missing command")
    command, flags = rest[0], rest[1:]
    injected = []
    for key, value in config.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                injected.append(flag)
        else:
            injected += [flag, str(value)]
    # later occurrences win in argparse, so explicit flags go last
    return [command, *injected, *flags]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_apply_config(parser, argv))
        if args.command is None:
            raise UsageError("missing command")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ImageFormatError, EvaluationError, NiqeError, TableError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
