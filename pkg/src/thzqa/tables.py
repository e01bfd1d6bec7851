"""CSV and JSON formats shared by the command-line tools."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from .classify import QualityLabel
from .jsonfmt import dumps_json  # noqa: F401  (re-exported)
from .metrics import MetricId, MetricScore

FLAGS_COLUMN = "_flags"


class TableError(ValueError):
    pass


def _write_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise TableError(f"{path}: missing header row")
        return list(reader)


def rows_to_csv(rows) -> str:
    return _write_csv(rows)


# --------------------------------------------------------------------------
# score table


@dataclass
class ScoreTable:
    metrics: list[str]
    values: dict[str, dict[str, float]] = field(default_factory=dict)
    flags: dict[str, list[str]] = field(default_factory=dict)

    def column(self, metric: str) -> dict[str, float]:
        return {img: row[metric] for img, row in self.values.items() if metric in row}


def score_table_from_scores(metrics: list[MetricId], scores: dict[str, list[MetricScore]],
                            flags: dict[str, list[str]] | None = None) -> ScoreTable:
    table = ScoreTable([m.value for m in sorted(metrics, key=lambda m: m.order)])
    for image_id, recs in scores.items():
        table.values[image_id] = {r.metric.value: r.value for r in recs}
        table.flags[image_id] = [f for r in recs for f in r.flags]
    for image_id, extra in (flags or {}).items():
        table.values.setdefault(image_id, {})
        table.flags.setdefault(image_id, []).extend(extra)
    return table


def score_table_to_csv(table: ScoreTable) -> str:
    rows = [["image_id", *table.metrics, FLAGS_COLUMN]]
    for image_id in sorted(table.values):
        vals = table.values[image_id]
        cells = [format(vals[m], ".17g") if m in vals else "" for m in table.metrics]
        rows.append([image_id, *cells, ";".join(table.flags.get(image_id, []))])
    return _write_csv(rows)


def read_score_table(path: Path) -> ScoreTable:
    records = _read_csv(path)
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh))
    if not header or header[0] != "image_id":
        raise TableError(f"{path}: first column must be image_id")
    metrics = [h for h in header[1:] if h != FLAGS_COLUMN]
    table = ScoreTable(metrics)
    for rec in records:
        image_id = rec["image_id"]
        row = {}
        for m in metrics:
            cell = (rec.get(m) or "").strip()
            if cell:
                try:
                    row[m] = float(cell)
                except ValueError:
                    raise TableError(f"{path}: bad number {cell!r} in column {m}") from None
        table.values[image_id] = row
        flag_text = (rec.get(FLAGS_COLUMN) or "").strip()
        table.flags[image_id] = flag_text.split(";") if flag_text else []
    return table


# --------------------------------------------------------------------------
# MOS table


def mos_rows(records) -> str:
    n_obs = max((len(r.scores) for r in records), default=0)
    header = ["image_id", "mos", "n_observers"] + [f"s{i}" for i in range(1, n_obs + 1)]
    rows = [header]
    for r in sorted(records, key=lambda r: r.image_id):
        rows.append([r.image_id, repr(r.mos), str(r.n_observers)] + [str(s) for s in r.scores])
    return _write_csv(rows)


def read_mos(path: Path) -> dict[str, float]:
    """Read ``image_id, mos`` pairs (extra columns such as observer scores are ignored)."""
    out = {}
    for rec in _read_csv(path):
        if "image_id" not in rec or "mos" not in rec:
            raise TableError(f"{path}: needs image_id and mos columns")
        try:
            out[rec["image_id"]] = float(rec["mos"])
        except (TypeError, ValueError):
            raise TableError(f"{path}: bad MOS value {rec['mos']!r}") from None
    return out


def read_labels(path: Path):
    """Read ``image_id, truth, predicted`` rows for confusion replay."""
    truth, predicted = [], []
    for rec in _read_csv(path):
        try:
            truth.append(QualityLabel.parse(rec["truth"]))
            predicted.append(QualityLabel.parse(rec["predicted"]))
        except KeyError:
            raise TableError(f"{path}: needs truth and predicted columns") from None
    return predicted, truth
