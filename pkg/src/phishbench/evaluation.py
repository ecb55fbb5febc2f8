"""Confusion matrices, binary metrics, the multi-model comparison and its reports.

The positive class is phishing (label 1) throughout.
"""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from xml.sax.saxutils import escape

import numpy as np

from .dataset import SplitDataset
from .models import DISPLAY_NAMES, ClassifierSpec, TrainedModel, fit, predict
from .numerics import ParameterError

REPORT_FORMATS = ("markdown", "csv", "svg-bar-chart")


class EvalInputError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise EvalInputError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_rows(self) -> list[list]:
        """2x2 layout with actual class on rows and predicted class on columns, phishing first."""
        return [["", "pred_1", "pred_0"],
                ["true_1", self.tp, self.fn],
                ["true_0", self.fp, self.tn]]


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: tuple = ()    # names of metrics whose denominator was zero


def _binary(v, what: str) -> np.ndarray:
    arr = np.asarray(v).reshape(-1)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise EvalInputError(f"{what} must contain only 0 and 1")
    return arr.astype(np.int64)


def confusion(predictions, labels) -> ConfusionMatrix:
    p = _binary(predictions, "predictions")
    y = _binary(labels, "labels")
    if p.shape != y.shape:
        raise EvalInputError(f"{len(p)} predictions but {len(y)} labels")
    return ConfusionMatrix(
        tp=int(np.sum((p == 1) & (y == 1))),
        fp=int(np.sum((p == 1) & (y == 0))),
        fn=int(np.sum((p == 0) & (y == 1))),
        tn=int(np.sum((p == 0) & (y == 0))),
    )


def _ratio(num: float, den: float, name: str, flags: list) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def metrics(cm: ConfusionMatrix) -> MetricSet:
    """Accuracy, precision, recall and F1.  A zero denominator yields 0 and is flagged."""
    if cm.total == 0:
        raise EvalInputError("confusion matrix is empty")
    flags: list[str] = []
    acc = (cm.tp + cm.tn) / cm.total
    prec = _ratio(cm.tp, cm.tp + cm.fp, "precision", flags)
    rec = _ratio(cm.tp, cm.tp + cm.fn, "recall", flags)
    f1 = _ratio(2 * prec * rec, prec + rec, "f1", flags)
    return MetricSet(acc, prec, rec, f1, tuple(flags))


# --------------------------------------------------------------------------- comparison


@dataclass
class ComparisonRow:
    name: str
    kind: str
    seed: int
    scaling: str
    metrics: MetricSet | None = None
    cm: ConfusionMatrix | None = None
    train_seconds: float = 0.0
    error: str = ""

    @property
    def failed(self) -> bool:
        return self.metrics is None


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow]
    split_hash: str = ""
    models: dict[str, TrainedModel] = field(default_factory=dict, repr=False)

    def row(self, name: str) -> ComparisonRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def accuracy(self, name: str) -> float:
        return self.row(name).metrics.accuracy


def _evaluate(spec: ClassifierSpec, split: SplitDataset):
    try:
        model = fit(spec, split)
        cm = confusion(predict(model, split.x_test), split.y_test)
        return model, cm, ""
    except Exception as exc:  # a failed model must not sink the whole run
        return None, None, f"{type(exc).__name__}: {exc}"


def compare(specs: list[ClassifierSpec], split: SplitDataset, modes: dict | None = None,
            workers: int = 1) -> ComparisonTable:
    """Fit every spec on the training rows and score it on the test rows.

    Args:
        modes: optional ``{spec name: scaling mode}`` overrides.
        workers: fit models in this many processes; rows keep spec order.
    """
    if not specs:
        raise ParameterError("compare needs at least one classifier spec")
    modes = modes or {}
    specs = [replace(s, scaling=modes[s.name]) if s.name in modes else s for s in specs]
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ParameterError(f"duplicate model names in {names}")
    if workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate, specs, [split] * len(specs)))
    else:
        results = [_evaluate(s, split) for s in specs]
    table = ComparisonTable([], split.content_hash())
    for spec, (model, cm, err) in zip(specs, results):
        row = ComparisonRow(spec.name, spec.kind, spec.seed, spec.scaling, error=err)
        if model is not None:
            row.cm, row.metrics, row.train_seconds = cm, metrics(cm), model.train_seconds
            table.models[spec.name] = model
        table.rows.append(row)
    return table


# --------------------------------------------------------------------------- reports


def _label(row: ComparisonRow) -> str:
    if row.name == row.kind:
        return DISPLAY_NAMES.get(row.kind, row.name)
    return row.name


def _markdown(table: ComparisonTable) -> str:
    lines = ["| Model | Accuracy | Precision | Recall | F1 |", "|---|---|---|---|---|"]
    for r in table.rows:
        if r.failed:
            cells = ["failed"] * 4
        else:
            m = r.metrics
            cells = [f"{v:.4f}" for v in (m.accuracy, m.precision, m.recall, m.f1)]
        lines.append("| " + " | ".join([_label(r)] + cells) + " |")
    return "\n".join(lines) + "\n"


CSV_COLUMNS = ("model", "kind", "seed", "scaling", "status", "accuracy", "precision", "recall",
               "f1", "tp", "fp", "fn", "tn", "degenerate")


def _csv(table: ComparisonTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in table.rows:
        head = [r.name, r.kind, r.seed, r.scaling]
        if r.failed:
            w.writerow(head + ["failed"] + [""] * 9)
            continue
        m, cm = r.metrics, r.cm
        w.writerow(head + ["ok"] + [f"{v:.6f}" for v in (m.accuracy, m.precision, m.recall, m.f1)]
                   + [cm.tp, cm.fp, cm.fn, cm.tn, ";".join(m.degenerate)])
    return buf.getvalue()


def _svg(table: ComparisonTable) -> str:
    ok = sorted((r for r in table.rows if not r.failed), key=lambda r: (-r.metrics.accuracy, r.name))
    failed = [r for r in table.rows if r.failed]
    bar_h, gap, left, width = 22, 8, 170, 420
    height = 50 + (len(ok) + len(failed)) * (bar_h + gap)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{left + width + 80}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<text x="{left}" y="20" font-size="14">Test accuracy</text>']
    y = 35
    for r in ok:
        acc = r.metrics.accuracy
        out.append(f'<text x="{left - 8}" y="{y + 15}" text-anchor="end">{escape(_label(r))}</text>')
        out.append(f'<rect x="{left}" y="{y}" width="{acc * width:.1f}" height="{bar_h}" fill="#4477aa"/>')
        out.append(f'<text x="{left + acc * width + 6:.1f}" y="{y + 15}">{acc:.4f}</text>')
        y += bar_h + gap
    for r in failed:
        out.append(f'<text x="{left - 8}" y="{y + 15}" text-anchor="end">{escape(_label(r))}</text>')
        out.append(f'<text x="{left + 6}" y="{y + 15}" fill="#aa3333">failed</text>')
        y += bar_h + gap
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_report(table: ComparisonTable, format: str) -> str:
    if not table.rows:
        raise ParameterError("cannot render an empty comparison table")
    renderers = {"markdown": _markdown, "csv": _csv, "svg-bar-chart": _svg}
    if format not in renderers:
        raise ParameterError(f"unknown report format {format!r}; choose from {REPORT_FORMATS}")
    return renderers[format](table)


def confusion_csv(cm: ConfusionMatrix) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(cm.as_rows())
    return buf.getvalue()


def timings_csv(table: ComparisonTable) -> str:
    """Wall-clock train seconds; kept apart from comparison.csv, which must be reproducible."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "train_seconds"])
    for r in table.rows:
        w.writerow([r.name, "" if r.failed else f"{r.train_seconds:.3f}"])
    return buf.getvalue()


def write_reports(table: ComparisonTable, out_dir) -> list[str]:
    """Write comparison.md/.csv, accuracy.svg, timings.csv and confusion_<name>.csv files."""
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "comparison.md": render_report(table, "markdown"),
        "comparison.csv": render_report(table, "csv"),
        "accuracy.svg": render_report(table, "svg-bar-chart"),
        "timings.csv": timings_csv(table),
    }
    for r in table.rows:
        if not r.failed:
            files[f"confusion_{r.name}.csv"] = confusion_csv(r.cm)
    written = []
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(path)
    return written

