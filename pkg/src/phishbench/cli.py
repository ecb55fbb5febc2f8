"""Command-line entry point: ``phishbench <command> [options]``.

Exit codes: 0 success, 1 a check did not pass, 2 input/parse error,
3 data/schema error, 4 model/state error, 5 network error.

Config files are plain text, one ``key = value`` per line; ``#`` starts a
comment.  Keys are the RunConfig fields (``data``, ``out``, ``seed``, ``ratio``,
``scaling``, ``models``, ``workers``) plus ``<model>.<hyperparameter>`` overrides,
e.g. ``ann_lstm.epochs = 20`` or ``knn.scaling = standard``.  Override values are
parsed as JSON when possible (``20``, ``[64, 32]``, ``null``) and kept as text
otherwise.  Command-line flags win over the file.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import evaluation, modelio, neural, serve
from .dataset import DataParseError, SchemaError, load_csv, split, synthesize_table, write_csv
from .features import FeatureVector, FetchError, ParseError, load_brands
from .models import (
    DEFAULT_SCALING,
    KINDS,
    ClassifierSpec,
    ModelFormatError,
    SchemaMismatchError,
    StateError,
    comparison_specs,
    fit,
    predict,
)
from .numerics import ParameterError, SeededRng
from .schema import FEATURE_NAMES, N_FEATURES

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_DATA, EXIT_MODEL, EXIT_NETWORK = 0, 1, 2, 3, 4, 5

DATA_ENV = "PHISHING_CSV"
DEFAULT_DATA = os.path.join("data", "Phishing_Legitimate_full.csv")

ALIASES = {
    "lr": "logistic_regression", "logreg": "logistic_regression",
    "dt": "decision_tree", "tree": "decision_tree",
    "nb": "naive_bayes", "svm": "linear_svm",
    "ann-lstm": "ann_lstm", "bi-lstm": "bilstm",
}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# --------------------------------------------------------------------------- config


@dataclass
class RunConfig:
    data: str = ""
    out: str = "runs"
    seed: int = 0
    ratio: float = 0.7
    scaling: str = ""                  # empty: each model's default mode
    models: list[str] = field(default_factory=lambda: [s.kind for s in comparison_specs()])
    workers: int = 1
    overrides: dict[str, dict] = field(default_factory=dict)

    def specs(self) -> list[ClassifierSpec]:
        out = []
        for kind in self.models:
            hp = dict(self.overrides.get(kind, {}))
            scaling = hp.pop("scaling", None) or self.scaling or DEFAULT_SCALING[kind]
            out.append(ClassifierSpec(kind, hp, self.seed, scaling))
        return out

    def dump(self) -> str:
        d = asdict(self)
        lines = [f"{k} = {','.join(v) if k == 'models' else v}"
                 for k, v in d.items() if k != "overrides"]
        for kind in sorted(self.overrides):
            for key in sorted(self.overrides[kind]):
                lines.append(f"{kind}.{key} = {json.dumps(self.overrides[kind][key])}")
        return "\n".join(lines) + "\n"


def canonical_kind(name: str) -> str:
    kind = ALIASES.get(name.strip().lower(), name.strip().lower())
    if kind not in KINDS:
        raise CliError(EXIT_INPUT, f"unknown model {name!r}; choose from {', '.join(KINDS)}")
    return kind


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_config_text(text: str, cfg: RunConfig | None = None) -> RunConfig:
    cfg = cfg or RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(EXIT_INPUT, f"config line {lineno}: expected 'key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        apply_setting(cfg, key, val, f"config line {lineno}")
    return cfg


def apply_setting(cfg: RunConfig, key: str, val: str, where: str = "setting") -> None:
    try:
        if "." in key:
            model, hp = key.split(".", 1)
            cfg.overrides.setdefault(canonical_kind(model), {})[hp] = _value(val)
        elif key == "models":
            cfg.models = [canonical_kind(m) for m in val.split(",") if m.strip()]
        elif key in ("seed", "workers"):
            setattr(cfg, key, int(val))
        elif key == "ratio":
            cfg.ratio = float(val)
        elif key in ("data", "out", "scaling"):
            setattr(cfg, key, val)
        else:
            raise CliError(EXIT_INPUT, f"{where}: unknown key {key!r}")
    except ValueError:
        raise CliError(EXIT_INPUT, f"{where}: bad value {val!r} for {key!r}") from None
    if cfg.scaling not in ("", "standard", "minmax", "none"):
        raise CliError(EXIT_INPUT, f"{where}: unknown scaling mode {cfg.scaling!r}")


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                parse_config_text(fh.read(), cfg)
        except OSError as exc:
            raise CliError(EXIT_INPUT, f"cannot read config {args.config}: {exc.strerror}") from None
    for key in ("data", "out", "seed", "scaling"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if getattr(args, "ratio", None) is not None:
        cfg.ratio = args.ratio
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    if getattr(args, "models", None):
        cfg.models = [canonical_kind(m) for m in args.models.split(",") if m.strip()]
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise CliError(EXIT_INPUT, f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        apply_setting(cfg, key.strip(), val.strip(), "--set")
    if not cfg.data:
        cfg.data = os.environ.get(DATA_ENV, DEFAULT_DATA)
    return cfg


def echo_config(cfg: RunConfig, command: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "resolved_config.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# phishbench {command}\n" + cfg.dump())
    return path


# --------------------------------------------------------------------------- helpers


def load_table(cfg: RunConfig):
    """Read the dataset; ``synthetic`` or ``synthetic:N`` builds the surrogate table instead."""
    if cfg.data.startswith("synthetic"):
        _, _, n = cfg.data.partition(":")
        return synthesize_table(int(n) if n else 10_000, cfg.seed)
    if not os.path.exists(cfg.data):
        raise CliError(EXIT_DATA, f"dataset not found: {cfg.data} (set --data or ${DATA_ENV})")
    return load_csv(cfg.data)


def _split(cfg: RunConfig):
    table = load_table(cfg)
    return table, split(table, cfg.ratio, cfg.seed, stratified=True, scaling=cfg.scaling or "standard")


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_model(path: str):
    try:
        return modelio.load_model(path)
    except OSError as exc:
        raise CliError(EXIT_MODEL, f"cannot read model {path}: {exc.strerror}") from None


# --------------------------------------------------------------------------- commands


def _read_html(path: str | None) -> str | None:
    if not path:
        return None
    try:
        with open(path, encoding="utf-8", errors="replace") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc.strerror}") from None


def cmd_extract(args) -> int:
    html = _read_html(args.html)
    brands = load_brands(args.brands) if args.brands else ()
    fv = serve.build_vector(args.url, html, args.fetch, brands)
    if args.header:
        print(",".join(FEATURE_NAMES))
    print(fv.csv_row())
    missing = [n for n, p in fv.provenance.items() if p == "unavailable"]
    if missing:
        print(f"note: {len(missing)} content features unavailable (no HTML); written as 0",
              file=sys.stderr)
    return EXIT_OK


def cmd_preprocess(args) -> int:
    cfg = resolve_config(args)
    table, ds = _split(cfg)
    echo_config(cfg, "preprocess")
    for name, idx in (("train.csv", ds.train_idx), ("test.csv", ds.test_idx)):
        write_csv(table.subset(idx), os.path.join(cfg.out, name))
    scaler = ds.scaler
    summary = {
        "n_train": int(len(ds.y_train)), "n_test": int(len(ds.y_test)),
        "train_per_class": {str(c): int(np.sum(ds.y_train == c)) for c in (0, 1)},
        "test_per_class": {str(c): int(np.sum(ds.y_test == c)) for c in (0, 1)},
        "split_hash": ds.content_hash(), "scaling": scaler.mode,
        "scaler": {"center": scaler.center.tolist(), "scale": scaler.scale.tolist()},
    }
    _write_json(os.path.join(cfg.out, "split.json"), summary)
    print(f"train {summary['n_train']} rows, test {summary['n_test']} rows, split {summary['split_hash'][:16]}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    cfg.models = [canonical_kind(args.model)]
    _, ds = _split(cfg)
    spec = cfg.specs()[0]
    echo_config(cfg, "train")
    model = fit(spec, ds)
    path = args.model_out or os.path.join(cfg.out, f"{spec.kind}.phfg")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    modelio.save_model(model, path)
    cm = evaluation.confusion(predict(model, ds.x_test), ds.y_test)
    m = evaluation.metrics(cm)
    log = {
        "model": spec.kind, "seed": spec.seed, "scaling": spec.scaling,
        "hyperparameters": spec.hyperparameters, "split_hash": ds.content_hash(),
        "n_train": int(len(ds.y_train)), "loss_curve": model.meta.get("loss_curve", []),
        "test_accuracy": m.accuracy, "train_seconds": round(model.train_seconds, 3),
        "model_file": path, "model_sha256": modelio.file_digest(path),
    }
    _write_json(os.path.join(cfg.out, f"train_{spec.kind}.json"), log)
    print(f"{spec.kind}: seed {spec.seed}, test accuracy {m.accuracy:.4f}, saved {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = resolve_config(args)
    _, ds = _split(cfg)
    echo_config(cfg, "compare")
    table = evaluation.compare(cfg.specs(), ds, workers=cfg.workers)
    evaluation.write_reports(table, cfg.out)
    model_dir = os.path.join(cfg.out, "models")
    os.makedirs(model_dir, exist_ok=True)
    for name, model in table.models.items():
        modelio.save_model(model, os.path.join(model_dir, f"{name}.phfg"))
    print(evaluation.render_report(table, "markdown"), end="")
    for r in table.rows:
        if r.failed:
            print(f"{r.name} failed: {r.error}", file=sys.stderr)
    if all(r.failed for r in table.rows):
        raise CliError(EXIT_MODEL, "every model failed")
    return EXIT_OK


def _row_vector(text: str) -> FeatureVector:
    cells = next(csv.reader([text]))
    if len(cells) != N_FEATURES:
        raise CliError(EXIT_MODEL, f"row has {len(cells)} values; the model schema has {N_FEATURES}")
    try:
        vals = [float(c) for c in cells]
    except ValueError as exc:
        raise CliError(EXIT_INPUT, f"row is not numeric: {exc}") from None
    return FeatureVector(dict(zip(FEATURE_NAMES, vals)))


def cmd_predict(args) -> int:
    model = _load_model(args.model_path)
    if args.row is not None:
        fv = _row_vector(args.row)
    else:
        fv = serve.build_vector(args.url, _read_html(args.html), args.fetch)
    p, label = serve.score_vector(model, fv)
    print(f"{p:.6f} {label}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    start = time.perf_counter()
    worst = 0.0
    for kind in neural.PROBE_KINDS:
        errs = [neural.grad_check(*neural.probe_network(kind, SeededRng(args.seed + s)))
                for s in range(args.networks)]
        worst = max(worst, max(errs))
        print(f"{kind:7s} max relative error {max(errs):.3e} over {len(errs)} networks")
    ok = worst < args.tol
    print(f"{'PASS' if ok else 'FAIL'} worst {worst:.3e} (tol {args.tol:g}) in {time.perf_counter() - start:.1f}s")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_serve(args) -> int:
    model = _load_model(args.model_path)
    brands = load_brands(args.brands) if args.brands else ()

    def ready(server):
        host, port = server.server_address[:2]
        print(f"serving {model.kind} on http://{host}:{port}", flush=True)

    serve.run(model, args.host, args.port, brands, ready)
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--data", help=f"dataset CSV, or synthetic[:N] (default ${DATA_ENV} or {DEFAULT_DATA})")
    common.add_argument("--out", help="output directory (default runs)")
    common.add_argument("--scaling", choices=("standard", "minmax", "none"),
                        help="scaling for every model (default: per-model)")
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--ratio", type=float, help="train fraction (default 0.7)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="config override, e.g. ann.epochs=10 (repeatable)")

    p = argparse.ArgumentParser(prog="phishbench", description="phishing website detection workbench")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("extract", parents=[common], help="print the 48-feature CSV row for a URL")
    e.add_argument("url")
    e.add_argument("--html", help="local HTML file for content features")
    e.add_argument("--fetch", action="store_true", help="download the page")
    e.add_argument("--brands", help="brand list file, one per line")
    e.add_argument("--header", action="store_true", help="print the column names first")
    e.set_defaults(func=cmd_extract)

    pp = sub.add_parser("preprocess", parents=[common], help="split the dataset and fit the scaler")
    pp.set_defaults(func=cmd_preprocess)

    t = sub.add_parser("train", parents=[common], help="train one model")
    t.add_argument("--model", required=True)
    t.add_argument("--model-out", help="model file path (default <out>/<kind>.phfg)")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("compare", parents=[common], help="train and evaluate several models")
    c.add_argument("--models", help="comma list (default: all nine)")
    c.add_argument("--workers", type=int, help="parallel model fits (default 1)")
    c.set_defaults(func=cmd_compare)

    pr = sub.add_parser("predict", parents=[common], help="score a URL or a feature row")
    pr.add_argument("model_path")
    grp = pr.add_mutually_exclusive_group(required=True)
    grp.add_argument("--url")
    grp.add_argument("--row", help="48 comma-separated feature values; write --row=... when the first is negative")
    pr.add_argument("--html")
    pr.add_argument("--fetch", action="store_true")
    pr.set_defaults(func=cmd_predict)

    g = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient check")
    g.add_argument("--networks", type=int, default=20, help="networks per probe kind")
    g.add_argument("--tol", type=float, default=1e-4)
    g.set_defaults(func=cmd_gradcheck)

    s = sub.add_parser("serve", parents=[common], help="HTTP scoring endpoint")
    s.add_argument("model_path")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.add_argument("--brands")
    s.set_defaults(func=cmd_serve)
    return p


def _exit_code(exc: BaseException) -> int | None:
    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, serve.ExtractionError) and exc.category == "fetch":
        return EXIT_NETWORK
    if isinstance(exc, (FetchError, serve.BindError)):
        return EXIT_NETWORK
    if isinstance(exc, (SchemaMismatchError, ModelFormatError, StateError)):
        return EXIT_MODEL
    if isinstance(exc, (SchemaError, DataParseError)):
        return EXIT_DATA
    if isinstance(exc, (ParseError, serve.ExtractionError, serve.RequestError, ParameterError,
                        evaluation.EvalInputError, neural.InputError, ValueError)):
        return EXIT_INPUT
    return None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is None and args.command == "gradcheck":
        args.seed = 0
    try:
        return args.func(args)
    except Exception as exc:
        code = _exit_code(exc)
        if code is None:
            raise
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
