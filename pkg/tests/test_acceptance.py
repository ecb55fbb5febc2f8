"""Acceptance criteria AC1-AC9, one PASS/FAIL line each in the terminal summary.

Criteria that name the published 10,000-row dataset need it on disk (``$PHISHING_CSV``
or ``data/Phishing_Legitimate_full.csv``).  Without it they are reported FAIL and
marked xfail, so the gap stays visible without hiding the rest of the suite.
"""
import json
import os
import threading
import time
from pathlib import Path

import httpx
import numpy as np
import pytest

from phishbench import neural
from phishbench.cli import main
from phishbench.dataset import RawTable, load_csv, split, synthesize_table
from phishbench.evaluation import ConfusionMatrix, compare, metrics
from phishbench.features import extract
from phishbench.modelio import save_model
from phishbench.models import (
    DEFAULT_HP,
    DEFAULT_SCALING,
    comparison_specs,
    default_spec,
    fit,
    fit_decision_tree,
    fit_gaussian_nb,
    fit_linear,
    predict,
)
from phishbench.numerics import SeededRng
from phishbench.schema import FEATURE_NAMES, N_FEATURES
from phishbench.serve import make_server

from test_models import brute_knn, gaussian_pdf, separable_48

ROOT = Path(__file__).resolve().parents[1]
CORPUS = json.loads((Path(__file__).parent / "fixtures" / "corpus.json").read_text())


def published_path() -> Path | None:
    path = Path(os.environ.get("PHISHING_CSV", ROOT / "data" / "Phishing_Legitimate_full.csv"))
    return path if path.exists() else None


def unavailable(record, name):
    msg = "published dataset not found (set PHISHING_CSV); criterion not evaluated"
    record(name, False, msg)
    pytest.xfail(msg)


@pytest.fixture(scope="module")
def published_run():
    """The nine-model comparison on the published dataset, or None."""
    path = published_path()
    if path is None:
        return None
    start = time.perf_counter()
    table = load_csv(path)
    ds = split(table, 0.7, seed=0, stratified=True)
    result = compare(comparison_specs(0), ds)
    return table, ds, result, time.perf_counter() - start


def test_ac1_gradient_fidelity(record_criterion):
    start = time.perf_counter()
    worst = {}
    for kind in neural.PROBE_KINDS:
        errs = [neural.grad_check(*neural.probe_network(kind, SeededRng(1000 + s)), fd_step=1e-5)
                for s in range(20)]
        worst[kind] = max(errs)
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) < 1e-4 and elapsed < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {elapsed:.1f}s"
    record_criterion("AC1 gradient fidelity", ok, detail)
    assert ok, detail


def test_ac2_metric_oracle(record_criterion):
    m = metrics(ConfusionMatrix(tp=1480, fp=9, fn=3, tn=1508))
    want = (0.9960, 0.99396, 0.99798, 0.99596)
    got = (m.accuracy, m.precision, m.recall, m.f1)
    ok = all(abs(g - w) <= 1e-4 for g, w in zip(got, want))
    record_criterion("AC2 metric oracle", ok, " ".join(f"{v:.5f}" for v in got))
    assert ok


def test_ac3_table2_bands(record_criterion, published_run):
    if published_run is None:
        unavailable(record_criterion, "AC3 nine-model accuracy bands")
    _, _, table, elapsed = published_run
    acc = {r.name: (r.metrics.accuracy if not r.failed else 0.0) for r in table.rows}
    checks = {
        "time<15min": elapsed < 900,
        "ann_lstm>=0.96": acc["ann_lstm"] >= 0.96,
        "lr>=0.93": acc["logistic_regression"] >= 0.93,
        "ann>=0.92": acc["ann"] >= 0.92,
        "dt/svm/nb>=0.88": min(acc["decision_tree"], acc["linear_svm"], acc["naive_bayes"]) >= 0.88,
        "ann_lstm>=ann,lstm": acc["ann_lstm"] >= max(acc["ann"], acc["lstm"]),
    }
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    detail = f"{elapsed:.0f}s; " + " ".join(f"{k}={v:.4f}" for k, v in acc.items())
    record_criterion("AC3 nine-model accuracy bands", ok, detail + (f"; failed {failed}" if failed else ""))
    assert ok, detail


def test_ac4_knn_oracle_and_default(record_criterion):
    path = published_path()
    table = load_csv(path) if path else synthesize_table(10_000, seed=0)
    rng = np.random.default_rng(4)
    rows = rng.choice(len(table), 200, replace=False)
    x, y = table.x[rows], table.y[rows]
    train_x, train_y, queries = x[:150], y[:150], x[150:]
    mismatches = 0
    for k in (1, 5, 100):
        model = fit(default_spec("knn", k=k, scaling="none"), (train_x, train_y))
        got = predict(model, queries)
        want = np.array([int(brute_knn(train_x, train_y, q, k) >= 0.5) for q in queries])
        mismatches += int(np.sum(got != want))
    default_ok = DEFAULT_HP["knn"]["k"] == 100 and DEFAULT_SCALING["knn"] == "none"
    ok = mismatches == 0 and default_ok
    source = "published" if path else "surrogate"
    record_criterion("AC4 KNN brute-force oracle and k=100 default", ok,
                     f"{mismatches} mismatches over 3 k values on a 200-row {source} subset")
    assert ok


def test_ac4_knn_trails_best(record_criterion, published_run):
    if published_run is None:
        unavailable(record_criterion, "AC4 KNN trails the best model")
    table = published_run[2]
    best = max(r.metrics.accuracy for r in table.rows if not r.failed)
    knn = table.accuracy("knn")
    ok = knn < best
    record_criterion("AC4 KNN trails the best model", ok, f"knn {knn:.4f} vs best {best:.4f}")
    assert ok


def test_ac5_determinism(record_criterion, tmp_path):
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["compare", "--data", "synthetic:2000", "--seed", "0", "--out", str(out)]) == 0
        outs.append(out)
    same_csv = (outs[0] / "comparison.csv").read_bytes() == (outs[1] / "comparison.csv").read_bytes()
    models = sorted(p.name for p in (outs[0] / "models").iterdir())
    same_models = len(models) == 9 and all(
        (outs[0] / "models" / m).read_bytes() == (outs[1] / "models" / m).read_bytes() for m in models)
    ok = same_csv and same_models
    record_criterion("AC5 determinism", ok,
                     f"nine-model compare twice on a 2000-row surrogate; csv equal {same_csv}, "
                     f"{len(models)} model files equal {same_models}")
    assert ok


def test_ac6_feature_fixtures(record_criterion):
    wrong = []
    for case in CORPUS:
        v = extract(case["url"], case.get("html"), brands=tuple(case.get("brands", ()))).values
        wrong += [f"{case['id']}.{k}" for k, e in case["expect"].items() if abs(v[k] - e) > 1e-12]
    schema_ok = tuple(extract("http://x.com/").values) == FEATURE_NAMES == load_schema_names()
    ok = len(CORPUS) >= 20 and not wrong and schema_ok
    n_values = sum(len(c["expect"]) for c in CORPUS)
    record_criterion("AC6 feature fixtures", ok,
                     f"{len(CORPUS)} fixtures, {n_values} hand values, {len(wrong)} wrong; schema equal {schema_ok}")
    assert ok, wrong


def load_schema_names():
    return RawTable.__dataclass_fields__["columns"].default


def test_ac7_preprocessing(record_criterion):
    path = published_path()
    if path is None:
        unavailable(record_criterion, "AC7 preprocessing on the published dataset")
    table = load_csv(path)
    ds = split(table, 0.7, seed=0, stratified=True)
    sizes = (len(ds.y_train), len(ds.y_test))
    per_class = (int(np.sum(ds.y_train == 0)), int(np.sum(ds.y_train == 1)))
    shifted = table.x.copy()
    shifted[ds.test_idx] += 1e3
    ds2 = split(RawTable(shifted, table.y, table.ids), 0.7, seed=0, stratified=True)
    no_leak = np.array_equal(ds.scaler.center, ds2.scaler.center) and np.array_equal(ds.scaler.scale, ds2.scaler.scale)
    ok = sizes == (7000, 3000) and per_class == (3500, 3500) and no_leak
    record_criterion("AC7 preprocessing on the published dataset", ok,
                     f"sizes {sizes}, train per class {per_class}, no leakage {no_leak}")
    assert ok


def test_ac8_classical_oracles(record_criterion):
    x = np.array([[0.0], [0.1], [1.0], [1.1]])
    nb = fit_gaussian_nb(x, np.array([0, 0, 1, 1]), variance_floor=1e-9)
    nb_err = 0.0
    for q in np.linspace(-0.5, 1.5, 41):
        p0 = 0.5 * gaussian_pdf(q, 0.05, 0.0025)
        p1 = 0.5 * gaussian_pdf(q, 1.05, 0.0025)
        if p0 + p1 > 0:
            nb_err = max(nb_err, abs(nb.proba(np.array([[q]]))[0] - p1 / (p0 + p1)))

    rng = np.random.default_rng(8)
    tx = rng.integers(0, 5, size=(300, 6)).astype(float)
    tx = np.unique(tx, axis=0)
    ty = rng.integers(0, 2, size=len(tx))
    tree = fit_decision_tree(tx, ty)
    tree_acc = float(np.mean((tree.proba(tx) >= 0.5) == ty))

    sx, sy = separable_48(200, seed=8)
    lr = fit_linear(sx, sy, "logistic")
    lr_acc = float(np.mean((lr.proba(sx) >= 0.5) == sy))
    ok = nb_err <= 1e-9 and tree_acc == 1.0 and lr_acc == 1.0
    record_criterion("AC8 classical oracles", ok,
                     f"nb max error {nb_err:.1e}, tree train acc {tree_acc}, lr acc {lr_acc}")
    assert ok


def test_ac9_serve_parity(record_criterion, small_split, tmp_path, capsys):
    model = fit(default_spec("ann_lstm", lstm_hidden=8, epochs=5), small_split)
    path = tmp_path / "m.phfg"
    save_model(model, path)
    server = make_server(model, "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever)
    thread.start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    rng = np.random.default_rng(9)
    mismatches = []
    try:
        with httpx.Client(timeout=30) as client:
            for i in range(50):
                if i % 2:
                    row = small_split.x_test[i] + rng.normal(0, 1, N_FEATURES)
                    body = {"features": row.tolist()}
                    argv = ["predict", str(path), "--row=" + ",".join(repr(float(v)) for v in row)]
                else:
                    url = f"http://{''.join(rng.choice(list('abcxyz0-'), 8))}.example.com/{'login' * (i % 3)}"
                    body = {"url": url}
                    argv = ["predict", str(path), "--url", url]
                served = client.post(base + "/score", json=body).json()
                assert main(argv) == 0
                printed = capsys.readouterr().out.split()
                if f"{served['probability']:.6f}" != printed[0] or str(served["label"]) != printed[1]:
                    mismatches.append((body, served, printed))
    finally:
        server.shutdown()
        server.server_close()
        thread.join(5)
    ok = not mismatches
    record_criterion("AC9 serve parity", ok, f"{50 - len(mismatches)}/50 inputs agree to 6 decimals")
    assert ok, mismatches[:3]
