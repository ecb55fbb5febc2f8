import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phishbench import neural
from phishbench.dataset import fit_scaler
from phishbench.features import extract
from phishbench.models import (
    DEEP_KINDS,
    KINDS,
    ClassifierSpec,
    DecisionTree,
    LinearModel,
    SchemaMismatchError,
    StateError,
    TrainedModel,
    build_ann_lstm_spec,
    build_ann_spec,
    build_lstm_spec,
    build_network,
    comparison_specs,
    default_spec,
    fit,
    fit_decision_tree,
    fit_gaussian_nb,
    fit_linear,
    knn_predict,
    predict,
    predict_proba,
)
from phishbench.numerics import ParameterError, SeededRng
from phishbench.schema import N_FEATURES


def brute_knn(train_x, train_y, query, k):
    """Exhaustive oracle: distances summed in column order, ties to the lower row index."""
    dists = []
    for i, row in enumerate(train_x):
        d = 0.0
        for a, b in zip(query, row):
            d += (a - b) * (a - b)
        dists.append((d, i))
    dists.sort()
    return sum(train_y[i] for _, i in dists[:k]) / k


def separable_48(n=100, seed=0):
    rng = SeededRng(seed)
    y = np.r_[np.zeros(n // 2), np.ones(n - n // 2)].astype(int)
    x = rng.normal((n, N_FEATURES), 0.5) + np.where(y[:, None] == 1, 1.0, -1.0)
    return x, y


# --------------------------------------------------------------------------- specs


def test_ann_spec_shape():
    spec = build_ann_spec()
    net = build_network(spec, N_FEATURES, SeededRng(0))
    widths = [(layer.fan_in, layer.fan_out) for _, layer in net.layers()]
    assert widths == [(48, 64), (64, 32), (32, 1)]
    assert [layer.activation for _, layer in net.layers()] == ["relu", "relu", "sigmoid"]


def test_lstm_spec_shape():
    spec = build_lstm_spec()
    assert spec.hyperparameters["hidden_size"] == 128
    net = build_network(spec, N_FEATURES, SeededRng(0))
    lstm = net.branches[0][0]
    assert lstm.cell.input_size == 1 and lstm.cell.hidden_size == 128
    assert lstm._steps(np.zeros((2, N_FEATURES))).shape == (48, 2, 1)
    assert (net.head[0].fan_in, net.head[0].fan_out) == (128, 1)


def test_build_network_deterministic():
    a = build_network(build_lstm_spec(3), N_FEATURES, SeededRng(3))
    b = build_network(build_lstm_spec(3), N_FEATURES, SeededRng(3))
    assert all(p.tobytes() == q.tobytes() for (_, p), (_, q) in zip(a.parameters(), b.parameters()))


def test_ann_lstm_junction_and_zero_weights():
    net = build_network(build_ann_lstm_spec(), N_FEATURES, SeededRng(0))
    assert net.junction_width == 96
    assert [layer.fan_out for layer in net.branches[0]] == [64, 32]
    assert net.branches[1][0].cell.hidden_size == 64
    for _, arr in net.parameters():
        arr[:] = 0.0
    p = neural.predict_proba(net, SeededRng(1).normal((5, N_FEATURES)))
    assert np.all(p == 0.5)


def test_ann_lstm_reduces_to_dense_branch():
    rng = SeededRng(8)
    net = build_network(build_ann_lstm_spec(), N_FEATURES, rng)
    for name, arr in net.parameters():
        if name.startswith("head") and name.endswith("bias"):
            arr[:] = rng.uniform(-0.3, 0.3, arr.shape)
    net.head[0].weights[32:, :] = 0.0      # LSTM branch's junction weights
    dense_head = neural.DenseLayer(net.head[0].weights[:32].copy(), net.head[0].bias.copy(), "relu")
    reduced = neural.NetworkGraph([net.branches[0]], [dense_head] + net.head[1:])
    x = rng.normal((20, N_FEATURES))
    assert np.array_equal(neural.predict_proba(net, x), neural.predict_proba(reduced, x))


def test_comparison_specs_order():
    assert [s.kind for s in comparison_specs()] == ["ann", "logistic_regression", "decision_tree",
                                               "naive_bayes", "knn", "linear_svm", "lstm",
                                               "bilstm", "ann_lstm"]
    assert default_spec("knn").hyperparameters["k"] == 100
    assert default_spec("knn").scaling == "none"


@pytest.mark.parametrize("kind,hp", [("knn", {"k": 0}), ("decision_tree", {"max_depth": 0}),
                                     ("naive_bayes", {"variance_floor": 0}), ("ann", {"bogus": 1}),
                                     ("logistic_regression", {"lr": -1}), ("ann", {"batch_size": 0})])
def test_spec_validation(kind, hp):
    with pytest.raises(ParameterError):
        default_spec(kind, **hp)


def test_spec_unknown_kind_and_scaling():
    with pytest.raises(ParameterError):
        ClassifierSpec("random_forest")
    with pytest.raises(ParameterError):
        ClassifierSpec("knn", scaling="robust")


def test_spec_dict_round_trip():
    for spec in comparison_specs(5):
        assert ClassifierSpec.from_dict(spec.to_dict()) == spec


# --------------------------------------------------------------------------- decision tree


def test_tree_single_split():
    tree = fit_decision_tree(np.array([[0.0], [1.0]]), np.array([0, 1]))
    assert list(tree.feature) == [0, -1, -1]
    assert tree.threshold[0] == 0.5
    assert np.array_equal(tree.proba(np.array([[0.0], [1.0]])), [0, 1])


def test_tree_pure_labels_single_leaf():
    tree = fit_decision_tree(np.arange(10.0).reshape(5, 2), np.ones(5, int))
    assert list(tree.feature) == [-1]


def test_gini():
    assert DecisionTree.gini(np.array([0, 1, 0, 1])) == 0.5
    assert DecisionTree.gini(np.array([1, 1])) == 0.0


def test_tree_conflicting_rows_majority_leaf():
    x = np.zeros((3, 2))
    tree = fit_decision_tree(x, np.array([1, 1, 0]))
    assert list(tree.feature) == [-1]
    assert tree.proba(x[:1])[0] == pytest.approx(2 / 3)


def test_tree_tie_breaks_to_lowest_feature():
    x = np.array([[0.0, 0.0], [1.0, 1.0]])
    tree = fit_decision_tree(x, np.array([0, 1]))
    assert tree.feature[0] == 0


def test_tree_max_depth():
    x, y = separable_48(60)
    y[::7] ^= 1
    assert fit_decision_tree(x, y, max_depth=2).depth() <= 2


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 60), d=st.integers(1, 4))
def test_tree_fits_conflict_free_data(seed, n, d):
    rng = SeededRng(seed)
    x = rng.integers(0, 5, (n, d)).astype(float)
    x, first = np.unique(x, axis=0, return_index=True)
    y = rng.integers(0, 2, len(x))
    tree = fit_decision_tree(x, y)
    assert np.array_equal(tree.proba(x) >= 0.5, y == 1)


# --------------------------------------------------------------------------- knn


def knn_model(train_x, train_y, k):
    return fit(default_spec("knn", k=k), (train_x, train_y))


def test_knn_toy():
    x = np.array([[0, 0]] * 3 + [[1, 1]] * 3, float)
    y = np.array([0, 0, 0, 1, 1, 1])
    model = knn_model(x, y, 3)
    assert knn_predict(model, [0.1, 0.0]) == 0.0
    assert knn_predict(model, [1.0, 1.0], k=1) == 1.0


def test_knn_tie_break_lower_index():
    x = np.array([[1.0], [-1.0]])
    model = knn_model(x, np.array([1, 0]), 1)
    assert knn_predict(model, [0.0]) == 1.0


def test_knn_k_too_large():
    with pytest.raises(ParameterError):
        knn_model(np.zeros((3, 1)), np.array([0, 1, 0]), 4)
    model = knn_model(np.zeros((3, 1)), np.array([0, 1, 0]), 2)
    with pytest.raises(ParameterError):
        knn_predict(model, [0.0], k=5)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 15))
def test_knn_matches_brute_force(seed, k):
    rng = SeededRng(seed)
    x = np.round(rng.normal((40, 3)), 1)          # rounding forces distance ties
    y = rng.integers(0, 2, 40)
    q = np.round(rng.normal((10, 3)), 1)
    model = knn_model(x, y, k)
    got = predict_proba(model, q, schema_fingerprint=model.fingerprint)
    want = [brute_knn(x.tolist(), y.tolist(), row.tolist(), k) for row in q]
    assert got.tolist() == want


# --------------------------------------------------------------------------- naive bayes


def gaussian_pdf(x, mu, var):
    return math.exp(-(x - mu) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)


def test_nb_hand_posteriors():
    x = np.array([[0.0], [0.1], [1.0], [1.1]])
    y = np.array([0, 0, 1, 1])
    nb = fit_gaussian_nb(x, y, variance_floor=1e-9)
    for q in (0.05, 0.5, 0.6, 0.62, 1.0):
        p0 = 0.5 * gaussian_pdf(q, 0.05, 0.0025)
        p1 = 0.5 * gaussian_pdf(q, 1.05, 0.0025)
        assert nb.proba(np.array([[q]]))[0] == pytest.approx(p1 / (p0 + p1), abs=1e-9)
    assert nb.proba(np.array([[0.05]]))[0] < 0.5


def test_nb_symmetric_midpoint():
    x = np.array([[-1.0], [-2.0], [1.0], [2.0]])
    nb = fit_gaussian_nb(x, np.array([0, 0, 1, 1]))
    assert nb.proba(np.array([[0.0]]))[0] == pytest.approx(0.5, abs=1e-9)


def test_nb_zero_variance_floored():
    x = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 5.0], [1.0, 6.0]])
    nb = fit_gaussian_nb(x, np.array([0, 0, 1, 1]), variance_floor=1e-3)
    assert nb.variances.min() == 1e-3
    assert np.all(np.isfinite(nb.proba(x)))


def test_nb_single_class():
    nb = fit_gaussian_nb(np.ones((3, 2)), np.ones(3, int))
    assert nb.priors[1] == 1.0
    assert np.all(nb.proba(np.zeros((2, 2))) == 1.0)


# --------------------------------------------------------------------------- linear


def test_logistic_gradient_at_zero():
    m = LinearModel("logistic", np.zeros(1), 0.0)
    gw, gb = m.gradient(np.array([[2.0]]), np.array([1.0]), l2=0.0)
    assert gw[0] == pytest.approx(-1.0) and gb == pytest.approx(-0.5)


@pytest.mark.parametrize("loss", ["logistic", "hinge"])
def test_linear_separable_1d(loss):
    x = np.array([[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    m = fit_linear(x, y, loss)
    assert np.array_equal(m.proba(x) >= 0.5, y == 1)


def test_l2_shrinks_weights():
    x, y = separable_48(80)
    norms = [np.linalg.norm(fit_linear(x, y, "logistic", epochs=200, l2=lam).w) for lam in (0, 0.1, 1, 5)]
    assert all(a > b for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 0.3 * norms[0]


# --------------------------------------------------------------------------- contract


def test_threshold_boundary_is_inclusive():
    model = TrainedModel(default_spec("logistic_regression"), LinearModel("logistic", np.zeros(N_FEATURES), 0.0),
                         fit_scaler(np.zeros((2, N_FEATURES)), "none"))
    assert predict_proba(model, np.zeros(N_FEATURES))[0] == 0.5
    assert predict(model, np.zeros(N_FEATURES))[0] == 1


def test_unfitted_model():
    with pytest.raises(StateError):
        predict_proba(TrainedModel(default_spec("knn")), np.zeros(N_FEATURES))


def test_schema_mismatch():
    x, y = separable_48(40)
    model = fit(default_spec("naive_bayes"), (x, y))
    with pytest.raises(SchemaMismatchError):
        predict_proba(model, x, schema_fingerprint="0" * 64)
    with pytest.raises(SchemaMismatchError):
        predict_proba(model, x[:, :47])
    narrow = fit(default_spec("naive_bayes"), (x[:, :5], y))
    with pytest.raises(SchemaMismatchError):
        predict_proba(narrow, x)


def test_feature_vector_input():
    x, y = separable_48(40)
    model = fit(default_spec("logistic_regression"), (x, y))
    fv = extract("http://192.0.2.7/login")
    p = predict_proba(model, fv)
    assert p.shape == (1,) and 0 <= p[0] <= 1


def test_fit_rejects_missing_values():
    x, y = separable_48(20)
    x[3, 4] = np.nan
    with pytest.raises(ParameterError):
        fit(default_spec("naive_bayes"), (x, y))


@pytest.mark.parametrize("kind", KINDS)
def test_all_kinds_on_separable_set(kind):
    x, y = separable_48(100)
    hp = {"k": 5} if kind == "knn" else {}
    model = fit(default_spec(kind, seed=1, **hp), (x, y))
    p = predict_proba(model, x)
    assert np.all((p >= 0) & (p <= 1))
    assert np.array_equal(predict(model, x), (p >= 0.5).astype(int))
    assert np.mean(predict(model, x) == y) >= 0.9
    if kind in DEEP_KINDS:
        assert len(model.meta["loss_curve"]) == 50
