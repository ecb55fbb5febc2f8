import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phishbench.dataset import (
    DataParseError,
    RawTable,
    SchemaError,
    apply_scaler,
    fit_scaler,
    load_csv,
    missing_report,
    split,
    synthesize_table,
    write_csv,
)
from phishbench.schema import FEATURE_NAMES, ID_COLUMN, LABEL_COLUMN, N_FEATURES


def write_rows(path, header, rows):
    path.write_text("\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n")


def table_of(n, seed=0, pos=None):
    rng = np.random.default_rng(seed)
    pos = n // 2 if pos is None else pos
    y = np.r_[np.ones(pos), np.zeros(n - pos)].astype(np.int64)
    return RawTable(rng.normal(size=(n, N_FEATURES)), y, np.arange(1, n + 1))


def test_csv_round_trip(tmp_path, small_table):
    path = tmp_path / "t.csv"
    write_csv(small_table, path)
    back = load_csv(path)
    assert back.content_hash() == small_table.content_hash()


def test_header_order_insensitive(tmp_path):
    header = [LABEL_COLUMN] + list(reversed(FEATURE_NAMES)) + [ID_COLUMN]
    row = [1] + list(range(N_FEATURES, 0, -1)) + [7]
    write_rows(tmp_path / "t.csv", header, [row])
    t = load_csv(tmp_path / "t.csv")
    assert t.x[0].tolist() == list(range(1, N_FEATURES + 1))
    assert t.y.tolist() == [1] and t.ids.tolist() == [7]


def test_missing_label_column(tmp_path):
    write_rows(tmp_path / "t.csv", [ID_COLUMN] + list(FEATURE_NAMES), [[1] + [0] * N_FEATURES])
    with pytest.raises(SchemaError, match=LABEL_COLUMN):
        load_csv(tmp_path / "t.csv")


def test_extra_column(tmp_path):
    header = [ID_COLUMN] + list(FEATURE_NAMES) + [LABEL_COLUMN, "Bogus"]
    write_rows(tmp_path / "t.csv", header, [[1] + [0] * N_FEATURES + [0, 0]])
    with pytest.raises(SchemaError, match="Bogus"):
        load_csv(tmp_path / "t.csv")


def test_non_numeric_cell(tmp_path):
    header = [ID_COLUMN] + list(FEATURE_NAMES) + [LABEL_COLUMN]
    rows = [[1] + [0] * N_FEATURES + [0], [2] + [0] * N_FEATURES + [1]]
    rows[1][1 + FEATURE_NAMES.index("UrlLength")] = "abc"
    write_rows(tmp_path / "t.csv", header, rows)
    with pytest.raises(DataParseError) as err:
        load_csv(tmp_path / "t.csv")
    assert err.value.row == 2 and err.value.column == "UrlLength"


def test_bad_label(tmp_path):
    header = [ID_COLUMN] + list(FEATURE_NAMES) + [LABEL_COLUMN]
    write_rows(tmp_path / "t.csv", header, [[1] + [0] * N_FEATURES + [3]])
    with pytest.raises(DataParseError):
        load_csv(tmp_path / "t.csv")


def test_missing_report(tmp_path):
    header = [ID_COLUMN] + list(FEATURE_NAMES) + [LABEL_COLUMN]
    rows = [[1] + [0] * N_FEATURES + [0], [2] + [0] * N_FEATURES + [1]]
    rows[0][1 + FEATURE_NAMES.index("NumDash")] = ""
    write_rows(tmp_path / "t.csv", header, rows)
    report = missing_report(load_csv(tmp_path / "t.csv"))
    assert report["NumDash"] == 1 and sum(report.values()) == 1


def test_missing_report_empty_and_clean(small_table):
    empty = RawTable(np.zeros((0, N_FEATURES)), np.zeros(0, int), np.zeros(0, int))
    assert set(missing_report(empty).values()) == {0}
    assert set(missing_report(small_table).values()) == {0}


def test_split_sizes():
    ds = split(table_of(10_000), 0.7, seed=0)
    assert (len(ds.y_train), len(ds.y_test)) == (7000, 3000)
    assert (ds.y_train == 1).sum() == 3500 and (ds.y_train == 0).sum() == 3500


def test_split_deterministic_and_seed_sensitive():
    t = table_of(300)
    a, b, c = split(t, seed=5), split(t, seed=5), split(t, seed=6)
    assert a.content_hash() == b.content_hash()
    assert a.content_hash() != c.content_hash()


def test_split_errors():
    with pytest.raises(ValueError):
        split(table_of(10), ratio=1.0)
    with pytest.raises(ValueError):
        split(table_of(10, pos=1), ratio=0.7)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(4, 200), ratio=st.floats(0.05, 0.95), seed=st.integers(0, 2**32 - 1),
       stratified=st.booleans())
def test_split_is_partition(n, ratio, seed, stratified):
    t = table_of(n, seed % 97, pos=max(2, n // 3))
    ds = split(t, ratio, seed, stratified=stratified)
    both = np.concatenate([ds.train_idx, ds.test_idx])
    assert sorted(both.tolist()) == list(range(n))
    if not stratified:
        assert len(ds.train_idx) == int(np.floor(ratio * n + 0.5))


def test_scaler_no_leakage():
    t = table_of(200)
    ds = split(t, seed=1)
    t2 = RawTable(t.x.copy(), t.y, t.ids)
    t2.x[ds.test_idx] += 1000.0
    ds2 = split(t2, seed=1)
    assert np.array_equal(ds.scaler.center, ds2.scaler.center)
    assert np.array_equal(ds.scaler.scale, ds2.scaler.scale)


def test_standardize_example():
    s = fit_scaler(np.array([[1.0], [2.0], [3.0]]))
    assert apply_scaler(s, np.array([[1.0], [2.0], [3.0]]))[:, 0] == pytest.approx([-1.2247449, 0, 1.2247449])


def test_constant_feature_zero():
    s = fit_scaler(np.full((4, 2), 7.0))
    assert not s.transform(np.full((4, 2), 7.0)).any()


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), mode=st.sampled_from(["standard", "minmax", "none"]))
def test_scaler_properties(seed, mode):
    rng = np.random.default_rng(seed)
    x = rng.normal(3.0, 5.0, size=(30, 4))
    x[:, 3] = 2.0
    s = fit_scaler(x, mode)
    z = s.transform(x)
    assert np.max(np.abs(s.inverse(z) - x)) < 1e-9
    if mode == "standard":
        assert np.max(np.abs(z.mean(axis=0))) < 1e-9
        assert np.allclose(z[:, :3].std(axis=0), 1.0)
    if mode == "minmax":
        assert z[:, :3].min() >= 0 and z[:, :3].max() <= 1 + 1e-12


def test_unknown_scaling_mode():
    with pytest.raises(ValueError):
        fit_scaler(np.zeros((2, 2)), "robust")


def test_surrogate_balanced_and_deterministic():
    a, b = synthesize_table(1000, seed=2), synthesize_table(1000, seed=2)
    assert a.content_hash() == b.content_hash()
    assert (a.y == 1).sum() == 500
