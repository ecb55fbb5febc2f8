"""CSV ingestion, preprocessing, the stratified 70/30 split and feature scaling."""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import SeededRng
from .schema import FEATURE_NAMES, ID_COLUMN, LABEL_COLUMN, N_FEATURES

SCALING_MODES = ("standard", "minmax", "none")
STD_FLOOR = 1e-12


class SchemaError(ValueError):
    pass


class DataParseError(ValueError):
    def __init__(self, message: str, row: int, column: str):
        super().__init__(f"{message} at row {row}, column {column!r}")
        self.row = row
        self.column = column


@dataclass
class RawTable:
    """Features in canonical column order; ``x`` may hold NaN for blank cells."""

    x: np.ndarray
    y: np.ndarray
    ids: np.ndarray
    columns: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        if self.x.shape != (len(self.y), len(self.columns)):
            raise SchemaError(f"table is {self.x.shape}, expected ({len(self.y)}, {len(self.columns)})")
        if len(self.y) and not np.all((self.y == 0) | (self.y == 1)):
            raise SchemaError("labels must be 0 or 1")

    def __len__(self):
        return len(self.y)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for arr in (self.ids.astype("<i8"), self.x.astype("<f8"), self.y.astype("<i8")):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def subset(self, rows) -> "RawTable":
        rows = np.asarray(rows)
        return RawTable(self.x[rows], self.y[rows], self.ids[rows], self.columns)


def _number(cell: str, row: int, column: str) -> float:
    text = cell.strip()
    if text == "" or text.lower() in ("nan", "na", "null"):
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise DataParseError(f"non-numeric value {cell!r}", row, column) from None
    if math.isinf(value):
        raise DataParseError(f"infinite value {cell!r}", row, column)
    return value


def _label(cell: str, row: int) -> int:
    text = cell.strip().lower()
    if text in ("phishing", "phish"):
        return 1
    if text in ("legitimate", "legit"):
        return 0
    value = _number(cell, row, LABEL_COLUMN)
    if value not in (0.0, 1.0):
        raise DataParseError(f"label {cell!r} is not 0 or 1", row, LABEL_COLUMN)
    return int(value)


def load_csv(path) -> RawTable:
    """Read the dataset CSV, validating the header against the 48-feature schema.

    Column order in the file is free; names must match exactly.  Rows are
    numbered from 1 (the header is row 0) in error messages.
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        expected = set(FEATURE_NAMES) | {ID_COLUMN, LABEL_COLUMN}
        missing = sorted(expected - set(header))
        extra = sorted(set(header) - expected)
        dupes = sorted({h for h in header if header.count(h) > 1})
        if missing or extra or dupes:
            raise SchemaError(f"{path}: header mismatch; missing={missing} extra={extra} duplicated={dupes}")
        pos = {name: header.index(name) for name in header}
        feat_pos = [pos[n] for n in FEATURE_NAMES]
        xs, ys, ids = [], [], []
        for r, cells in enumerate(reader, start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise DataParseError(f"expected {len(header)} cells, found {len(cells)}", r, "*")
            xs.append([_number(cells[j], r, header[j]) for j in feat_pos])
            ys.append(_label(cells[pos[LABEL_COLUMN]], r))
            id_val = _number(cells[pos[ID_COLUMN]], r, ID_COLUMN)
            ids.append(r if math.isnan(id_val) else int(id_val))
    x = np.array(xs, dtype=np.float64).reshape(len(xs), N_FEATURES)
    return RawTable(x, np.array(ys, dtype=np.int64), np.array(ids, dtype=np.int64))


def write_csv(table: RawTable, path) -> None:
    """Write ``table`` in the published layout: id, 48 features, label."""
    def cell(v: float) -> str:
        if math.isnan(v):
            return ""
        return str(int(v)) if v.is_integer() else repr(float(v))

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow((ID_COLUMN,) + FEATURE_NAMES + (LABEL_COLUMN,))
        for i in range(len(table)):
            row = [cell(float(v)) for v in table.x[i]]
            w.writerow([int(table.ids[i])] + row + [int(table.y[i])])


def missing_report(table: RawTable) -> dict[str, int]:
    counts = np.isnan(table.x).sum(axis=0) if len(table) else np.zeros(len(table.columns), int)
    return {name: int(c) for name, c in zip(table.columns, counts)}


# --------------------------------------------------------------------------- scaling


@dataclass
class ScalerStats:
    mode: str
    center: np.ndarray
    scale: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.center) / self.scale

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.scale + self.center


def fit_scaler(train_x: np.ndarray, mode: str = "standard") -> ScalerStats:
    """Per-feature statistics from training rows only; spreads are floored at 1e-12."""
    train_x = np.asarray(train_x, dtype=np.float64)
    if train_x.shape[0] == 0:
        raise ValueError("cannot fit a scaler on zero rows")
    d = train_x.shape[1]
    if mode == "standard":
        center = train_x.mean(axis=0)
        scale = train_x.std(axis=0)
    elif mode == "minmax":
        center = train_x.min(axis=0)
        scale = train_x.max(axis=0) - center
    elif mode == "none":
        center, scale = np.zeros(d), np.ones(d)
    else:
        raise ValueError(f"unknown scaling mode {mode!r}; expected one of {SCALING_MODES}")
    return ScalerStats(mode, center, np.maximum(scale, STD_FLOOR))


def apply_scaler(stats: ScalerStats, x: np.ndarray) -> np.ndarray:
    return stats.transform(x)


# --------------------------------------------------------------------------- splitting


@dataclass
class SplitDataset:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int
    ratio: float
    stratified: bool = True
    scaler: ScalerStats | None = None
    scalers: dict = field(default_factory=dict, repr=False)

    def scaler_for(self, mode: str) -> ScalerStats:
        if mode not in self.scalers:
            self.scalers[mode] = fit_scaler(self.x_train, mode)
        return self.scalers[mode]

    def content_hash(self) -> str:
        h = hashlib.sha256(f"{self.seed}:{self.ratio!r}:{self.stratified}".encode())
        for arr in (self.train_idx, self.test_idx):
            h.update(np.ascontiguousarray(arr.astype("<i8")).tobytes())
        for arr in (self.x_train, self.x_test):
            h.update(np.ascontiguousarray(arr.astype("<f8")).tobytes())
        for arr in (self.y_train, self.y_test):
            h.update(np.ascontiguousarray(arr.astype("<i8")).tobytes())
        return h.hexdigest()


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def split(table: RawTable, ratio: float = 0.7, seed: int = 0, stratified: bool = True,
          scaling: str = "standard") -> SplitDataset:
    """Seeded train/test partition; per-class when ``stratified``."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie strictly between 0 and 1, got {ratio}")
    rng = SeededRng(seed)
    n = len(table)
    if stratified:
        train_parts, test_parts = [], []
        for cls in (0, 1):
            members = np.flatnonzero(table.y == cls)
            if len(members) == 0:
                continue
            if len(members) < 2:
                raise ValueError(f"class {cls} has {len(members)} row(s); stratification needs >= 2")
            members = members[rng.permutation(len(members))]
            k = _round_half_up(ratio * len(members))
            train_parts.append(members[:k])
            test_parts.append(members[k:])
        train_idx = np.concatenate(train_parts)
        test_idx = np.concatenate(test_parts)
    else:
        order = rng.permutation(n)
        k = _round_half_up(ratio * n)
        train_idx, test_idx = order[:k], order[k:]
    ds = SplitDataset(
        x_train=table.x[train_idx], y_train=table.y[train_idx],
        x_test=table.x[test_idx], y_test=table.y[test_idx],
        train_idx=train_idx, test_idx=test_idx,
        seed=seed, ratio=ratio, stratified=stratified,
    )
    if len(train_idx):
        ds.scaler = ds.scaler_for(scaling)
    return ds


# --------------------------------------------------------------------------- surrogate data


def synthesize_table(n: int = 10_000, seed: int = 0, label_noise: float = 0.03) -> RawTable:
    """Synthetic stand-in for the published dataset (NOT real websites).

    Half the rows are phishing.  Raw features are drawn from class-conditional
    distributions loosely shaped like the published columns, and the rule-term
    columns are derived from them with the extractor's own thresholds.  A
    fraction ``label_noise`` of each class is swapped with the other class's
    feature rows, so no model is perfect while the classes stay balanced.
    """
    from .features import FeatureVector, derive_rt_features

    rng = SeededRng(seed)
    y = np.zeros(n, dtype=np.int64)
    y[: n // 2] = 1
    g = rng._gen
    rows = []
    for i in range(n):
        p = bool(y[i])

        def pois(legit, phish):
            return float(g.poisson(phish if p else legit))

        def flag(legit, phish):
            return float(g.random() < (phish if p else legit))

        sub = pois(0.6, 1.2)
        path_level = pois(2.0, 3.5)
        host_len = float(max(4, round(g.normal(22 if p else 15, 6))))
        path_len = float(max(0, round(g.normal(45 if p else 30, 18))))
        query_len = float(max(0, round(g.exponential(12 if p else 6))))
        qcomp = float(g.poisson(query_len / 10.0)) if query_len else 0.0
        url_len = 8 + host_len + path_len + query_len + (1 if query_len else 0)
        v = dict.fromkeys(FEATURE_NAMES, 0.0)
        v.update({
            "NumDots": sub + 1 + pois(0.6, 1.2),
            "SubdomainLevel": sub,
            "PathLevel": path_level,
            "UrlLength": url_len,
            "NumDash": pois(0.8, 2.2),
            "NumDashInHostname": pois(0.1, 0.5),
            "AtSymbol": flag(0.003, 0.03),
            "TildeSymbol": flag(0.02, 0.02),
            "NumUnderscore": pois(0.3, 0.5),
            "NumPercent": pois(0.05, 0.1),
            "NumQueryComponents": qcomp,
            "NumAmpersand": max(0.0, qcomp - 1),
            "NumHash": flag(0.005, 0.01),
            "NumNumericChars": pois(3.0, 7.0),
            "NoHttps": flag(0.98, 0.99),
            "RandomString": flag(0.5, 0.55),
            "IpAddress": flag(0.005, 0.03),
            "DomainInSubdomains": flag(0.02, 0.06),
            "DomainInPaths": flag(0.3, 0.5),
            "HttpsInHostname": flag(0.0, 0.002),
            "HostnameLength": host_len,
            "PathLength": path_len,
            "QueryLength": query_len,
            "DoubleSlashInPath": flag(0.0, 0.004),
            "NumSensitiveWords": pois(0.02, 0.15),
            "EmbeddedBrandName": flag(0.05, 0.1),
            "PctExtHyperlinks": float(g.beta(1, 3) if p else g.beta(1, 2)),
            "PctExtResourceUrls": float(g.beta(1.2, 2) if p else g.beta(2, 2)),
            "ExtFavicon": flag(0.35, 0.1),
            "InsecureForms": flag(0.9, 0.75),
            "RelativeFormAction": flag(0.3, 0.25),
            "ExtFormAction": flag(0.05, 0.01),
            "AbnormalFormAction": flag(0.03, 0.08),
            "PctNullSelfRedirectHyperlinks": float(g.beta(0.4, 3) if p else g.beta(0.3, 6)),
            "FrequentDomainNameMismatch": flag(0.35, 0.12),
            "FakeLinkInStatusBar": flag(0.01, 0.01),
            "RightClickDisabled": flag(0.01, 0.02),
            "PopUpWindow": flag(0.05, 0.03),
            "SubmitInfoToEmail": flag(0.05, 0.3),
            "IframeOrFrame": flag(0.45, 0.25),
            "MissingTitle": flag(0.01, 0.05),
            "ImagesOnlyInForm": flag(0.01, 0.05),
        })
        aux = {
            "pct_ext_meta_script_link": float(g.beta(2, 2) if p else g.beta(2, 3)),
            "pct_ext_null_self_anchors": min(1.0, v["PctExtHyperlinks"] + v["PctNullSelfRedirectHyperlinks"]),
            "abnormal_form_action": v["AbnormalFormAction"],
            "ext_form_action": v["ExtFormAction"],
        }
        rows.append(derive_rt_features(FeatureVector(v, aux=aux)).as_array())
    x = np.vstack(rows)
    # Swap equal numbers of rows across classes: noisy labels, exact class balance.
    m = int(label_noise * min(n // 2, n - n // 2))
    pos = np.flatnonzero(y == 1)[rng.permutation(n // 2)[:m]]
    neg = np.flatnonzero(y == 0)[rng.permutation(n - n // 2)[:m]]
    x[pos], x[neg] = x[neg].copy(), x[pos].copy()
    return RawTable(x, y.astype(np.int64), np.arange(1, n + 1, dtype=np.int64))
