"""Tree-ensemble classifiers built from scratch.

Three families plus a constant baseline:

* cart        -- a single exact-split decision tree (Gini impurity,
                 midpoint thresholds).
* extra_trees -- extremely randomized trees: per split, sqrt(W) candidate
                 features with one uniformly random threshold each; leaves
                 vote, votes are averaged.
* hist_gbdt   -- gradient boosting on depth-limited regression trees over
                 equal-frequency feature histograms, logistic loss with a
                 positive-class weight, Newton leaf values.

Internally, duplicate feature rows are collapsed to unique rows with
multiplicity weights before tree construction; this is an exact
equivalence (trees only observe feature values) and makes training on
cycled pairwise suites cheap.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from shapegate.stats import EvalReport, confusion, precision_recall

FAMILIES = ("cart", "extra_trees", "hist_gbdt", "majority_baseline")

MODEL_FORMAT_VERSION = 1
_LAMBDA = 1.0  # L2 regularization on boosting leaf values
_MIN_GAIN = 1e-7


class TrainError(Exception):
    pass


class PredictError(Exception):
    pass


class CVError(Exception):
    pass


class LeaderboardError(Exception):
    pass


class ModelIOError(Exception):
    pass


@dataclass(frozen=True)
class TrainConfig:
    family: str
    n_trees: int = 1
    max_depth: Optional[int] = None
    learning_rate: float = 0.1
    n_bins: int = 32
    min_samples_leaf: int = 1
    feature_subsample: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")


def default_config(family: str, seed: int = 0) -> TrainConfig:
    if family == "cart":
        return TrainConfig("cart", n_trees=1, max_depth=12, min_samples_leaf=2, seed=seed)
    if family == "extra_trees":
        return TrainConfig(
            "extra_trees", n_trees=100, max_depth=None, min_samples_leaf=2, seed=seed
        )
    if family == "hist_gbdt":
        return TrainConfig(
            "hist_gbdt",
            n_trees=200,
            max_depth=6,
            learning_rate=0.1,
            n_bins=32,
            min_samples_leaf=5,
            seed=seed,
        )
    if family == "majority_baseline":
        return TrainConfig("majority_baseline", seed=seed)
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# Flat tree representation


class FlatTree:
    """Array-backed binary tree. feature == -1 marks a leaf; split predicate
    is x[feature] <= threshold."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.feature)

    def predict(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        idx = np.zeros(n, dtype=np.int32)
        while True:
            feat = self.feature[idx]
            active = feat >= 0
            if not active.any():
                break
            rows = np.flatnonzero(active)
            node = idx[rows]
            xi = X[rows, self.feature[node]]
            go_left = xi <= self.threshold[node]
            idx[rows] = np.where(go_left, self.left[node], self.right[node])
        return self.value[idx]

    def to_nested(self, node: int = 0) -> dict:
        if self.feature[node] < 0:
            return {"leaf": float(self.value[node])}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_nested(int(self.left[node])),
            "right": self.to_nested(int(self.right[node])),
        }

    @staticmethod
    def from_nested(obj: dict) -> "FlatTree":
        feature: List[int] = []
        threshold: List[float] = []
        left: List[int] = []
        right: List[int] = []
        value: List[float] = []

        def add(o: dict) -> int:
            i = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            if "leaf" in o:
                value[i] = float(o["leaf"])
            else:
                feature[i] = int(o["feature"])
                threshold[i] = float(o["threshold"])
                left[i] = add(o["left"])
                right[i] = add(o["right"])
            return i

        add(obj)
        return FlatTree(feature, threshold, left, right, value)


class _TreeBuilder:
    """Append-only node store used during construction."""

    def __init__(self):
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []

    def new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def make_split(self, node: int, feature: int, threshold: float) -> Tuple[int, int]:
        l, r = self.new_node(), self.new_node()
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = l
        self.right[node] = r
        return l, r

    def make_leaf(self, node: int, value: float) -> None:
        self.value[node] = float(value)

    def build(self) -> FlatTree:
        return FlatTree(self.feature, self.threshold, self.left, self.right, self.value)


# ---------------------------------------------------------------------------
# Model


@dataclass
class TrainedModel:
    family: str
    trees: List[FlatTree]
    tree_weight: float
    bias: float
    threshold: float = 0.5
    schema_hash: str = ""
    n_features: int = 0
    meta: Dict[str, object] = field(default_factory=dict)

    def scores(self, X: np.ndarray) -> np.ndarray:
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise PredictError(
                f"feature width mismatch: got {X.shape[1] if X.ndim == 2 else '?'}, "
                f"expected {self.n_features}"
            )
        if X.shape[0] == 0:
            return np.zeros(0, dtype=np.float64)
        raw = np.zeros(X.shape[0], dtype=np.float64)
        for t in self.trees:
            raw += t.predict(X)
        if self.family == "hist_gbdt":
            margin = self.bias + self.tree_weight * raw
            return 1.0 / (1.0 + np.exp(-margin))
        return self.bias + self.tree_weight * raw


def predict_batch(model: TrainedModel, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    scores = model.scores(np.asarray(X, dtype=np.float64))
    labels = (scores >= model.threshold).astype(np.int8)
    return labels, scores


# ---------------------------------------------------------------------------
# Shared split machinery (weighted unique rows)


def _collapse(X: np.ndarray, y: np.ndarray):
    Xy = np.column_stack([X, y.astype(np.float64)])
    _, first_idx, counts = np.unique(
        Xy, axis=0, return_index=True, return_counts=True
    )
    Xu = X[first_idx]
    yu = y[first_idx]
    return Xu, yu.astype(np.float64), counts.astype(np.float64)


def _gini_best_threshold_exact(
    x: np.ndarray, wy: np.ndarray, w: np.ndarray, min_leaf: float
) -> Tuple[float, float]:
    """Best exact Gini split on one feature. Returns (gain, threshold);
    gain < 0 means no admissible split."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    cw = np.cumsum(w[order])
    cwy = np.cumsum(wy[order])
    total_w, total_wy = cw[-1], cwy[-1]
    cut = np.flatnonzero(xs[:-1] < xs[1:])
    if len(cut) == 0:
        return -1.0, 0.0
    wl = cw[cut]
    wyl = cwy[cut]
    wr = total_w - wl
    wyr = total_wy - wyl
    ok = (wl >= min_leaf) & (wr >= min_leaf)
    if not ok.any():
        return -1.0, 0.0
    parent = total_w - (total_wy**2 + (total_w - total_wy) ** 2) / total_w
    child = (
        wl
        - (wyl**2 + (wl - wyl) ** 2) / wl
        + wr
        - (wyr**2 + (wr - wyr) ** 2) / wr
    )
    gain = np.where(ok, parent - child, -np.inf)
    best = int(np.argmax(gain))
    thr = (xs[cut[best]] + xs[cut[best] + 1]) / 2.0
    return float(gain[best]), float(thr)


def _build_cart(
    Xu: np.ndarray, yu: np.ndarray, w: np.ndarray, cfg: TrainConfig
) -> FlatTree:
    builder = _TreeBuilder()
    wy = yu * w
    min_leaf = float(cfg.min_samples_leaf)

    def grow(node: int, rows: np.ndarray, depth: int) -> None:
        ww = w[rows]
        wwy = wy[rows]
        total_w = float(ww.sum())
        total_wy = float(wwy.sum())
        prob = total_wy / total_w
        if (
            (cfg.max_depth is not None and depth >= cfg.max_depth)
            or prob == 0.0
            or prob == 1.0
            or total_w < 2 * min_leaf
        ):
            builder.make_leaf(node, prob)
            return
        best_gain, best_feat, best_thr = _MIN_GAIN, -1, 0.0
        for f in range(Xu.shape[1]):
            gain, thr = _gini_best_threshold_exact(Xu[rows, f], wwy, ww, min_leaf)
            if gain > best_gain:
                best_gain, best_feat, best_thr = gain, f, thr
        if best_feat < 0:
            builder.make_leaf(node, prob)
            return
        go_left = Xu[rows, best_feat] <= best_thr
        l, r = builder.make_split(node, best_feat, best_thr)
        grow(l, rows[go_left], depth + 1)
        grow(r, rows[~go_left], depth + 1)

    grow(builder.new_node(), np.arange(len(Xu)), 0)
    return builder.build()


def _build_extra_tree(
    Xu: np.ndarray,
    yu: np.ndarray,
    w: np.ndarray,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> FlatTree:
    builder = _TreeBuilder()
    wy = yu * w
    n_feat = Xu.shape[1]
    k = max(1, int(round(math.sqrt(n_feat))))
    min_leaf = float(cfg.min_samples_leaf)

    def grow(node: int, rows: np.ndarray, depth: int) -> None:
        ww = w[rows]
        wwy = wy[rows]
        total_w = float(ww.sum())
        prob = float(wwy.sum()) / total_w
        if (
            (cfg.max_depth is not None and depth >= cfg.max_depth)
            or prob == 0.0
            or prob == 1.0
            or total_w < 2 * min_leaf
        ):
            builder.make_leaf(node, 1.0 if prob >= 0.5 else 0.0)
            return
        feats = rng.choice(n_feat, size=min(k, n_feat), replace=False)
        best_gain, best_feat, best_thr = 0.0, -1, 0.0
        parent = total_w - (
            (wwy.sum()) ** 2 + (total_w - wwy.sum()) ** 2
        ) / total_w
        for f in feats:
            col = Xu[rows, f]
            lo, hi = float(col.min()), float(col.max())
            if lo == hi:
                continue
            thr = float(rng.uniform(lo, hi))
            go_left = col <= thr
            wl = float(ww[go_left].sum())
            wr = total_w - wl
            if wl < min_leaf or wr < min_leaf:
                continue
            wyl = float(wwy[go_left].sum())
            wyr = float(wwy.sum()) - wyl
            child = (
                wl
                - (wyl**2 + (wl - wyl) ** 2) / wl
                + wr
                - (wyr**2 + (wr - wyr) ** 2) / wr
            )
            gain = parent - child
            if gain > best_gain:
                best_gain, best_feat, best_thr = gain, int(f), thr
        if best_feat < 0:
            builder.make_leaf(node, 1.0 if prob >= 0.5 else 0.0)
            return
        go_left = Xu[rows, best_feat] <= best_thr
        l, r = builder.make_split(node, best_feat, best_thr)
        grow(l, rows[go_left], depth + 1)
        grow(r, rows[~go_left], depth + 1)

    grow(builder.new_node(), np.arange(len(Xu)), 0)
    return builder.build()


# ---------------------------------------------------------------------------
# Histogram GBDT


def _bin_edges(col: np.ndarray, n_bins: int) -> np.ndarray:
    uniq = np.unique(col)
    if len(uniq) <= 1:
        return np.empty(0, dtype=np.float64)
    if len(uniq) <= n_bins:
        return (uniq[:-1] + uniq[1:]) / 2.0
    qs = np.quantile(col, np.linspace(0, 1, n_bins + 1)[1:-1])
    return np.unique(qs)


def _build_gbdt_tree(
    codes: np.ndarray,
    edges: List[np.ndarray],
    g: np.ndarray,
    h: np.ndarray,
    counts: np.ndarray,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> Tuple[FlatTree, np.ndarray]:
    """One boosting round. Returns the tree and the per-row leaf values."""
    n, n_feat = codes.shape
    max_codes = max((len(e) + 1 for e in edges), default=1)
    builder = _TreeBuilder()
    out = np.zeros(n, dtype=np.float64)
    root = builder.new_node()
    min_leaf = float(cfg.min_samples_leaf)

    if cfg.feature_subsample < 1.0:
        n_take = max(1, int(round(cfg.feature_subsample * n_feat)))
        feat_ids = np.sort(rng.choice(n_feat, size=n_take, replace=False))
    else:
        feat_ids = np.arange(n_feat)

    offsets = feat_ids * max_codes
    flat_codes = codes[:, feat_ids] + offsets  # (n, F') int32

    level = [(root, np.arange(n), 0)]
    while level:
        node, rows, depth = level.pop()
        G = float(g[rows].sum())
        H = float(h[rows].sum())
        leaf_value = -G / (H + _LAMBDA)
        if (
            (cfg.max_depth is not None and depth >= cfg.max_depth)
            or len(rows) < 2
            or max_codes < 2
        ):
            builder.make_leaf(node, leaf_value)
            out[rows] = leaf_value
            continue
        fc = flat_codes[rows].ravel()
        nbins_total = len(feat_ids) * max_codes
        hist_g = np.bincount(fc, weights=np.repeat(g[rows], len(feat_ids)), minlength=nbins_total)
        hist_h = np.bincount(fc, weights=np.repeat(h[rows], len(feat_ids)), minlength=nbins_total)
        hist_c = np.bincount(fc, weights=np.repeat(counts[rows], len(feat_ids)), minlength=nbins_total)
        hist_g = hist_g.reshape(len(feat_ids), max_codes)
        hist_h = hist_h.reshape(len(feat_ids), max_codes)
        hist_c = hist_c.reshape(len(feat_ids), max_codes)
        gl = np.cumsum(hist_g, axis=1)[:, :-1]
        hl = np.cumsum(hist_h, axis=1)[:, :-1]
        cl = np.cumsum(hist_c, axis=1)[:, :-1]
        gr = G - gl
        hr = H - hl
        cr = float(counts[rows].sum()) - cl
        parent_obj = G * G / (H + _LAMBDA)
        gain = (
            gl * gl / (hl + _LAMBDA) + gr * gr / (hr + _LAMBDA) - parent_obj
        ) / 2.0
        # Disallow cuts beyond each feature's real edge count and tiny leaves.
        for fi, f in enumerate(feat_ids):
            gain[fi, len(edges[f]) :] = -np.inf
        gain[(cl < min_leaf) | (cr < min_leaf)] = -np.inf
        best_flat = int(np.argmax(gain))
        fi, cut = divmod(best_flat, max_codes - 1) if max_codes > 1 else (0, 0)
        if max_codes <= 1 or gain[fi, cut] <= _MIN_GAIN:
            builder.make_leaf(node, leaf_value)
            out[rows] = leaf_value
            continue
        f = int(feat_ids[fi])
        thr = float(edges[f][cut])
        go_left = codes[rows, f] <= cut
        l, r = builder.make_split(node, f, thr)
        level.append((l, rows[go_left], depth + 1))
        level.append((r, rows[~go_left], depth + 1))
    return builder.build(), out


def _train_gbdt(
    Xu: np.ndarray, yu: np.ndarray, counts: np.ndarray, cfg: TrainConfig
) -> Tuple[List[FlatTree], float]:
    n, n_feat = Xu.shape
    pos = float((counts * yu).sum())
    neg = float(counts.sum() - pos)
    pos_weight = neg / pos if pos > 0 else 1.0
    w = counts * np.where(yu > 0, pos_weight, 1.0)
    wpos = float((w * yu).sum())
    wneg = float(w.sum() - wpos)
    bias = math.log(wpos / wneg) if wpos > 0 and wneg > 0 else 0.0

    edges = [_bin_edges(Xu[:, f], cfg.n_bins) for f in range(n_feat)]
    codes = np.empty((n, n_feat), dtype=np.int64)
    for f in range(n_feat):
        codes[:, f] = np.searchsorted(edges[f], Xu[:, f], side="left")

    rng = np.random.default_rng(cfg.seed)
    F = np.full(n, bias, dtype=np.float64)
    trees: List[FlatTree] = []
    for _ in range(cfg.n_trees):
        p = 1.0 / (1.0 + np.exp(-F))
        g = w * (p - yu)
        h = np.maximum(w * p * (1.0 - p), 1e-12)
        tree, leaf_out = _build_gbdt_tree(codes, edges, g, h, counts, cfg, rng)
        trees.append(tree)
        F += cfg.learning_rate * leaf_out
    return trees, bias


# ---------------------------------------------------------------------------
# Public training API


def train(X: np.ndarray, y: Sequence[int], cfg: TrainConfig) -> TrainedModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8)
    if X.ndim != 2 or X.shape[0] == 0:
        raise TrainError("empty or non-2D feature matrix")
    if len(y) != X.shape[0]:
        raise TrainError("label length mismatch")
    if not np.isfinite(X).all():
        raise TrainError("non-finite feature value")

    n_features = X.shape[1]
    classes = np.unique(y)
    if cfg.family == "majority_baseline" or len(classes) < 2 or n_features == 0:
        majority = float(np.bincount(y, minlength=2).argmax())
        tree = FlatTree([-1], [0.0], [-1], [-1], [majority])
        return TrainedModel(
            family="majority_baseline",
            trees=[tree],
            tree_weight=1.0,
            bias=0.0,
            n_features=n_features,
            meta={"train_positives": int(y.sum()), "train_samples": len(y)},
        )

    Xu, yu, counts = _collapse(X, y)
    meta = {"train_positives": int(y.sum()), "train_samples": len(y)}

    if cfg.family == "cart":
        tree = _build_cart(Xu, yu, counts, cfg)
        return TrainedModel("cart", [tree], 1.0, 0.0, n_features=n_features, meta=meta)
    if cfg.family == "extra_trees":
        seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)
        trees = [
            _build_extra_tree(Xu, yu, counts, cfg, np.random.default_rng(s))
            for s in seeds
        ]
        return TrainedModel(
            "extra_trees",
            trees,
            1.0 / cfg.n_trees,
            0.0,
            n_features=n_features,
            meta=meta,
        )
    if cfg.family == "hist_gbdt":
        trees, bias = _train_gbdt(Xu, yu, counts, cfg)
        return TrainedModel(
            "hist_gbdt",
            trees,
            cfg.learning_rate,
            bias,
            n_features=n_features,
            meta=meta,
        )
    raise TrainError(f"unknown family {cfg.family!r}")


# ---------------------------------------------------------------------------
# Cross-validation


@dataclass(frozen=True)
class CVReport:
    folds: Tuple[EvalReport, ...]
    mean_precision: Optional[float]
    mean_recall: Optional[float]
    mean_accuracy: Optional[float]
    mean_f1: Optional[float]
    std_f1: Optional[float]


def _stratified_folds(y: np.ndarray, k: int, seed: int) -> List[np.ndarray]:
    rng = np.random.default_rng(seed)
    folds: List[List[int]] = [[] for _ in range(k)]
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        for i, j in enumerate(idx):
            folds[i % k].append(int(j))
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


def cross_validate(
    cfg: TrainConfig, X: np.ndarray, y: Sequence[int], k: int = 5, seed: int = 0
) -> CVReport:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8)
    if k < 2:
        raise CVError("k must be >= 2")
    if k > len(y):
        raise CVError("k exceeds sample count")
    folds = _stratified_folds(y, k, seed)
    reports: List[EvalReport] = []
    for i in range(k):
        test_idx = folds[i]
        train_idx = np.setdiff1d(np.arange(len(y)), test_idx)
        model = train(X[train_idx], y[train_idx], cfg)
        pred, _ = predict_batch(model, X[test_idx])
        reports.append(precision_recall(confusion(pred, y[test_idx])))

    def mean_of(attr: str) -> Optional[float]:
        vals = [getattr(r, attr) for r in reports if getattr(r, attr) is not None]
        return float(np.mean(vals)) if vals else None

    f1s = [r.f1 for r in reports if r.f1 is not None]
    return CVReport(
        tuple(reports),
        mean_of("precision"),
        mean_of("recall"),
        mean_of("accuracy"),
        mean_of("f1"),
        float(np.std(f1s)) if f1s else None,
    )


# ---------------------------------------------------------------------------
# Leaderboard


@dataclass(frozen=True)
class LeaderboardEntry:
    family: str
    f1: Optional[float]
    accuracy: Optional[float]
    precision: Optional[float]
    recall: Optional[float]
    train_seconds: float


@dataclass
class Leaderboard:
    entries: List[LeaderboardEntry]
    models: Dict[str, TrainedModel]

    def best(self) -> TrainedModel:
        return self.models[self.entries[0].family]

    def to_rows(self) -> List[dict]:
        return [
            {
                "family": e.family,
                "f1": e.f1,
                "accuracy": e.accuracy,
                "precision": e.precision,
                "recall": e.recall,
                "train_seconds": e.train_seconds,
            }
            for e in self.entries
        ]


def fit_leaderboard(
    X: np.ndarray,
    y: Sequence[int],
    seed: int = 0,
    families: Sequence[str] = ("cart", "extra_trees", "hist_gbdt", "majority_baseline"),
    val_ratio: float = 0.25,
) -> Leaderboard:
    """Train every family with defaults on a stratified internal split, rank
    by validation F1 (ties: accuracy, then family name)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8)
    if len(y) == 0:
        raise LeaderboardError("empty training set")
    rng = np.random.default_rng(seed)
    val_mask = np.zeros(len(y), dtype=bool)
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        n_val = max(1, int(round(len(idx) * val_ratio))) if len(idx) > 1 else 0
        val_mask[idx[:n_val]] = True
    if val_mask.all() or not val_mask.any():
        raise LeaderboardError("degenerate internal split")

    entries: List[LeaderboardEntry] = []
    models: Dict[str, TrainedModel] = {}
    errors: List[str] = []
    for family in families:
        cfg = default_config(family, seed=seed)
        t0 = time.perf_counter()
        try:
            model = train(X[~val_mask], y[~val_mask], cfg)
        except TrainError as e:
            errors.append(f"{family}: {e}")
            continue
        elapsed = time.perf_counter() - t0
        pred, _ = predict_batch(model, X[val_mask])
        rep = precision_recall(confusion(pred, y[val_mask]))
        entries.append(
            LeaderboardEntry(
                family, rep.f1, rep.accuracy, rep.precision, rep.recall, elapsed
            )
        )
        models[family] = model
    if not entries:
        raise LeaderboardError("all families failed: " + "; ".join(errors))
    entries.sort(
        key=lambda e: (
            -(e.f1 if e.f1 is not None else -1.0),
            -(e.accuracy if e.accuracy is not None else -1.0),
            e.family,
        )
    )
    return Leaderboard(entries, models)


# ---------------------------------------------------------------------------
# Serialization


def model_to_json(model: TrainedModel) -> str:
    if not model.trees:
        raise ModelIOError("refusing to save a model with no trees")
    obj = {
        "version": MODEL_FORMAT_VERSION,
        "family": model.family,
        "schema_hash": model.schema_hash,
        "bias": model.bias,
        "tree_weight": model.tree_weight,
        "threshold": model.threshold,
        "n_features": model.n_features,
        "meta": model.meta,
        "trees": [t.to_nested() for t in model.trees],
    }
    return json.dumps(obj, sort_keys=True)


def model_from_json(text: str) -> TrainedModel:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelIOError(f"malformed model file: {e}") from None
    if not isinstance(obj, dict) or obj.get("version") != MODEL_FORMAT_VERSION:
        raise ModelIOError("unsupported or missing model format version")
    try:
        return TrainedModel(
            family=obj["family"],
            trees=[FlatTree.from_nested(t) for t in obj["trees"]],
            tree_weight=float(obj["tree_weight"]),
            bias=float(obj["bias"]),
            threshold=float(obj["threshold"]),
            schema_hash=obj.get("schema_hash", ""),
            n_features=int(obj["n_features"]),
            meta=obj.get("meta", {}),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelIOError(f"malformed model file: {e}") from None


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))


def load_model(path) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(fh.read())
