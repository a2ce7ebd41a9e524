"""Deterministic Random Forest: CART trees, Gini impurity, bootstrap bagging.

Everything that consumes randomness goes through splitmix64 streams derived
from the configured seed, so (data, params) fully determine the model bytes:

  * per-tree stream: seeded with the i-th output of splitmix64(seed)
  * bootstrap: n draws of next_u64() % n from the tree's stream
  * node feature subsets: partial Fisher-Yates over the feature indices,
    consumed in preorder (node, left subtree, right subtree)

Candidate thresholds are midpoints between consecutive distinct sorted values
of a sampled feature; the winning split minimizes weighted child Gini with
ties broken toward the lower feature index, then the lower threshold. Left
children take samples with value <= threshold. Vote ties resolve to NORMAL at
both the leaf and forest level.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ModelFormatError, TrainingError
from .rng import SplitMix64, derive_seeds
from .skeleton import Label

FORMAT_VERSION = 1
RNG_NAME = "splitmix64"

_LEAF = -1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    seed: int = 42
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features: int | None = None  # None: floor(sqrt(d)), resolved at fit
    max_depth: int | None = None
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass(frozen=True)
class Tree:
    """One CART tree as flat preorder arrays.

    feature[i] == -1 marks a leaf; there left[i]/right[i] hold the class
    counts (n_normal, n_push) instead of child indices.
    """

    feature: tuple[int, ...]
    threshold: tuple[float, ...]
    left: tuple[int, ...]
    right: tuple[int, ...]

    def leaf_index(self, x: Sequence[float]) -> int:
        feature = self.feature
        i = 0
        while feature[i] != _LEAF:
            i = self.left[i] if x[feature[i]] <= self.threshold[i] else self.right[i]
        return i

    def vote(self, x: Sequence[float]) -> int:
        """Leaf majority class; tie -> NORMAL."""
        i = self.leaf_index(x)
        return 1 if self.right[i] > self.left[i] else 0


@dataclass(frozen=True)
class ForestModel:
    params: ForestParams
    feature_dim: int
    feature_names: tuple[str, ...]
    trees: tuple[Tree, ...]
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if len(self.trees) != self.params.n_trees:
            raise ValueError("tree count does not match params.n_trees")
        if len(self.feature_names) != self.feature_dim:
            raise ValueError("feature_names length must equal feature_dim")
        for tree in self.trees:
            for f in tree.feature:
                if f != _LEAF and not (0 <= f < self.feature_dim):
                    raise ValueError(f"feature index {f} out of range for dim {self.feature_dim}")


def gini(counts: tuple[int, int]) -> float:
    """Gini impurity 1 - p0^2 - p1^2 of a two-class count pair."""
    n0, n1 = counts
    n = n0 + n1
    if n <= 0:
        raise ValueError("gini needs at least one sample")
    p0 = n0 / n
    p1 = n1 / n
    return 1.0 - p0 * p0 - p1 * p1


def _sample_feature_indices(rng: SplitMix64, d: int, k: int) -> list[int]:
    # sorted so candidate evaluation order (and thus tie-breaking) is by index
    return sorted(rng.shuffled_prefix(d, k))


def _best_split(X: np.ndarray, y: np.ndarray, rows: np.ndarray,
                feature_indices: list[int], min_leaf: int):
    """Minimal weighted-Gini split among the sampled features.

    Returns (feature_idx, threshold) or None. Candidates are scanned with
    ascending feature index and ascending threshold; only a strictly smaller
    Gini replaces the incumbent, which implements the documented tie-break.
    """
    n = rows.size
    yr = y[rows]
    total_push = int(yr.sum())
    best = None
    for f in feature_indices:
        col = X[rows, f]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        sy = yr[order]
        cuts = np.nonzero(sv[1:] != sv[:-1])[0]
        if cuts.size == 0:
            continue
        n_left = cuts + 1
        n_right = n - n_left
        ok = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not ok.any():
            continue
        left_push = np.cumsum(sy)[cuts]
        left_norm = n_left - left_push
        right_push = total_push - left_push
        right_norm = n_right - right_push
        g_left = 1.0 - (left_norm / n_left) ** 2 - (left_push / n_left) ** 2
        g_right = 1.0 - (right_norm / n_right) ** 2 - (right_push / n_right) ** 2
        weighted = (n_left * g_left + n_right * g_right) / n
        weighted[~ok] = np.inf
        j = int(np.argmin(weighted))  # first minimum: lowest threshold wins
        g = float(weighted[j])
        if math.isinf(g):
            continue
        if best is None or g < best[0]:
            thr = (float(sv[cuts[j]]) + float(sv[cuts[j] + 1])) / 2.0
            best = (g, f, thr)
    if best is None:
        return None
    return best[1], best[2]


def _grow_tree(X: np.ndarray, y: np.ndarray, rows: np.ndarray,
               params: ForestParams, rng: SplitMix64) -> Tree:
    d = X.shape[1]
    k = params.max_features
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []

    # explicit stack, right child pushed first, so nodes come out in preorder
    stack: list[tuple[np.ndarray, int, int, bool]] = [(rows, 0, -1, False)]
    while stack:
        node_rows, depth, parent, is_left = stack.pop()
        idx = len(feature)
        if parent >= 0:
            if is_left:
                left[parent] = idx
            else:
                right[parent] = idx
        yr = y[node_rows]
        n1 = int(yr.sum())
        n0 = node_rows.size - n1
        split = None
        if (n0 > 0 and n1 > 0
                and node_rows.size >= params.min_samples_split
                and (params.max_depth is None or depth < params.max_depth)):
            fidx = _sample_feature_indices(rng, d, k)
            split = _best_split(X, y, node_rows, fidx, params.min_samples_leaf)
        if split is None:
            feature.append(_LEAF)
            threshold.append(0.0)
            left.append(n0)
            right.append(n1)
            continue
        f, thr = split
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        go_left = X[node_rows, f] <= thr
        stack.append((node_rows[~go_left], depth + 1, idx, False))
        stack.append((node_rows[go_left], depth + 1, idx, True))
    return Tree(tuple(feature), tuple(threshold), tuple(left), tuple(right))


def _fit_one_tree(args) -> Tree:
    X, y, params, tree_seed = args
    rng = SplitMix64(tree_seed)
    n = X.shape[0]
    if params.bootstrap:
        rows = np.fromiter((rng.next_below(n) for _ in range(n)), dtype=np.intp, count=n)
    else:
        rows = np.arange(n, dtype=np.intp)
    return _grow_tree(X, y, rows, params, rng)


def fit(features, labels, params: ForestParams | None = None,
        feature_names: Sequence[str] | None = None, n_jobs: int = 1) -> ForestModel:
    """Train a forest on (n, d) features and binary labels.

    Trees may be built in parallel (n_jobs > 1); each tree's randomness comes
    from its own pre-derived stream, so the result is bit-identical to a
    sequential run.
    """
    params = params or ForestParams()
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray([int(v) for v in labels], dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("features must be (n, d) with one label per row")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 (normal) or 1 (push)")
    if y.min() == y.max():
        raise TrainingError("training data contains a single class")
    d = X.shape[1]
    k = params.max_features if params.max_features is not None else max(1, math.isqrt(d))
    if k > d:
        raise ValueError(f"max_features {k} exceeds feature dim {d}")
    resolved = replace(params, max_features=k)
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(d))
    else:
        feature_names = tuple(feature_names)
        if len(feature_names) != d:
            raise ValueError("feature_names length must equal feature dim")

    tree_seeds = derive_seeds(resolved.seed, resolved.n_trees)
    jobs = [(X, y, resolved, s) for s in tree_seeds]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            trees = tuple(pool.map(_fit_one_tree, jobs, chunksize=max(1, len(jobs) // (4 * n_jobs))))
    else:
        trees = tuple(_fit_one_tree(job) for job in jobs)
    return ForestModel(params=resolved, feature_dim=d, feature_names=feature_names, trees=trees)


def vote_counts(model: ForestModel, x: Sequence[float]) -> tuple[int, int]:
    """(votes_normal, votes_push) across all trees."""
    if len(x) != model.feature_dim:
        raise ValueError(f"expected {model.feature_dim} features, got {len(x)}")
    push = 0
    for tree in model.trees:
        push += tree.vote(x)
    return (len(model.trees) - push, push)


def predict(model: ForestModel, x: Sequence[float]) -> Label:
    """Majority vote over trees; tie -> NORMAL."""
    n0, n1 = vote_counts(model, x)
    return Label.PUSH if n1 > n0 else Label.NORMAL


def predict_proba(model: ForestModel, x: Sequence[float]) -> float:
    """Fraction of trees voting push."""
    _, n1 = vote_counts(model, x)
    return n1 / len(model.trees)


def _tree_to_records(tree: Tree) -> list:
    records = []
    for i, f in enumerate(tree.feature):
        if f == _LEAF:
            records.append([_LEAF, tree.left[i], tree.right[i]])
        else:
            records.append([f, tree.threshold[i]])
    return records


def _tree_from_records(records, d: int) -> Tree:
    if not isinstance(records, list) or not records:
        raise ModelFormatError("tree must be a non-empty list of node records")
    feature: list[int] = []
    threshold: list[float] = []
    left: list = []
    right: list = []
    pending: list[int] = []  # internal nodes still missing a child
    for i, rec in enumerate(records):
        if not isinstance(rec, list) or not rec:
            raise ModelFormatError(f"bad node record at index {i}")
        if i > 0:
            if not pending:
                raise ModelFormatError("tree has trailing nodes after completion")
            p = pending[-1]
            if left[p] is None:
                left[p] = i
            else:
                right[p] = i
                pending.pop()
        if rec[0] == _LEAF:
            if len(rec) != 3 or not all(isinstance(v, int) and v >= 0 for v in rec[1:]):
                raise ModelFormatError(f"bad leaf record at index {i}")
            feature.append(_LEAF)
            threshold.append(0.0)
            left.append(rec[1])
            right.append(rec[2])
        else:
            if (len(rec) != 2 or isinstance(rec[0], bool) or not isinstance(rec[0], int)
                    or not isinstance(rec[1], (int, float))):
                raise ModelFormatError(f"bad split record at index {i}")
            if not (0 <= rec[0] < d):
                raise ModelFormatError(f"feature index {rec[0]} out of range for dim {d}")
            feature.append(rec[0])
            threshold.append(float(rec[1]))
            left.append(None)
            right.append(None)
            pending.append(i)
    if pending or any(v is None for v in left) or any(v is None for v in right):
        raise ModelFormatError("tree is incomplete: an internal node lacks children")
    return Tree(tuple(feature), tuple(threshold), tuple(left), tuple(right))


def save(model: ForestModel) -> bytes:
    """Canonical JSON bytes; deterministic for a fixed model."""
    p = model.params
    obj = {
        "format_version": model.format_version,
        "rng": RNG_NAME,
        "params": {
            "n_trees": p.n_trees,
            "seed": p.seed,
            "min_samples_split": p.min_samples_split,
            "min_samples_leaf": p.min_samples_leaf,
            "max_features": p.max_features,
            "max_depth": p.max_depth,
            "bootstrap": p.bootstrap,
        },
        "feature_dim": model.feature_dim,
        "feature_names": list(model.feature_names),
        "trees": [_tree_to_records(t) for t in model.trees],
    }
    return (json.dumps(obj, separators=(",", ":")) + "\n").encode("utf-8")


def load(data: bytes | str) -> ForestModel:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ModelFormatError("model file must be a JSON object")
    version = obj.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    if obj.get("rng") != RNG_NAME:
        raise ModelFormatError(f"unknown rng {obj.get('rng')!r} (expected {RNG_NAME!r})")
    try:
        raw = obj["params"]
        params = ForestParams(
            n_trees=raw["n_trees"],
            seed=raw["seed"],
            min_samples_split=raw["min_samples_split"],
            min_samples_leaf=raw["min_samples_leaf"],
            max_features=raw["max_features"],
            max_depth=raw["max_depth"],
            bootstrap=raw["bootstrap"],
        )
        d = obj["feature_dim"]
        names = tuple(obj["feature_names"])
        trees = tuple(_tree_from_records(t, d) for t in obj["trees"])
        return ForestModel(params=params, feature_dim=d, feature_names=names, trees=trees)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"invalid model file: {exc}") from exc
