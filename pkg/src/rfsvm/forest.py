"""Random forests grown with bagging and per-split random feature selection.

Trees are unpruned CART classifiers: at every node, ``mtry`` candidate
features are drawn without replacement and the threshold minimizing the
weighted child Gini impurity is taken, with ties broken by (lowest feature
index, lowest threshold). Candidate thresholds are midpoints between
consecutive distinct sorted values. A node becomes a leaf when it is pure,
has fewer than two samples, or no candidate split strictly reduces impurity.

Randomness is fully determined by the forest seed: tree k draws its bootstrap
bag and all of its feature subsets from a PCG64 generator seeded with the
k-th child of ``SeedSequence(seed)``, so training is reproducible regardless
of execution order, and trees could be grown in parallel without changing
the result. Trained models are immutable; ``leaf_assign`` / ``predict_forest``
are safe for concurrent callers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError, TrainingError, ValidationError
from .ingest import FeatureView, resolve_mtry

_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """One trained tree, stored as flat node arrays (node 0 is the root).

    ``feature[n] == -1`` marks leaves; for internal nodes, descent goes left
    iff ``x[feature[n]] <= threshold[n]``. Leaf ids are dense integers in
    construction (depth-first, left-first) order. ``leaf_histogram[l]`` counts
    the bagged training samples (with bootstrap multiplicity) that reached
    leaf ``l``, one column per class.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_id: np.ndarray
    leaf_histogram: np.ndarray
    n_features: int
    bag_indices: np.ndarray

    @property
    def leaf_count(self) -> int:
        return self.leaf_histogram.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def leaf_majority(self) -> np.ndarray:
        """Majority class index per leaf; histogram ties go to the lowest class index."""
        return np.argmax(self.leaf_histogram, axis=1)


@dataclass(frozen=True, eq=False)
class RandomForestModel:
    trees: tuple[DecisionTree, ...]
    feature_count: int
    class_names: tuple[str, ...]
    rng_seed: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def _best_split(X, y, idx, parent_counts, mtry, rng, n_classes):
    """Best (feature, threshold, left_mask) at a node, or None if no split helps.

    The objective minimized is n * weighted child Gini; a split is accepted
    only if it is strictly below n * parent Gini. Candidates are scanned in
    ascending feature order and, within a feature, ascending threshold order,
    so exact ties resolve to the lowest feature index, then lowest threshold.
    """
    n = idx.shape[0]
    parent_metric = n - float(parent_counts.astype(np.float64) @ parent_counts) / n
    d = X.shape[1]
    candidates = np.sort(rng.choice(d, size=mtry, replace=False))

    best_metric = parent_metric
    best = None
    for f in candidates:
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        if vs[0] == vs[-1]:
            continue  # constant feature at this node
        ys = y[idx[order]]
        cum = np.zeros((n + 1, n_classes), dtype=np.float64)
        cum[np.arange(1, n + 1), ys] = 1.0
        np.cumsum(cum, axis=0, out=cum)
        bpos = np.flatnonzero(vs[1:] != vs[:-1]) + 1
        nl = bpos.astype(np.float64)
        cl = cum[bpos]
        cr = cum[n] - cl
        metric = n - (cl * cl).sum(axis=1) / nl - (cr * cr).sum(axis=1) / (n - nl)
        k = int(np.argmin(metric))
        if metric[k] < best_metric:
            lo = vs[bpos[k] - 1]
            hi = vs[bpos[k]]
            thr = (lo + hi) / 2.0
            if not (lo <= thr < hi):
                thr = lo
            best_metric = metric[k]
            best = (int(f), float(thr), v <= thr)
    return best


def _build_tree(X, y, n_classes, mtry, rng, bag):
    n = y.shape[0]
    feature, threshold, left, right, leaf_of = [], [], [], [], []
    leaf_hists = []

    def new_node():
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        leaf_of.append(-1)
        return len(feature) - 1

    def make_leaf(slot, counts):
        leaf_of[slot] = len(leaf_hists)
        leaf_hists.append(counts)

    root = new_node()
    stack = [(root, np.arange(n))]
    while stack:
        slot, idx = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes)
        if idx.shape[0] < 2 or int(np.count_nonzero(counts)) < 2:
            make_leaf(slot, counts)
            continue
        split = _best_split(X, y, idx, counts, mtry, rng, n_classes)
        if split is None:
            make_leaf(slot, counts)
            continue
        f, thr, left_mask = split
        feature[slot] = f
        threshold[slot] = thr
        lslot = new_node()
        rslot = new_node()
        left[slot] = lslot
        right[slot] = rslot
        # push right first so the left child is processed (and numbered) first
        stack.append((rslot, idx[~left_mask]))
        stack.append((lslot, idx[left_mask]))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        leaf_id=np.asarray(leaf_of, dtype=np.int32),
        leaf_histogram=np.asarray(leaf_hists, dtype=np.int64),
        n_features=X.shape[1],
        bag_indices=bag,
    )


def train_forest(
    view: FeatureView | np.ndarray,
    labels: Sequence[str],
    n_trees: int,
    mtry: int | str | None = "sqrt",
    seed: int = 0,
    class_names: Sequence[str] | None = None,
) -> RandomForestModel:
    """Train an ``n_trees``-tree forest on one view.

    Each tree is grown on a bootstrap sample of size N drawn with
    replacement. Same inputs and seed produce a bitwise-identical model.
    ``class_names`` fixes the class index order (default: sorted distinct
    labels); it may be a superset of the labels actually present.
    """
    X = view.matrix if isinstance(view, FeatureView) else np.asarray(view, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"training matrix must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("training matrix contains non-finite values")
    n, d = X.shape
    labels = list(labels)
    if len(labels) != n:
        raise ValidationError(f"{len(labels)} labels for {n} rows")
    if n < 2:
        raise TrainingError(f"need at least 2 samples, got {n}")
    present = sorted(set(labels))
    if len(present) < 2:
        raise TrainingError(f"need at least 2 classes, got {present}")
    if class_names is None:
        class_names = present
    class_names = tuple(class_names)
    lut = {c: i for i, c in enumerate(class_names)}
    missing = [c for c in present if c not in lut]
    if missing:
        raise ValidationError(f"labels {missing} not in class_names {list(class_names)}")
    y = np.array([lut[l] for l in labels], dtype=np.int64)

    if n_trees < 1:
        raise ParameterError(f"n_trees must be >= 1, got {n_trees}")
    m = resolve_mtry(mtry, d)

    children = np.random.SeedSequence(seed % (1 << 64)).spawn(n_trees)
    trees = []
    for k in range(n_trees):
        rng = np.random.default_rng(children[k])
        bag = rng.integers(0, n, size=n)
        trees.append(_build_tree(X[bag], y[bag], len(class_names), m, rng, bag))
    return RandomForestModel(
        trees=tuple(trees), feature_count=d, class_names=class_names, rng_seed=seed
    )


def leaf_assign(tree: DecisionTree, x) -> int:
    """Leaf id reached by descending from the root (left iff value <= threshold)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (tree.n_features,):
        raise ValidationError(f"expected a vector of length {tree.n_features}, got shape {x.shape}")
    node = 0
    while tree.feature[node] >= 0:
        if x[tree.feature[node]] <= tree.threshold[node]:
            node = tree.left[node]
        else:
            node = tree.right[node]
    return int(tree.leaf_id[node])


def tree_apply(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    """Leaf ids for every row of X (vectorized descent, one level per pass)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != tree.n_features:
        raise ValidationError(
            f"expected a matrix with {tree.n_features} columns, got shape {X.shape}"
        )
    node = np.zeros(X.shape[0], dtype=np.int32)
    active = tree.feature[node] >= 0
    rows = np.flatnonzero(active)
    while rows.size:
        nd = node[rows]
        go_left = X[rows, tree.feature[nd]] <= tree.threshold[nd]
        node[rows] = np.where(go_left, tree.left[nd], tree.right[nd])
        rows = rows[tree.feature[node[rows]] >= 0]
    return tree.leaf_id[node].astype(np.int64)


def predict_forest(model: RandomForestModel, x):
    """Plurality vote over per-tree leaf majorities.

    Accepts a single feature vector (returns a label) or a matrix (returns an
    array of labels). Vote ties break toward the earliest name in
    ``model.class_names``.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != model.feature_count:
        raise ValidationError(
            f"expected {model.feature_count} features, got {X.shape[1]}"
        )
    votes = np.zeros((X.shape[0], len(model.class_names)), dtype=np.int64)
    rows = np.arange(X.shape[0])
    for tree in model.trees:
        winners = tree.leaf_majority[tree_apply(tree, X)]
        np.add.at(votes, (rows, winners), 1)
    picks = np.argmax(votes, axis=1)
    labels = np.array(model.class_names, dtype=object)[picks]
    return labels[0] if single else labels


def save_forest(model: RandomForestModel, path) -> None:
    """Serialize to a versioned .npz archive (bitwise round-trip stable)."""
    node_offsets = np.zeros(model.n_trees + 1, dtype=np.int64)
    leaf_offsets = np.zeros(model.n_trees + 1, dtype=np.int64)
    for k, t in enumerate(model.trees):
        node_offsets[k + 1] = node_offsets[k] + t.n_nodes
        leaf_offsets[k + 1] = leaf_offsets[k] + t.leaf_count
    np.savez_compressed(
        path,
        format_version=np.int64(_FORMAT_VERSION),
        feature_count=np.int64(model.feature_count),
        rng_seed=np.int64(model.rng_seed),
        class_names=np.array(model.class_names, dtype=np.str_),
        node_offsets=node_offsets,
        leaf_offsets=leaf_offsets,
        feature=np.concatenate([t.feature for t in model.trees]),
        threshold=np.concatenate([t.threshold for t in model.trees]),
        left=np.concatenate([t.left for t in model.trees]),
        right=np.concatenate([t.right for t in model.trees]),
        leaf_id=np.concatenate([t.leaf_id for t in model.trees]),
        leaf_histogram=np.concatenate([t.leaf_histogram for t in model.trees]),
        bag_indices=np.stack([t.bag_indices for t in model.trees]),
    )


def load_forest(path) -> RandomForestModel:
    with np.load(path) as z:
        version = int(z["format_version"])
        if version != _FORMAT_VERSION:
            raise ValidationError(f"unsupported forest file version {version}")
        no, lo = z["node_offsets"], z["leaf_offsets"]
        feature_count = int(z["feature_count"])
        trees = []
        for k in range(no.shape[0] - 1):
            a, b = no[k], no[k + 1]
            la, lb = lo[k], lo[k + 1]
            trees.append(
                DecisionTree(
                    feature=z["feature"][a:b],
                    threshold=z["threshold"][a:b],
                    left=z["left"][a:b],
                    right=z["right"][a:b],
                    leaf_id=z["leaf_id"][a:b],
                    leaf_histogram=z["leaf_histogram"][la:lb],
                    n_features=feature_count,
                    bag_indices=z["bag_indices"][k],
                )
            )
        return RandomForestModel(
            trees=tuple(trees),
            feature_count=feature_count,
            class_names=tuple(str(c) for c in z["class_names"]),
            rng_seed=int(z["rng_seed"]),
        )


def forests_equal(a: RandomForestModel, b: RandomForestModel) -> bool:
    """Bitwise equality of two models (used by determinism checks)."""
    if (
        a.feature_count != b.feature_count
        or a.class_names != b.class_names
        or a.n_trees != b.n_trees
    ):
        return False
    for ta, tb in zip(a.trees, b.trees):
        if not (
            np.array_equal(ta.feature, tb.feature)
            and np.array_equal(ta.threshold, tb.threshold, equal_nan=True)
            and np.array_equal(ta.left, tb.left)
            and np.array_equal(ta.right, tb.right)
            and np.array_equal(ta.leaf_id, tb.leaf_id)
            and np.array_equal(ta.leaf_histogram, tb.leaf_histogram)
            and np.array_equal(ta.bag_indices, tb.bag_indices)
        ):
            return False
    return True
