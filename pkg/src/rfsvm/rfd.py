"""Forest-induced dissimilarity matrices and the similarity kernel.

Two samples are dissimilar under one tree iff they land in different leaves;
a forest averages that 0/1 value over its trees, so every entry of a
single-forest matrix is a multiple of 1/M. Multiple views fuse by taking the
elementwise mean of their per-view matrices, and the SVM kernel is the
elementwise complement ``S = 1 - D``.

Matrices are computed by bucketing samples per leaf (one leaf-assignment
pass per tree, then co-membership counts per leaf group), never by walking
trees once per sample pair; the result is exactly equal to the naive
pairwise construction. All operations are pure over immutable inputs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AlignmentError, FormatError, ParameterError, ParseError, ValidationError
from .forest import DecisionTree, RandomForestModel, leaf_assign, tree_apply
from .ingest import FeatureView


@dataclass(frozen=True, eq=False)
class DissimilarityMatrix:
    """Symmetric N x N matrix in [0,1] with a zero diagonal, rows = columns = sample_ids."""

    sample_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        n = len(self.sample_ids)
        if v.shape != (n, n):
            raise ValidationError(f"expected a {n}x{n} matrix, got shape {v.shape}")
        if v.size:
            if not np.all(np.isfinite(v)):
                raise ValidationError("matrix contains non-finite values")
            if v.min() < 0.0 or v.max() > 1.0:
                raise ValidationError(
                    f"entries must lie in [0,1], got range [{v.min()}, {v.max()}]"
                )
            if not np.array_equal(v, v.T):
                raise ValidationError("matrix is not symmetric")
            if np.any(np.diagonal(v) != 0.0):
                raise ValidationError("diagonal must be exactly zero")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)


@dataclass(frozen=True, eq=False)
class CrossDissimilarityBlock:
    """Dissimilarities of unseen (row) points against training (column) points."""

    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if v.shape != (len(self.row_ids), len(self.col_ids)):
            raise ValidationError(
                f"expected a {len(self.row_ids)}x{len(self.col_ids)} block, got shape {v.shape}"
            )
        if v.size:
            if not np.all(np.isfinite(v)):
                raise ValidationError("block contains non-finite values")
            if v.min() < 0.0 or v.max() > 1.0:
                raise ValidationError(
                    f"entries must lie in [0,1], got range [{v.min()}, {v.max()}]"
                )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "row_ids", tuple(self.row_ids))
        object.__setattr__(self, "col_ids", tuple(self.col_ids))


def tree_dissimilarity(tree: DecisionTree, x_i, x_j) -> float:
    """0.0 if both vectors land in the same leaf of ``tree``, else 1.0."""
    return 0.0 if leaf_assign(tree, x_i) == leaf_assign(tree, x_j) else 1.0


def _same_leaf_counts(model: RandomForestModel, X: np.ndarray) -> np.ndarray:
    """counts[i,j] = number of trees in which rows i and j share a leaf."""
    n = X.shape[0]
    counts = np.zeros((n, n), dtype=np.int64)
    for tree in model.trees:
        leaves = tree_apply(tree, X)
        order = np.argsort(leaves, kind="stable")
        sorted_leaves = leaves[order]
        cuts = np.flatnonzero(sorted_leaves[1:] != sorted_leaves[:-1]) + 1
        for group in np.split(order, cuts):
            counts[np.ix_(group, group)] += 1
    return counts


def forest_dissimilarity_matrix(model: RandomForestModel, view: FeatureView) -> DissimilarityMatrix:
    """Fraction of trees separating each pair of rows of ``view``.

    Exactly equal to averaging ``tree_dissimilarity`` over all trees for every
    pair, but computed via per-leaf bucketing.
    """
    if view.n_features != model.feature_count:
        raise ValidationError(
            f"view has {view.n_features} features, model expects {model.feature_count}"
        )
    m = model.n_trees
    same = _same_leaf_counts(model, view.matrix)
    values = (m - same).astype(np.float64) / m
    return DissimilarityMatrix(sample_ids=view.sample_ids, values=values)


def cross_dissimilarity(
    model: RandomForestModel, train_view: FeatureView, test_view: FeatureView
) -> CrossDissimilarityBlock:
    """Dissimilarity of every test row against every training row.

    Entry (t, i) is the fraction of trees in which test point t and training
    point i land in different leaves, using forests trained on training data
    only; this is what gives an unseen point its kernel row.
    """
    for v in (train_view, test_view):
        if v.n_features != model.feature_count:
            raise ValidationError(
                f"view {v.view_name!r} has {v.n_features} features, "
                f"model expects {model.feature_count}"
            )
    m = model.n_trees
    n_te, n_tr = test_view.n_samples, train_view.n_samples
    same = np.zeros((n_te, n_tr), dtype=np.int64)
    for tree in model.trees:
        leaves_tr = tree_apply(tree, train_view.matrix)
        leaves_te = tree_apply(tree, test_view.matrix)
        groups_tr = _group_by_leaf(leaves_tr, tree.leaf_count)
        groups_te = _group_by_leaf(leaves_te, tree.leaf_count)
        for leaf, g_te in groups_te.items():
            g_tr = groups_tr.get(leaf)
            if g_tr is not None:
                same[np.ix_(g_te, g_tr)] += 1
    values = (m - same).astype(np.float64) / m
    return CrossDissimilarityBlock(
        row_ids=test_view.sample_ids, col_ids=train_view.sample_ids, values=values
    )


def _group_by_leaf(leaves: np.ndarray, leaf_count: int) -> dict[int, np.ndarray]:
    order = np.argsort(leaves, kind="stable")
    sorted_leaves = leaves[order]
    cuts = np.flatnonzero(sorted_leaves[1:] != sorted_leaves[:-1]) + 1
    groups = np.split(order, cuts)
    return {int(leaves[g[0]]): g for g in groups if g.size}


def joint_dissimilarity(matrices: Sequence[DissimilarityMatrix]) -> DissimilarityMatrix:
    """Elementwise mean of per-view matrices sharing one sample order."""
    matrices = list(matrices)
    if not matrices:
        raise ParameterError("need at least one matrix")
    ids = matrices[0].sample_ids
    for m in matrices[1:]:
        if m.sample_ids != ids:
            raise AlignmentError("matrices do not share the same sample ids and order")
    if len(matrices) == 1:
        return matrices[0]
    values = np.mean(np.stack([m.values for m in matrices]), axis=0)
    return DissimilarityMatrix(sample_ids=ids, values=values)


def joint_cross_dissimilarity(blocks: Sequence[CrossDissimilarityBlock]) -> CrossDissimilarityBlock:
    """Elementwise mean of per-view cross blocks sharing row and column orders."""
    blocks = list(blocks)
    if not blocks:
        raise ParameterError("need at least one block")
    rows, cols = blocks[0].row_ids, blocks[0].col_ids
    for b in blocks[1:]:
        if b.row_ids != rows or b.col_ids != cols:
            raise AlignmentError("blocks do not share the same row/column ids and order")
    if len(blocks) == 1:
        return blocks[0]
    values = np.mean(np.stack([b.values for b in blocks]), axis=0)
    return CrossDissimilarityBlock(row_ids=rows, col_ids=cols, values=values)


def similarity_from_dissimilarity(d) -> np.ndarray:
    """Similarity kernel ``1 - D`` (unit diagonal for a full matrix).

    Accepts a DissimilarityMatrix, a CrossDissimilarityBlock, or a plain
    array of dissimilarities in [0,1].
    """
    values = d.values if hasattr(d, "values") else np.asarray(d, dtype=np.float64)
    return 1.0 - values


def psd_clip(kernel: np.ndarray) -> np.ndarray:
    """Nearest-PSD repair: clip negative eigenvalues to zero and reconstruct.

    Opt-in: similarity kernels built by this package are PSD by construction
    (averages of leaf co-membership indicators), so this is only needed for
    matrices from other tools. The repaired kernel's diagonal may deviate
    from one.
    """
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValidationError(f"kernel must be square, got shape {k.shape}")
    w, v = np.linalg.eigh((k + k.T) / 2.0)
    w = np.clip(w, 0.0, None)
    repaired = (v * w) @ v.T
    return (repaired + repaired.T) / 2.0


def save_matrix_csv(matrix: DissimilarityMatrix, path) -> None:
    """Export in the view-file layout: header ``sample_id`` + ids as columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", *matrix.sample_ids])
        for i, sid in enumerate(matrix.sample_ids):
            w.writerow([sid, *(repr(float(x)) for x in matrix.values[i])])


def load_matrix_csv(path) -> DissimilarityMatrix:
    """Parse and validate a matrix written by :func:`save_matrix_csv`."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh)]
    if not rows:
        raise FormatError(f"{path}: empty file, expected a header row")
    header = [c.strip() for c in rows[0]]
    if not header or header[0] != "sample_id":
        raise FormatError(f"{path}: first header cell must be 'sample_id'")
    ids = tuple(header[1:])
    if len(rows) - 1 != len(ids):
        raise FormatError(
            f"{path}: {len(rows) - 1} data rows for {len(ids)} id columns"
        )
    values = np.empty((len(ids), len(ids)), dtype=np.float64)
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}: line {r}: expected {len(header)} cells, found {len(row)}")
        if row[0].strip() != ids[r - 2]:
            raise AlignmentError(
                f"{path}: line {r}: row id {row[0]!r} does not match column id {ids[r - 2]!r}"
            )
        for j, cell in enumerate(row[1:]):
            try:
                values[r - 2, j] = float(cell)
            except ValueError:
                raise ParseError(f"{path}: line {r}, column {ids[j]!r}: {cell!r} is not numeric") from None
    return DissimilarityMatrix(sample_ids=ids, values=values)
