"""Multiclass SVM on a precomputed similarity kernel.

The binary solver is an SMO-style working-set method on the soft-margin
dual: at each step the most-violating pair under the usual first-order
selection rule is updated analytically, the gradient is maintained
incrementally, and the loop stops when the maximal KKT violation drops to
``tol`` (default 1e-3). Non-positive curvature along a working direction
(possible for indefinite kernels) is handled by clamping the step to the
feasible box edge. Multiclass problems reduce to one-vs-one with majority
voting; C is picked by stratified k-fold cross-validation on training data
only.

Binary subproblems and grid-search cells have no shared mutable state, so
they could run concurrently without changing any result.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ConvergenceError,
    ParameterError,
    StratificationError,
    TrainingError,
    ValidationError,
)

_CURVATURE_FLOOR = 1e-12
_KERNEL_EVAL_BUDGET = 10_000_000


@dataclass(frozen=True, eq=False)
class BinarySvmModel:
    """Dual solution of one binary problem over its own training set.

    ``dual_coefs[k]`` is alpha * y for training sample ``support_indices[k]``;
    the decision value of a point with kernel row ``k_row`` (length n_train)
    is ``k_row[support_indices] @ dual_coefs + bias``.
    """

    support_indices: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    c: float
    n_train: int
    kkt_violation: float = 0.0
    n_iter: int = 0

    def decision_values(self, kernel_rows: np.ndarray) -> np.ndarray:
        k = np.asarray(kernel_rows, dtype=np.float64)
        if k.ndim == 1:
            k = k[None, :]
        if k.shape[1] != self.n_train:
            raise ValidationError(
                f"kernel rows have {k.shape[1]} columns, model expects {self.n_train}"
            )
        return k[:, self.support_indices] @ self.dual_coefs + self.bias


@dataclass(frozen=True, eq=False)
class PairModel:
    class_a: str
    class_b: str
    indices: np.ndarray  # positions of this pair's samples in the full training set
    model: BinarySvmModel


@dataclass(frozen=True, eq=False)
class MulticlassSvmModel:
    """One-vs-one ensemble: one binary model per unordered class pair."""

    pairs: tuple[PairModel, ...]
    class_names: tuple[str, ...]
    n_train: int


def _check_kernel(kernel: np.ndarray) -> np.ndarray:
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValidationError(f"kernel must be square, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValidationError("kernel contains non-finite values")
    if not np.allclose(k, k.T, rtol=0.0, atol=1e-12):
        raise ValidationError("kernel is not symmetric")
    return k


def smo_solve(kernel, y, c, tol=1e-3, max_iter=None):
    """Solve the soft-margin dual on a precomputed kernel.

    Returns ``(alpha, bias, n_iter, kkt)``. ``y`` must be +/-1. Raises
    ConvergenceError (carrying the residual violation) if the KKT gap is
    still above ``tol`` after ``max_iter`` pair updates; the default cap
    spends a 1e7 kernel-evaluation budget (each update reads two columns).
    """
    k = np.asarray(kernel, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if max_iter is None:
        max_iter = max(1000, _KERNEL_EVAL_BUDGET // max(1, 2 * n))
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective at alpha = 0

    pos = y > 0
    it = 0
    while True:
        # -y*grad; selection picks the most violating pair
        score = -y * grad
        up = (pos & (alpha < c)) | (~pos & (alpha > 0.0))
        low = (pos & (alpha > 0.0)) | (~pos & (alpha < c))
        m_val = np.max(score[up]) if np.any(up) else -np.inf
        big_m_val = np.min(score[low]) if np.any(low) else np.inf
        gap = m_val - big_m_val
        if gap <= tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"SMO did not converge in {max_iter} iterations "
                f"(KKT violation {gap:.3e} > tol {tol:.1e})",
                kkt_violation=float(gap),
            )
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])

        curv = k[i, i] + k[j, j] - 2.0 * k[i, j]
        if curv <= 0.0:
            curv = _CURVATURE_FLOOR  # indefinite direction: step clamps to the box edge
        t_star = gap / curv
        head_i = (c - alpha[i]) if y[i] > 0 else alpha[i]
        head_j = alpha[j] if y[j] > 0 else (c - alpha[j])
        t = min(t_star, head_i, head_j)

        # apply the step; land exactly on a bound when the step is bound-limited
        if t == head_i:
            alpha[i] = c if y[i] > 0 else 0.0
        else:
            alpha[i] += y[i] * t
        if t == head_j:
            alpha[j] = 0.0 if y[j] > 0 else c
        else:
            alpha[j] -= y[j] * t
        np.clip(alpha, 0.0, c, out=alpha)
        grad += t * y * (k[:, i] - k[:, j])
        it += 1

    free = (alpha > 0.0) & (alpha < c)
    if np.any(free):
        bias = float(np.mean(score[free]))
    else:
        lo = m_val if np.isfinite(m_val) else big_m_val
        hi = big_m_val if np.isfinite(big_m_val) else m_val
        bias = float((lo + hi) / 2.0)
    return alpha, bias, it, float(max(gap, 0.0))


def train_binary_svm(kernel, labels, c, tol=1e-3, max_iter=None) -> BinarySvmModel:
    """Train one binary SVM with labels in {-1, +1} on a precomputed kernel."""
    k = _check_kernel(kernel)
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != (k.shape[0],):
        raise ValidationError(f"{y.shape[0]} labels for a {k.shape[0]}-sample kernel")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValidationError("labels must be +1 or -1")
    if np.all(y > 0) or np.all(y < 0):
        raise TrainingError("both classes must be present")
    if c <= 0:
        raise ParameterError(f"c must be > 0, got {c}")

    alpha, bias, n_iter, kkt = smo_solve(k, y, float(c), tol=tol, max_iter=max_iter)
    support = np.flatnonzero(alpha > 0.0)
    return BinarySvmModel(
        support_indices=support,
        dual_coefs=alpha[support] * y[support],
        bias=bias,
        c=float(c),
        n_train=k.shape[0],
        kkt_violation=kkt,
        n_iter=n_iter,
    )


def train_multiclass_svm(
    kernel,
    labels: Sequence[str],
    c: float,
    class_names: Sequence[str] | None = None,
    tol: float = 1e-3,
    max_iter: int | None = None,
) -> MulticlassSvmModel:
    """One-vs-one training: one binary SVM per unordered class pair.

    Each pair's model is fit on the kernel submatrix of that pair's samples,
    with +1 for the pair's first class and -1 for its second.
    """
    k = _check_kernel(kernel)
    labels = list(labels)
    if len(labels) != k.shape[0]:
        raise ValidationError(f"{len(labels)} labels for a {k.shape[0]}-sample kernel")
    if class_names is None:
        class_names = sorted(set(labels))
    class_names = tuple(class_names)
    if len(set(labels)) < 2:
        raise TrainingError(f"need at least 2 classes, got {sorted(set(labels))}")
    unknown = sorted(set(labels) - set(class_names))
    if unknown:
        raise ValidationError(f"labels {unknown} not in class_names {list(class_names)}")

    labels_arr = np.array(labels, dtype=object)
    pairs = []
    for a, b in itertools.combinations(class_names, 2):
        idx = np.flatnonzero((labels_arr == a) | (labels_arr == b))
        y = np.where(labels_arr[idx] == a, 1.0, -1.0)
        sub = k[np.ix_(idx, idx)]
        model = train_binary_svm(sub, y, c, tol=tol, max_iter=max_iter)
        pairs.append(PairModel(class_a=a, class_b=b, indices=idx, model=model))
    return MulticlassSvmModel(pairs=tuple(pairs), class_names=class_names, n_train=k.shape[0])


def predict_multiclass(model: MulticlassSvmModel, kernel_rows) -> np.ndarray:
    """Labels by one-vs-one voting over ``n_test x n_train`` kernel rows.

    Each pair votes for its first class when the decision value is strictly
    positive, else its second; vote ties break toward the earliest name in
    ``class_names``.
    """
    k = np.asarray(kernel_rows, dtype=np.float64)
    if k.ndim == 1:
        k = k[None, :]
    if k.shape[1] != model.n_train:
        raise ValidationError(
            f"kernel rows have {k.shape[1]} columns, model was trained on {model.n_train} samples"
        )
    class_pos = {c: i for i, c in enumerate(model.class_names)}
    votes = np.zeros((k.shape[0], len(model.class_names)), dtype=np.int64)
    for pair in model.pairs:
        dec = pair.model.decision_values(k[:, pair.indices])
        a, b = class_pos[pair.class_a], class_pos[pair.class_b]
        wins_a = dec > 0.0
        votes[wins_a, a] += 1
        votes[~wins_a, b] += 1
    picks = np.argmax(votes, axis=1)
    return np.array(model.class_names, dtype=object)[picks]


def stratified_folds(labels: Sequence[str], n_folds: int, seed: int) -> np.ndarray:
    """Fold index per sample: each class is shuffled then dealt round-robin.

    Requires every class to have at least ``n_folds`` members so that no
    fold misses a class.
    """
    if n_folds < 2:
        raise ParameterError(f"need at least 2 folds, got {n_folds}")
    labels_arr = np.array(list(labels), dtype=object)
    rng = np.random.default_rng(np.random.SeedSequence(seed % (1 << 64)))
    fold_of = np.empty(labels_arr.shape[0], dtype=np.int64)
    for cls in sorted(set(labels_arr)):
        idx = np.flatnonzero(labels_arr == cls)
        if idx.size < n_folds:
            raise StratificationError(
                f"class {cls!r} has {idx.size} samples, fewer than {n_folds} folds"
            )
        perm = rng.permutation(idx)
        fold_of[perm] = np.arange(perm.size) % n_folds
    return fold_of


def grid_search_c(
    kernel,
    labels: Sequence[str],
    c_grid: Sequence[float],
    folds: int = 5,
    seed: int = 0,
    class_names: Sequence[str] | None = None,
    tol: float = 1e-3,
    max_iter: int | None = None,
) -> tuple[float, np.ndarray]:
    """Pick C by stratified k-fold cross-validation on training data only.

    The score of a C value is the mean of per-fold held-out accuracies; ties
    resolve to the smallest C. Returns ``(best_c, cv_scores)`` with scores
    ordered like ``c_grid``.
    """
    k = _check_kernel(kernel)
    labels = list(labels)
    grid = [float(c) for c in c_grid]
    if not grid:
        raise ParameterError("c_grid must be non-empty")
    if any(c <= 0 for c in grid):
        raise ParameterError(f"c_grid must be strictly positive, got {grid}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterError(f"c_grid must be strictly increasing, got {grid}")
    fold_of = stratified_folds(labels, folds, seed)
    labels_arr = np.array(labels, dtype=object)

    scores = np.zeros(len(grid))
    for ci, c in enumerate(grid):
        fold_acc = []
        for f in range(folds):
            te = np.flatnonzero(fold_of == f)
            tr = np.flatnonzero(fold_of != f)
            model = train_multiclass_svm(
                k[np.ix_(tr, tr)], list(labels_arr[tr]), c,
                class_names=class_names, tol=tol, max_iter=max_iter,
            )
            pred = predict_multiclass(model, k[np.ix_(te, tr)])
            fold_acc.append(float(np.mean(pred == labels_arr[te])))
        scores[ci] = float(np.mean(fold_acc))
    best = int(np.argmax(scores))
    return grid[best], scores


def save_svm(model: MulticlassSvmModel, path) -> None:
    """Serialize to a versioned .npz archive (round-trip stable)."""
    payload = {
        "format_version": np.int64(1),
        "class_names": np.array(model.class_names, dtype=np.str_),
        "n_train": np.int64(model.n_train),
        "pair_a": np.array([p.class_a for p in model.pairs], dtype=np.str_),
        "pair_b": np.array([p.class_b for p in model.pairs], dtype=np.str_),
    }
    for i, p in enumerate(model.pairs):
        payload[f"p{i}_indices"] = p.indices
        payload[f"p{i}_support"] = p.model.support_indices
        payload[f"p{i}_dual"] = p.model.dual_coefs
        payload[f"p{i}_scalars"] = np.array(
            [p.model.bias, p.model.c, p.model.n_train, p.model.kkt_violation, p.model.n_iter]
        )
    np.savez_compressed(path, **payload)


def load_svm(path) -> MulticlassSvmModel:
    with np.load(path) as z:
        if int(z["format_version"]) != 1:
            raise ValidationError(f"unsupported svm file version {int(z['format_version'])}")
        pair_a = [str(a) for a in z["pair_a"]]
        pair_b = [str(b) for b in z["pair_b"]]
        pairs = []
        for i, (a, b) in enumerate(zip(pair_a, pair_b)):
            bias, c, n_train, kkt, n_iter = z[f"p{i}_scalars"]
            pairs.append(
                PairModel(
                    class_a=a,
                    class_b=b,
                    indices=z[f"p{i}_indices"],
                    model=BinarySvmModel(
                        support_indices=z[f"p{i}_support"],
                        dual_coefs=z[f"p{i}_dual"],
                        bias=float(bias),
                        c=float(c),
                        n_train=int(n_train),
                        kkt_violation=float(kkt),
                        n_iter=int(n_iter),
                    ),
                )
            )
        return MulticlassSvmModel(
            pairs=tuple(pairs),
            class_names=tuple(str(c) for c in z["class_names"]),
            n_train=int(z["n_train"]),
        )
