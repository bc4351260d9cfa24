"""End-to-end evaluation protocol: repeated stratified holdout, per-view
forest baselines, multi-view fusion runs, metrics and reports.

One seed fixes everything: the split plan, every forest's bagging and
feature sampling, and the fold assignment inside the C grid search all
derive from ``RunConfig.rng_seed`` through named SeedSequence spawn keys,
so two runs with the same inputs produce bit-identical reports, and the
baseline and fusion pipelines share the same splits (and per-view forests)
for paired comparison. No test row ever reaches forest training, fusion
statistics, or C selection.

Repeats are independent given their derived seeds and could run
concurrently; report assembly is deterministic.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError, StratificationError, ValidationError
from .forest import RandomForestModel, predict_forest, train_forest
from .ingest import FeatureView, LabeledDataset, RunConfig
from .rfd import (
    cross_dissimilarity,
    forest_dissimilarity_matrix,
    joint_cross_dissimilarity,
    joint_dissimilarity,
    psd_clip,
    similarity_from_dissimilarity,
)
from .svm import grid_search_c, predict_multiclass, train_multiclass_svm

_SPLIT_KEY = 0
_FOREST_KEY = 1
_GRID_KEY = 2


@dataclass(frozen=True, eq=False)
class SplitPlan:
    """Per-repeat (train_indices, test_indices) pairs into the dataset order."""

    repeats: tuple[tuple[np.ndarray, np.ndarray], ...]
    seed: int

    @property
    def n_repeats(self) -> int:
        return len(self.repeats)


@dataclass(frozen=True, eq=False)
class Metrics:
    confusion: np.ndarray
    sensitivity: np.ndarray
    specificity: np.ndarray
    accuracy: float


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Accuracies over all repeats plus best-run confusion-based metrics."""

    method: str
    view_names: tuple[str, ...]
    class_names: tuple[str, ...]
    per_run_accuracy: tuple[float, ...]
    mean_accuracy: float
    std_accuracy: float
    best_accuracy: float
    best_run_index: int
    confusion: np.ndarray
    sensitivity: np.ndarray
    specificity: np.ndarray

    def __post_init__(self):
        if not self.per_run_accuracy:
            raise ValidationError("a report needs at least one run")
        if not (0 <= self.best_run_index < len(self.per_run_accuracy)):
            raise ValidationError(
                f"best_run_index {self.best_run_index} out of range for "
                f"{len(self.per_run_accuracy)} runs"
            )
        if np.any(np.asarray(self.confusion) < 0):
            raise ValidationError("confusion entries must be nonnegative")


def _seed_from(root_seed: int, *path: int) -> int:
    ss = np.random.SeedSequence(root_seed % (1 << 64), spawn_key=tuple(path))
    return int(ss.generate_state(1, np.uint64)[0])


def stratified_split(
    labels: Sequence[str], train_fraction: float, n_repeats: int, seed: int
) -> SplitPlan:
    """Repeated stratified holdout: per class, a seeded shuffle then a cut.

    The per-class training count is round(train_fraction * class_count)
    (half away from zero), clamped so both sides keep at least one sample.
    Each repeat draws from its own derived sub-seed.
    """
    labels_arr = np.array(list(labels), dtype=object)
    if not (0.0 < train_fraction < 1.0):
        raise ParameterError(f"train_fraction must be in (0,1), got {train_fraction}")
    if n_repeats < 1:
        raise ParameterError(f"n_repeats must be >= 1, got {n_repeats}")
    classes = sorted(set(labels_arr))
    for cls in classes:
        count = int(np.sum(labels_arr == cls))
        if count < 2:
            raise StratificationError(f"class {cls!r} has only {count} sample(s)")

    repeats = []
    for r in range(n_repeats):
        rng = np.random.default_rng(
            np.random.SeedSequence(seed % (1 << 64), spawn_key=(_SPLIT_KEY, r))
        )
        train, test = [], []
        for cls in classes:
            idx = np.flatnonzero(labels_arr == cls)
            perm = rng.permutation(idx)
            n_tr = int(np.floor(train_fraction * idx.size + 0.5))
            n_tr = min(max(n_tr, 1), idx.size - 1)
            train.append(perm[:n_tr])
            test.append(perm[n_tr:])
        tr = np.sort(np.concatenate(train))
        te = np.sort(np.concatenate(test))
        repeats.append((tr, te))
    return SplitPlan(repeats=tuple(repeats), seed=seed)


def compute_metrics(true_labels, predicted_labels, class_names: Sequence[str]) -> Metrics:
    """Confusion matrix (rows = true, columns = predicted) and derived rates.

    sensitivity_c = TP/(TP+FN), specificity_c = TN/(TN+FP); empty
    denominators yield 0.
    """
    class_names = tuple(class_names)
    true_list = list(true_labels)
    pred_list = list(predicted_labels)
    if len(true_list) != len(pred_list):
        raise ValidationError(
            f"{len(true_list)} true labels vs {len(pred_list)} predictions"
        )
    pos = {c: i for i, c in enumerate(class_names)}
    unknown = sorted({l for l in true_list + pred_list if l not in pos})
    if unknown:
        raise ValidationError(f"labels {unknown} not in class_names {list(class_names)}")
    n_cls = len(class_names)
    confusion = np.zeros((n_cls, n_cls), dtype=np.int64)
    for t, p in zip(true_list, pred_list):
        confusion[pos[t], pos[p]] += 1

    total = confusion.sum()
    tp = np.diagonal(confusion).astype(np.float64)
    row = confusion.sum(axis=1).astype(np.float64)
    col = confusion.sum(axis=0).astype(np.float64)
    fn = row - tp
    fp = col - tp
    tn = total - row - col + tp
    sensitivity = np.divide(tp, tp + fn, out=np.zeros(n_cls), where=(tp + fn) > 0)
    specificity = np.divide(tn, tn + fp, out=np.zeros(n_cls), where=(tn + fp) > 0)
    accuracy = float(tp.sum() / total) if total else 0.0
    return Metrics(
        confusion=confusion, sensitivity=sensitivity, specificity=specificity, accuracy=accuracy
    )


def _build_report(method, view_names, class_names, runs) -> EvalReport:
    if not runs:
        raise ParameterError("need at least one run")
    accs = np.array([float(np.mean(np.array(p, dtype=object) == np.array(t, dtype=object)))
                     for t, p in runs])
    best = int(np.argmax(accs))
    metrics = compute_metrics(runs[best][0], runs[best][1], class_names)
    return EvalReport(
        method=method,
        view_names=tuple(view_names),
        class_names=tuple(class_names),
        per_run_accuracy=tuple(float(a) for a in accs),
        mean_accuracy=float(np.mean(accs)),
        std_accuracy=float(np.std(accs, ddof=1)) if accs.size > 1 else 0.0,
        best_accuracy=float(accs[best]),
        best_run_index=best,
        confusion=metrics.confusion,
        sensitivity=metrics.sensitivity,
        specificity=metrics.specificity,
    )


def _sub_view(view: FeatureView, ids, idx) -> FeatureView:
    return FeatureView(
        view_name=view.view_name,
        sample_ids=ids,
        matrix=view.matrix[idx],
        feature_names=view.feature_names,
    )


def _forest_digest(model: RandomForestModel) -> str:
    h = hashlib.sha256()
    for t in model.trees:
        for arr in (t.feature, t.threshold, t.left, t.right, t.leaf_id, t.leaf_histogram):
            h.update(arr.tobytes())
    return h.hexdigest()


def run_single_view_baseline(
    dataset: LabeledDataset,
    view_name: str,
    config: RunConfig = RunConfig(),
    split_plan: SplitPlan | None = None,
    trace: list | None = None,
) -> EvalReport:
    """Accuracy of a plain forest on one view over the shared split plan."""
    view = dataset.view(view_name)
    labels_arr = np.array(dataset.labels, dtype=object)
    plan = split_plan or stratified_split(
        dataset.labels, config.train_fraction, config.n_repeats, config.rng_seed
    )
    runs = []
    for r, (tr, te) in enumerate(plan.repeats):
        model = train_forest(
            view.matrix[tr],
            list(labels_arr[tr]),
            config.n_trees,
            mtry=config.mtry,
            seed=_seed_from(config.rng_seed, _FOREST_KEY, r),
            class_names=dataset.class_names,
        )
        pred = predict_forest(model, view.matrix[te])
        runs.append((list(labels_arr[te]), list(pred)))
        if trace is not None:
            trace.append({"repeat": r, "forest_digest": _forest_digest(model)})
    return _build_report(f"rf:{view_name}", (view_name,), dataset.class_names, runs)


def run_rfsvm(
    dataset: LabeledDataset,
    view_names: Sequence[str] | None = None,
    config: RunConfig = RunConfig(),
    split_plan: SplitPlan | None = None,
    trace: list | None = None,
) -> EvalReport:
    """The fusion pipeline over the named views (default: all views).

    Per repeat: train one forest per view on training rows only; build
    per-view training dissimilarity matrices and fuse them by elementwise
    mean; convert to the similarity kernel; grid-search C with stratified CV
    inside the training split; train the one-vs-one SVM; build and fuse
    test-vs-train cross blocks the same way; predict and score.
    """
    names = list(view_names) if view_names else list(dataset.view_names)
    if not names:
        raise ParameterError("need at least one view name")
    views = [dataset.view(n) for n in names]
    labels_arr = np.array(dataset.labels, dtype=object)
    plan = split_plan or stratified_split(
        dataset.labels, config.train_fraction, config.n_repeats, config.rng_seed
    )
    runs = []
    for r, (tr, te) in enumerate(plan.repeats):
        train_ids = tuple(dataset.sample_ids[i] for i in tr)
        test_ids = tuple(dataset.sample_ids[i] for i in te)
        train_labels = list(labels_arr[tr])
        # one derived seed per repeat, shared by every view's forest: the
        # baseline forest for a view then equals the fusion run's forest, and
        # duplicate views produce identical matrices (idempotent fusion)
        forest_seed = _seed_from(config.rng_seed, _FOREST_KEY, r)
        d_train, d_cross, digests = [], [], []
        for view in views:
            sub_tr = _sub_view(view, train_ids, tr)
            sub_te = _sub_view(view, test_ids, te)
            model = train_forest(
                sub_tr,
                train_labels,
                config.n_trees,
                mtry=config.mtry,
                seed=forest_seed,
                class_names=dataset.class_names,
            )
            d_train.append(forest_dissimilarity_matrix(model, sub_tr))
            d_cross.append(cross_dissimilarity(model, sub_tr, sub_te))
            digests.append(_forest_digest(model))
        fused_train = joint_dissimilarity(d_train)
        fused_cross = joint_cross_dissimilarity(d_cross)
        kernel_train = similarity_from_dissimilarity(fused_train)
        kernel_cross = similarity_from_dissimilarity(fused_cross)
        if config.psd_repair:
            kernel_train = psd_clip(kernel_train)

        best_c, cv_scores = grid_search_c(
            kernel_train,
            train_labels,
            config.c_grid,
            folds=config.cv_folds,
            seed=_seed_from(config.rng_seed, _GRID_KEY, r),
            class_names=dataset.class_names,
            tol=config.smo_tol,
            max_iter=config.smo_max_iter,
        )
        svm_model = train_multiclass_svm(
            kernel_train,
            train_labels,
            best_c,
            class_names=dataset.class_names,
            tol=config.smo_tol,
            max_iter=config.smo_max_iter,
        )
        pred = predict_multiclass(svm_model, kernel_cross)
        runs.append((list(labels_arr[te]), list(pred)))
        if trace is not None:
            trace.append(
                {
                    "repeat": r,
                    "forest_digests": digests,
                    "best_c": best_c,
                    "cv_scores": tuple(float(s) for s in cv_scores),
                }
            )
    return _build_report("rfsvm", names, dataset.class_names, runs)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "method": report.method,
        "view_names": list(report.view_names),
        "class_names": list(report.class_names),
        "per_run_accuracy": list(report.per_run_accuracy),
        "mean_accuracy": report.mean_accuracy,
        "std_accuracy": report.std_accuracy,
        "best_accuracy": report.best_accuracy,
        "best_run_index": report.best_run_index,
        "confusion": report.confusion.tolist(),
        "sensitivity": report.sensitivity.tolist(),
        "specificity": report.specificity.tolist(),
    }


def report_from_dict(d: dict) -> EvalReport:
    return EvalReport(
        method=d["method"],
        view_names=tuple(d["view_names"]),
        class_names=tuple(d["class_names"]),
        per_run_accuracy=tuple(d["per_run_accuracy"]),
        mean_accuracy=d["mean_accuracy"],
        std_accuracy=d["std_accuracy"],
        best_accuracy=d["best_accuracy"],
        best_run_index=d["best_run_index"],
        confusion=np.array(d["confusion"], dtype=np.int64),
        sensitivity=np.array(d["sensitivity"]),
        specificity=np.array(d["specificity"]),
    )


def reports_equal(a: EvalReport, b: EvalReport) -> bool:
    return report_to_dict(a) == report_to_dict(b)


def render_text(report: EvalReport) -> str:
    """Human-readable report: accuracy summary plus best-run confusion table."""
    lines = []
    lines.append(f"method: {report.method}")
    lines.append(f"views: {', '.join(report.view_names)}")
    lines.append(f"runs: {len(report.per_run_accuracy)}")
    lines.append("")
    lines.append(f"{'':<12}{'Average':>16}{'Best':>10}")
    avg = f"{report.mean_accuracy * 100:.2f}% ± {report.std_accuracy * 100:.2f}"
    lines.append(f"{'accuracy':<12}{avg:>16}{report.best_accuracy * 100:>9.2f}%")
    lines.append("")
    lines.append(f"best run: {report.best_run_index}")
    width = max(8, max(len(c) for c in report.class_names) + 2)
    header = f"{'':<{width}}" + "".join(f"{c:>{width}}" for c in report.class_names)
    lines.append("confusion matrix (rows = true, columns = predicted)")
    lines.append(header)
    for i, c in enumerate(report.class_names):
        row = "".join(f"{int(v):>{width}}" for v in report.confusion[i])
        lines.append(f"{c:<{width}}" + row)
    sens = "".join(f"{v * 100:>{width - 1}.2f}%" for v in report.sensitivity)
    spec = "".join(f"{v * 100:>{width - 1}.2f}%" for v in report.specificity)
    lines.append(f"{'sens.':<{width}}" + sens)
    lines.append(f"{'spec.':<{width}}" + spec)
    return "\n".join(lines) + "\n"


def emit_report(report: EvalReport, path, format: str = "json") -> None:
    """Write the report as a JSON document or as the text rendering."""
    if format == "json":
        payload = json.dumps(report_to_dict(report), indent=2) + "\n"
    elif format == "text":
        payload = render_text(report)
    else:
        raise ParameterError(f"format must be 'json' or 'text', got {format!r}")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
