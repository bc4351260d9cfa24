"""Loading, validation and alignment of multi-view datasets.

A *view* is one feature group over a common sample set, stored on disk as a
CSV file whose first header cell is ``sample_id`` and whose remaining header
cells name the feature columns. Labels live in a two-column CSV
(``sample_id,label``). All views of a dataset are aligned to one canonical
sample order (lexicographic by id) before anything downstream sees them.

Everything here is a pure function over immutable inputs; loaded views and
datasets are safe to share across threads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    AlignmentError,
    FormatError,
    LabelError,
    ParameterError,
    ParseError,
    ValidationError,
)

DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)


@dataclass(frozen=True, eq=False)
class FeatureView:
    """One view's N x d feature matrix with aligned sample ids.

    Invariants, enforced at construction: the matrix has one row per sample
    id, ids are unique within the view, and every entry is finite.
    """

    view_name: str
    sample_ids: tuple[str, ...]
    matrix: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.float64))
        if m.ndim != 2:
            raise ValidationError(
                f"view {self.view_name!r}: matrix must be 2-D, got shape {m.shape}"
            )
        if m.shape[1] < 1:
            raise ValidationError(f"view {self.view_name!r}: needs at least one feature column")
        ids = tuple(self.sample_ids)
        if m.shape[0] != len(ids):
            raise ValidationError(
                f"view {self.view_name!r}: {m.shape[0]} rows but {len(ids)} sample ids"
            )
        dupes = _duplicates(ids)
        if dupes:
            raise ValidationError(f"view {self.view_name!r}: duplicate sample ids {dupes}")
        if m.size and not np.all(np.isfinite(m)):
            bad = np.argwhere(~np.isfinite(m))[0]
            raise ValidationError(
                f"view {self.view_name!r}: non-finite value at row {bad[0]}, column {bad[1]}"
            )
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != m.shape[1]:
                raise ValidationError(
                    f"view {self.view_name!r}: {len(names)} feature names for {m.shape[1]} columns"
                )
            object.__setattr__(self, "feature_names", names)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "sample_ids", ids)

    @property
    def n_samples(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.matrix.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FeatureView):
            return NotImplemented
        return (
            self.view_name == other.view_name
            and self.sample_ids == other.sample_ids
            and np.array_equal(self.matrix, other.matrix)
        )

    def reordered(self, order: Sequence[int]) -> "FeatureView":
        """Copy of this view with rows permuted by ``order``."""
        idx = np.asarray(order)
        return FeatureView(
            view_name=self.view_name,
            sample_ids=tuple(self.sample_ids[i] for i in idx),
            matrix=self.matrix[idx],
            feature_names=self.feature_names,
        )


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """K aligned views plus one label per sample.

    All views share the same sample ids in the same (canonical) order;
    ``labels[i]`` belongs to ``sample_ids[i]``; ``class_names`` is the sorted
    set of distinct labels.
    """

    views: tuple[FeatureView, ...]
    sample_ids: tuple[str, ...]
    labels: tuple[str, ...]
    class_names: tuple[str, ...]

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def view_names(self) -> tuple[str, ...]:
        return tuple(v.view_name for v in self.views)

    def view(self, name: str) -> FeatureView:
        for v in self.views:
            if v.view_name == name:
                return v
        raise ParameterError(f"unknown view {name!r}; have {list(self.view_names)}")

    def label_indices(self) -> np.ndarray:
        """Labels as integer indices into class_names."""
        lut = {c: i for i, c in enumerate(self.class_names)}
        return np.array([lut[l] for l in self.labels], dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.sample_ids == other.sample_ids
            and self.labels == other.labels
            and self.class_names == other.class_names
            and len(self.views) == len(other.views)
            and all(a == b for a, b in zip(self.views, other.views))
        )


@dataclass(frozen=True)
class RunConfig:
    """Knobs for the full experimental protocol.

    ``mtry`` is either a positive integer or the string ``"sqrt"`` meaning
    floor(sqrt(d)) per view. ``smo_max_iter=None`` derives the SMO iteration
    cap from a 1e7 kernel-evaluation budget at train time.
    """

    n_trees: int = 500
    train_fraction: float = 0.75
    n_repeats: int = 10
    c_grid: tuple[float, ...] = DEFAULT_C_GRID
    rng_seed: int = 0
    mtry: int | str = "sqrt"
    cv_folds: int = 5
    psd_repair: bool = False
    smo_tol: float = 1e-3
    smo_max_iter: int | None = None

    def __post_init__(self):
        if self.n_trees < 1:
            raise ParameterError(f"n_trees must be >= 1, got {self.n_trees}")
        if not (0.0 < self.train_fraction < 1.0):
            raise ParameterError(f"train_fraction must be in (0,1), got {self.train_fraction}")
        if self.n_repeats < 1:
            raise ParameterError(f"n_repeats must be >= 1, got {self.n_repeats}")
        grid = tuple(float(c) for c in self.c_grid)
        if not grid:
            raise ParameterError("c_grid must be non-empty")
        if any(c <= 0 for c in grid):
            raise ParameterError(f"c_grid must be strictly positive, got {grid}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ParameterError(f"c_grid must be strictly increasing, got {grid}")
        object.__setattr__(self, "c_grid", grid)
        if isinstance(self.mtry, str):
            if self.mtry != "sqrt":
                raise ParameterError(f"mtry must be a positive integer or 'sqrt', got {self.mtry!r}")
        elif int(self.mtry) < 1:
            raise ParameterError(f"mtry must be >= 1, got {self.mtry}")
        if self.cv_folds < 2:
            raise ParameterError(f"cv_folds must be >= 2, got {self.cv_folds}")
        if self.smo_tol <= 0:
            raise ParameterError(f"smo_tol must be > 0, got {self.smo_tol}")

    def with_overrides(self, **kwargs) -> "RunConfig":
        """New config with the given fields replaced (None values ignored)."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates)


def resolve_mtry(mtry: int | str | None, n_features: int) -> int:
    """Number of candidate features per split: 'sqrt'/None -> floor(sqrt(d)), min 1."""
    if mtry is None or mtry == "sqrt":
        return max(1, math.isqrt(n_features))
    m = int(mtry)
    if not (1 <= m <= n_features):
        raise ParameterError(f"mtry must be in [1, {n_features}], got {m}")
    return m


def _duplicates(items: Sequence[str]) -> list[str]:
    seen, dup = set(), []
    for x in items:
        if x in seen and x not in dup:
            dup.append(x)
        seen.add(x)
    return dup


def _read_csv_rows(path) -> list[list[str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return [row for row in csv.reader(fh)]
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def load_view(path, view_name: str | None = None) -> FeatureView:
    """Parse a view file into a validated FeatureView.

    The header's first cell must be ``sample_id``; every other header cell is
    a feature name. Cells must parse as finite reals; the error for a bad
    cell names its line and column.
    """
    rows = _read_csv_rows(path)
    if not rows:
        raise FormatError(f"{path}: empty file, expected a header row")
    header = [c.strip() for c in rows[0]]
    if not header or header[0] != "sample_id":
        raise FormatError(f"{path}: first header cell must be 'sample_id', got {header[:1]}")
    if len(header) < 2:
        raise FormatError(f"{path}: view file needs at least one feature column")
    feature_names = tuple(header[1:])
    ids: list[str] = []
    data = np.empty((len(rows) - 1, len(feature_names)), dtype=np.float64)
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}: line {r}: expected {len(header)} cells, found {len(row)}")
        ids.append(row[0].strip())
        for j, cell in enumerate(row[1:]):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: line {r}, column {feature_names[j]!r}: {cell!r} is not numeric"
                ) from None
            if not math.isfinite(value):
                raise ParseError(
                    f"{path}: line {r}, column {feature_names[j]!r}: {cell!r} is not finite"
                )
            data[r - 2, j] = value
    name = view_name if view_name is not None else Path(path).stem
    return FeatureView(view_name=name, sample_ids=tuple(ids), matrix=data,
                       feature_names=feature_names)


def write_view(view: FeatureView, path) -> None:
    """Write a view file that reparses to a bitwise-identical FeatureView.

    Values are written with repr(), which round-trips doubles exactly.
    """
    names = view.feature_names or tuple(f"f{j}" for j in range(view.n_features))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", *names])
        for i, sid in enumerate(view.sample_ids):
            w.writerow([sid, *(repr(float(x)) for x in view.matrix[i])])


def load_labels(path) -> dict[str, str]:
    """Parse a ``sample_id,label`` CSV into an id -> label mapping."""
    rows = _read_csv_rows(path)
    if not rows:
        raise FormatError(f"{path}: empty file, expected a header row")
    header = [c.strip() for c in rows[0]]
    if header != ["sample_id", "label"]:
        raise FormatError(f"{path}: header must be 'sample_id,label', got {header}")
    labels: dict[str, str] = {}
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise FormatError(f"{path}: line {r}: expected 2 cells, found {len(row)}")
        sid, label = row[0].strip(), row[1].strip()
        if sid in labels:
            raise ValidationError(f"{path}: line {r}: duplicate sample id {sid!r}")
        if not label:
            raise LabelError(f"{path}: line {r}: empty label for sample {sid!r}")
        labels[sid] = label
    return labels


def assemble_dataset(views: Sequence[FeatureView], labels) -> LabeledDataset:
    """Align views to the canonical sample order and attach labels.

    ``labels`` is either an id -> label mapping or a path to a labels file.
    Every view must contain exactly the same id set; the canonical order is
    lexicographic by sample id, and class names are sorted lexicographically.
    Row order of the inputs is irrelevant: permuting any view's rows yields
    an identical dataset.
    """
    views = list(views)
    if not views:
        raise ParameterError("need at least one view")
    if not isinstance(labels, Mapping):
        labels = load_labels(labels)

    id_sets = [set(v.sample_ids) for v in views]
    universe = set.union(*id_sets)
    problems = []
    for v, s in zip(views, id_sets):
        missing = sorted(universe - s)
        if missing:
            shown = ", ".join(missing[:10]) + ("..." if len(missing) > 10 else "")
            problems.append(f"view {v.view_name!r} is missing ids: {shown}")
    if problems:
        raise AlignmentError("; ".join(problems))

    canonical = sorted(universe)
    if len(canonical) < 2:
        raise ValidationError(f"need at least 2 samples, got {len(canonical)}")
    unlabeled = [sid for sid in canonical if sid not in labels]
    if unlabeled:
        shown = ", ".join(unlabeled[:10]) + ("..." if len(unlabeled) > 10 else "")
        raise LabelError(f"no label for ids: {shown}")

    aligned = []
    for v in views:
        pos = {sid: i for i, sid in enumerate(v.sample_ids)}
        aligned.append(v.reordered([pos[sid] for sid in canonical]))

    ordered_labels = tuple(labels[sid] for sid in canonical)
    class_names = tuple(sorted(set(ordered_labels)))
    if len(class_names) < 2:
        raise ValidationError(f"need at least 2 classes, got {class_names}")
    return LabeledDataset(
        views=tuple(aligned),
        sample_ids=tuple(canonical),
        labels=ordered_labels,
        class_names=class_names,
    )


_CONFIG_PARSERS = {
    "n_trees": int,
    "train_fraction": float,
    "n_repeats": int,
    "c_grid": lambda s: tuple(float(x) for x in s.split(",") if x.strip()),
    "rng_seed": int,
    "mtry": lambda s: s if s == "sqrt" else int(s),
    "cv_folds": int,
    "psd_repair": lambda s: {"true": True, "false": False}[s.lower()],
    "smo_tol": float,
    "smo_max_iter": lambda s: None if s.lower() == "none" else int(s),
}


def load_config(path) -> RunConfig:
    """Parse a flat ``key = value`` config file into a RunConfig.

    Blank lines and ``#`` comments are ignored; unknown keys are an error.
    ``c_grid`` is a comma-separated list.
    """
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}: line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_PARSERS:
            known = ", ".join(sorted(_CONFIG_PARSERS))
            raise FormatError(f"{path}: line {lineno}: unknown key {key!r} (known: {known})")
        try:
            values[key] = _CONFIG_PARSERS[key](value)
        except (ValueError, KeyError):
            raise FormatError(f"{path}: line {lineno}: bad value {value!r} for {key!r}") from None
    return RunConfig(**values)


def config_field_names() -> tuple[str, ...]:
    return tuple(f.name for f in fields(RunConfig))
