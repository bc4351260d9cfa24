"""Manifest-driven embedding export into the view-file format.

The interchange formats are the ones the classification pipeline documents:
a manifest CSV (``sample_id,image_path``, paths relative to the manifest)
in, and a view CSV (header ``sample_id`` + feature names, one row per
sample, repr-formatted reals) out. Output rows are sorted by sample id, and
inference runs in eval mode, so two runs over the same manifest produce
identical files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from .extractors import ExtractorSpec, build_extractor, get_spec


@dataclass(frozen=True)
class ExtractFailure:
    sample_id: str
    image_path: str
    error: str


@dataclass(frozen=True)
class ExtractReport:
    extractor: str
    n_extracted: int
    output_dim: int
    failures: tuple[ExtractFailure, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def load_manifest(path) -> list[tuple[str, Path]]:
    base = Path(path).parent
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh)]
    if not rows:
        raise ValueError(f"{path}: empty file, expected a header row")
    header = [c.strip() for c in rows[0]]
    if header != ["sample_id", "image_path"]:
        raise ValueError(f"{path}: header must be 'sample_id,image_path', got {header}")
    entries, seen = [], set()
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ValueError(f"{path}: line {r}: expected 2 cells, found {len(row)}")
        sid = row[0].strip()
        if sid in seen:
            raise ValueError(f"{path}: line {r}: duplicate sample id {sid!r}")
        seen.add(sid)
        entries.append((sid, base / row[1].strip()))
    return entries


def _load_image(path, spec: ExtractorSpec) -> torch.Tensor:
    """Decode, resize to the square network input, normalize per convention."""
    with Image.open(path) as im:
        rgb = im.convert("RGB").resize((spec.input_size, spec.input_size), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - np.array(spec.mean, dtype=np.float32)) / np.array(spec.std, dtype=np.float32)
    return torch.from_numpy(arr.transpose(2, 0, 1))


def extract_deep_view(
    manifest_path,
    extractor: str | ExtractorSpec,
    out_path,
    weights_dir=None,
    untrained: bool = False,
    batch_size: int = 8,
) -> ExtractReport:
    """Run every manifest image through the network and write one view file.

    Unreadable images are collected into the report and skipped; remaining
    rows are still written in sample-id order. An empty manifest produces a
    header-only file.
    """
    spec = get_spec(extractor) if isinstance(extractor, str) else extractor
    entries = sorted(load_manifest(manifest_path), key=lambda e: e[0])
    model = build_extractor(spec, weights_dir=weights_dir, untrained=untrained)

    ids: list[str] = []
    tensors: list[torch.Tensor] = []
    failures: list[ExtractFailure] = []
    for sid, img_path in entries:
        try:
            tensors.append(_load_image(img_path, spec))
            ids.append(sid)
        except (UnidentifiedImageError, OSError) as exc:
            failures.append(ExtractFailure(sid, str(img_path), str(exc)))

    rows = np.empty((len(ids), spec.output_dim), dtype=np.float64)
    with torch.no_grad():
        for start in range(0, len(tensors), batch_size):
            batch = torch.stack(tensors[start : start + batch_size])
            out = model(batch)
            if out.shape[1] != spec.output_dim:
                raise RuntimeError(
                    f"{spec.name} produced {out.shape[1]} features, expected {spec.output_dim}"
                )
            rows[start : start + batch.shape[0]] = out.double().numpy()

    _write_view(out_path, ids, rows, spec)
    return ExtractReport(
        extractor=spec.name,
        n_extracted=len(ids),
        output_dim=spec.output_dim,
        failures=tuple(failures),
    )


def _write_view(path, ids, rows, spec: ExtractorSpec) -> None:
    width = len(str(max(spec.output_dim - 1, 0)))
    names = [f"{spec.name}_{j:0{width}d}" for j in range(spec.output_dim)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", *names])
        for sid, row in zip(ids, rows):
            w.writerow([sid, *(repr(float(x)) for x in row)])


def verify_view_compat(view_path) -> tuple[bool, list[str]]:
    """Re-parse an emitted file under the view-file rules.

    Returns ``(ok, diagnostics)``: dimension consistency, id uniqueness, and
    finiteness of every value, with one diagnostic string per violation.
    """
    diagnostics: list[str] = []
    try:
        with open(view_path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh)]
    except OSError as exc:
        return False, [f"unreadable: {exc}"]
    if not rows:
        return False, ["empty file, expected a header row"]
    header = rows[0]
    if not header or header[0].strip() != "sample_id":
        diagnostics.append("first header cell must be 'sample_id'")
        return False, diagnostics
    n_features = len(header) - 1
    if n_features < 1:
        diagnostics.append("no feature columns")
    seen: set[str] = set()
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            diagnostics.append(
                f"line {r}: dimension mismatch ({len(row) - 1} values, expected {n_features})"
            )
            continue
        sid = row[0].strip()
        if sid in seen:
            diagnostics.append(f"line {r}: duplicate sample id {sid!r}")
        seen.add(sid)
        for j, cell in enumerate(row[1:], start=1):
            try:
                value = float(cell)
            except ValueError:
                diagnostics.append(f"line {r}, column {j}: {cell!r} is not numeric")
                continue
            if not np.isfinite(value):
                diagnostics.append(f"line {r}, column {j}: {cell!r} is not finite")
    return not diagnostics, diagnostics
