"""Handcrafted texture features for RGB histology tiles: PFTAS and GLCM.

PFTAS (parameter-free threshold adjacency statistics) works per channel:
the Otsu threshold T defines the foreground, whose mean mu and standard
deviation sigma define three binary masks

    M1 = channel > T            (above-threshold mask)
    M2 = mu - sigma < channel < mu + sigma
    M3 = channel > mu + sigma

For each mask and its bitwise complement, the statistic is the 9-bin
histogram of white pixels by their number of white 8-neighbors (pixels
outside the image are not white), normalized to sum to one; empty masks
yield all-zero histograms (0/0 -> 0). That is 6 x 9 = 54 values per channel
and 162 in total, channel order R, G, B.

GLCM features quantize the luma image (weights 0.299/0.587/0.114) to
``levels`` gray values by uniform binning of [0, 256), build the symmetric
normalized co-occurrence matrix for each (distance, direction) pair over
the four directions 0/45/90/135 degrees, and compute the 13 classical
Haralick statistics per matrix (entropies in bits; degenerate denominators
yield 0). Output order is distance-major, direction-minor, feature-innermost.

Per-image extraction is pure and independent, so a corpus can fan out
across images; output row order is always sorted by sample id.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError, ParameterError, ValidationError
from .ingest import FeatureView, write_view

PFTAS_LENGTH = 162
HARALICK_FEATURE_NAMES = (
    "asm",
    "contrast",
    "correlation",
    "variance",
    "idm",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "imc1",
    "imc2",
)
# (row, col) steps for 0, 45, 90, 135 degrees at unit distance
GLCM_DIRECTIONS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))
MIN_IMAGE_SIDE = 16


@dataclass(frozen=True, eq=False)
class TextureFeatures:
    pftas: np.ndarray
    glcm: np.ndarray

    @property
    def combined(self) -> np.ndarray:
        return np.concatenate([self.pftas, self.glcm])


@dataclass(frozen=True)
class CorpusFailure:
    sample_id: str
    image_path: str
    error: str


@dataclass(frozen=True)
class CorpusReport:
    n_extracted: int
    failures: tuple[CorpusFailure, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def validate_rgb_image(image) -> np.ndarray:
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValidationError(
            f"expected an HxWx3 uint8 image, got shape {img.shape} dtype {img.dtype}"
        )
    if img.shape[0] < MIN_IMAGE_SIDE or img.shape[1] < MIN_IMAGE_SIDE:
        raise ValidationError(
            f"image must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE} pixels, "
            f"got {img.shape[0]}x{img.shape[1]}"
        )
    return img


def decode_image(path) -> np.ndarray:
    """Decode an 8-bit RGB PNG or TIFF into an HxWx3 uint8 array."""
    try:
        with Image.open(path) as im:
            if im.mode not in ("RGB", "RGBA", "P", "L"):
                raise ValidationError(f"{path}: unsupported image mode {im.mode!r} (need 8-bit RGB)")
            arr = np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise FormatError(f"{path}: cannot decode image: {exc}") from exc
    return validate_rgb_image(arr)


def otsu_threshold(channel: np.ndarray) -> int:
    """Threshold T maximizing between-class variance; foreground is ``channel > T``.

    Ties resolve to the lowest maximizing threshold. A constant channel
    returns its single value (empty foreground either way).
    """
    ch = np.asarray(channel)
    if ch.dtype != np.uint8 or ch.ndim != 2:
        raise ValidationError(f"expected a 2-D uint8 channel, got shape {ch.shape} dtype {ch.dtype}")
    lo, hi = int(ch.min()), int(ch.max())
    if lo == hi:
        return lo
    hist = np.bincount(ch.ravel(), minlength=256).astype(np.float64)
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)
    w1 = w0[-1] - w0
    mass = np.cumsum(hist * levels)
    mu0 = np.divide(mass, w0, out=np.zeros(256), where=w0 > 0)
    mu1 = np.divide(mass[-1] - mass, w1, out=np.zeros(256), where=w1 > 0)
    between = w0 * w1 * (mu0 - mu1) ** 2
    return int(np.argmax(between))


def _white_neighbor_counts(mask: np.ndarray) -> np.ndarray:
    """Number of white 8-neighbors per pixel; outside the image counts as black."""
    padded = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=np.int64)
    padded[1:-1, 1:-1] = mask
    counts = np.zeros(mask.shape, dtype=np.int64)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            counts += padded[1 + dr : padded.shape[0] - 1 + dr, 1 + dc : padded.shape[1] - 1 + dc]
    return counts


def _adjacency_histogram(mask: np.ndarray) -> np.ndarray:
    counts = _white_neighbor_counts(mask)[mask]
    if counts.size == 0:
        return np.zeros(9)
    hist = np.bincount(counts, minlength=9).astype(np.float64)
    return hist / counts.size


def pftas_extract(image) -> np.ndarray:
    """162-value PFTAS vector (54 per channel, order R, G, B)."""
    img = validate_rgb_image(image)
    out = []
    for c in range(3):
        ch = img[:, :, c]
        t = otsu_threshold(ch)
        fg = ch > t
        if fg.any():
            pix = ch[fg].astype(np.float64)
            mu, sigma = float(pix.mean()), float(pix.std())
        else:
            mu, sigma = 0.0, 0.0
        masks = (
            fg,
            (ch > mu - sigma) & (ch < mu + sigma),
            ch > mu + sigma,
        )
        for m in masks:
            out.append(_adjacency_histogram(m))
        for m in masks:
            out.append(_adjacency_histogram(~m))
    return np.concatenate(out)


def rgb_to_quantized(image, levels: int) -> np.ndarray:
    """Luma conversion then uniform quantization of [0, 256) into ``levels`` bins."""
    img = validate_rgb_image(image)
    if levels < 2:
        raise ParameterError(f"quantization_levels must be >= 2, got {levels}")
    # integer-weighted Rec.601 luma: exact for equal-channel pixels, where
    # 0.299+0.587+0.114 in floats would land one ulp below 1
    weighted = (
        299 * img[:, :, 0].astype(np.int64)
        + 587 * img[:, :, 1].astype(np.int64)
        + 114 * img[:, :, 2].astype(np.int64)
    )
    gray = weighted.astype(np.float64) / 1000.0
    q = np.floor(gray * levels / 256.0).astype(np.int64)
    return np.clip(q, 0, levels - 1)


def cooccurrence_matrix(quantized: np.ndarray, levels: int, offset: tuple[int, int]) -> np.ndarray:
    """Symmetric normalized co-occurrence matrix for one (row, col) offset."""
    q = np.asarray(quantized, dtype=np.int64)
    dr, dc = offset
    h, w = q.shape
    r0, r1 = max(0, -dr), min(h, h - dr)
    c0, c1 = max(0, -dc), min(w, w - dc)
    a = q[r0:r1, c0:c1].ravel()
    b = q[r0 + dr : r1 + dr, c0 + dc : c1 + dc].ravel()
    counts = np.bincount(a * levels + b, minlength=levels * levels).reshape(levels, levels)
    counts = counts + counts.T
    total = counts.sum()
    if total == 0:
        raise ParameterError(f"offset {offset} leaves no pixel pairs in a {h}x{w} image")
    return counts.astype(np.float64) / total


def haralick_features(p: np.ndarray) -> np.ndarray:
    """The 13 classical statistics of a normalized symmetric co-occurrence matrix."""
    g = p.shape[0]
    i = np.arange(g, dtype=np.float64)
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mu_x = float(i @ px)
    mu_y = float(i @ py)
    sigma_x = float(np.sqrt(((i - mu_x) ** 2) @ px))
    sigma_y = float(np.sqrt(((i - mu_y) ** 2) @ py))

    k_sum = np.arange(2 * g - 1, dtype=np.float64)
    p_sum = np.zeros(2 * g - 1)
    k_diff = np.arange(g, dtype=np.float64)
    p_diff = np.zeros(g)
    ii, jj = np.meshgrid(np.arange(g), np.arange(g), indexing="ij")
    np.add.at(p_sum, (ii + jj).ravel(), p.ravel())
    np.add.at(p_diff, np.abs(ii - jj).ravel(), p.ravel())

    def ent(values):
        v = values[values > 0]
        return float(-(v @ np.log2(v)))

    asm = float((p * p).sum())
    contrast = float((k_diff**2) @ p_diff)
    if sigma_x > 0 and sigma_y > 0:
        correlation = float(((ii - mu_x) * (jj - mu_y) * p).sum() / (sigma_x * sigma_y))
    else:
        correlation = 0.0
    variance = float((((ii - mu_x) ** 2) * p).sum())
    idm = float((p / (1.0 + (ii - jj) ** 2)).sum())
    sum_average = float(k_sum @ p_sum)
    sum_variance = float(((k_sum - sum_average) ** 2) @ p_sum)
    sum_entropy = ent(p_sum)
    entropy = ent(p.ravel())
    mu_diff = float(k_diff @ p_diff)
    difference_variance = float(((k_diff - mu_diff) ** 2) @ p_diff)
    difference_entropy = ent(p_diff)

    hx = ent(px)
    hy = ent(py)
    pxy = np.outer(px, py)
    valid = (p > 0) & (pxy > 0)
    hxy1 = float(-(p[valid] @ np.log2(pxy[valid])))
    hxy2 = ent(pxy.ravel())
    denom = max(hx, hy)
    imc1 = (entropy - hxy1) / denom if denom > 0 else 0.0
    imc2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - entropy)))))

    return np.array(
        [
            asm,
            contrast,
            correlation,
            variance,
            idm,
            sum_average,
            sum_variance,
            sum_entropy,
            entropy,
            difference_variance,
            difference_entropy,
            imc1,
            imc2,
        ]
    )


def glcm_extract(image, distances: Sequence[int] = (1,), quantization_levels: int = 256) -> np.ndarray:
    """13 Haralick features per (distance, direction); 52 values per distance."""
    img = validate_rgb_image(image)
    distances = tuple(int(d) for d in distances)
    if not distances:
        raise ParameterError("need at least one distance")
    limit = min(img.shape[0], img.shape[1])
    for d in distances:
        if d < 1 or d >= limit:
            raise ParameterError(f"distance {d} must be >= 1 and < min(height, width) = {limit}")
    q = rgb_to_quantized(img, quantization_levels)
    out = []
    for d in distances:
        for dr, dc in GLCM_DIRECTIONS:
            p = cooccurrence_matrix(q, quantization_levels, (dr * d, dc * d))
            out.append(haralick_features(p))
    return np.concatenate(out)


def extract_features(
    image, distances: Sequence[int] = (1,), quantization_levels: int = 256
) -> TextureFeatures:
    return TextureFeatures(
        pftas=pftas_extract(image),
        glcm=glcm_extract(image, distances=distances, quantization_levels=quantization_levels),
    )


def pftas_feature_names() -> tuple[str, ...]:
    names = []
    for ch in "rgb":
        for mask in ("m1", "m2", "m3", "m1c", "m2c", "m3c"):
            for b in range(9):
                names.append(f"pftas_{ch}_{mask}_b{b}")
    return tuple(names)


def glcm_feature_names(distances: Sequence[int]) -> tuple[str, ...]:
    names = []
    for d in distances:
        for angle in (0, 45, 90, 135):
            for feat in HARALICK_FEATURE_NAMES:
                names.append(f"glcm_d{d}_a{angle}_{feat}")
    return tuple(names)


def load_manifest(path) -> list[tuple[str, Path]]:
    """Parse a ``sample_id,image_path`` CSV; paths resolve relative to the manifest."""
    base = Path(path).parent
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh)]
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: empty file, expected a header row")
    header = [c.strip() for c in rows[0]]
    if header != ["sample_id", "image_path"]:
        raise FormatError(f"{path}: header must be 'sample_id,image_path', got {header}")
    entries, seen = [], set()
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise FormatError(f"{path}: line {r}: expected 2 cells, found {len(row)}")
        sid, p = row[0].strip(), row[1].strip()
        if sid in seen:
            raise ValidationError(f"{path}: line {r}: duplicate sample id {sid!r}")
        seen.add(sid)
        entries.append((sid, base / p))
    return entries


def extract_corpus(
    manifest_path,
    out_path,
    distances: Sequence[int] = (1,),
    quantization_levels: int = 256,
    view_name: str = "handcrafted",
) -> CorpusReport:
    """Extract PFTAS+GLCM for every manifest image into one view file.

    Rows are written in sample-id order. Unreadable or invalid images are
    collected into the report and skipped; the remaining rows are still
    written, and an empty manifest yields a header-only file.
    """
    entries = sorted(load_manifest(manifest_path), key=lambda e: e[0])
    names = pftas_feature_names() + glcm_feature_names(distances)
    ids, rows, failures = [], [], []
    for sid, img_path in entries:
        try:
            img = decode_image(img_path)
            feats = extract_features(
                img, distances=distances, quantization_levels=quantization_levels
            )
        except (FormatError, ValidationError, ParameterError) as exc:
            failures.append(CorpusFailure(sample_id=sid, image_path=str(img_path), error=str(exc)))
            continue
        ids.append(sid)
        rows.append(feats.combined)
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    view = FeatureView(
        view_name=view_name, sample_ids=tuple(ids), matrix=matrix, feature_names=names
    )
    write_view(view, out_path)
    return CorpusReport(n_extracted=len(ids), failures=tuple(failures))
