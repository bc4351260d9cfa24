"""Generate the stored texture test corpus and its golden feature vectors.

Run from the repository root:

    python3 tests/golden/generate_golden.py

Creates ``texture_tiles.npz`` (10 synthetic histology-like RGB tiles) and
``texture_golden.npz`` (PFTAS + GLCM vectors for each tile). The golden
vectors are computed exclusively by the naive per-pixel reference
implementations in tests/oracles.py, never by the production code, so the
stored values stay an independent check. Regenerating is only needed if the
documented feature definitions change.
"""

import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))  # tests/ for oracles

from oracles import naive_glcm, naive_pftas  # noqa: E402

TILE_SIZE = 64
N_TILES = 10
GLCM_DISTANCES = (1, 2)
GLCM_LEVELS = 32


def make_tile(rng):
    """Pinkish background with darker nucleus-like blobs plus grain."""
    h = w = TILE_SIZE
    base = np.array([225.0, 170.0, 205.0])
    nucleus = np.array([120.0, 60.0, 150.0])
    img = np.ones((h, w, 3)) * base + rng.normal(0, 12, size=(h, w, 3))
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(int(rng.integers(6, 14))):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        radius = rng.uniform(3, 9)
        blob = np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * radius**2)))
        img += blob[:, :, None] * (nucleus - base) * rng.uniform(0.7, 1.1)
    return np.clip(img, 0, 255).astype(np.uint8)


def main():
    rng = np.random.default_rng(20240817)
    tiles = np.stack([make_tile(rng) for _ in range(N_TILES)])
    np.savez_compressed(HERE / "texture_tiles.npz", tiles=tiles)

    pftas_rows, glcm_rows = [], []
    for i, tile in enumerate(tiles):
        print(f"tile {i}: naive pftas + glcm ...", flush=True)
        pftas_rows.append(naive_pftas(tile))
        glcm_rows.append(naive_glcm(tile, distances=GLCM_DISTANCES, levels=GLCM_LEVELS))
    np.savez_compressed(
        HERE / "texture_golden.npz",
        pftas=np.stack(pftas_rows),
        glcm=np.stack(glcm_rows),
        glcm_distances=np.array(GLCM_DISTANCES),
        glcm_levels=np.int64(GLCM_LEVELS),
    )
    print("wrote", HERE / "texture_tiles.npz")
    print("wrote", HERE / "texture_golden.npz")


if __name__ == "__main__":
    main()
