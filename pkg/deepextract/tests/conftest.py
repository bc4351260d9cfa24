import csv

import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def manifest(tmp_path):
    """Three small RGB images plus their manifest file."""
    rng = np.random.default_rng(0)
    rows = [("sample_id", "image_path")]
    for i in range(3):
        name = f"img{i}.png"
        tile = rng.integers(0, 256, size=(48, 64, 3)).astype(np.uint8)
        Image.fromarray(tile).save(tmp_path / name)
        rows.append((f"s{i}", name))
    path = tmp_path / "manifest.csv"
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    return path
