import numpy as np
import pytest

from rfsvm import FeatureView, train_forest


def make_blobs(rng, centers, n_per, scale=0.8):
    """Gaussian class blobs; returns (X, labels) with labels c0..c{k-1}."""
    centers = np.asarray(centers, dtype=np.float64)
    X = np.vstack([rng.normal(c, scale, size=(n_per, centers.shape[1])) for c in centers])
    labels = [f"c{k}" for k in range(centers.shape[0]) for _ in range(n_per)]
    return X, labels


def make_view(X, name="v", prefix="s"):
    ids = tuple(f"{prefix}{i:04d}" for i in range(X.shape[0]))
    return FeatureView(view_name=name, sample_ids=ids, matrix=X)


def small_forest(seed=0, n=40, n_trees=10, d=3, n_classes=2, mtry=None):
    """A small trained forest plus its training view, for matrix tests."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-4, 4, size=(n_classes, d))
    X, labels = make_blobs(rng, centers, n // n_classes, scale=1.0)
    model = train_forest(X, labels, n_trees=n_trees, mtry=mtry or "sqrt", seed=seed)
    return model, make_view(X)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
