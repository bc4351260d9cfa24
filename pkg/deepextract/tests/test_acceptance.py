"""Acceptance: emitted view files carry each extractor's documented width
and pass the classification pipeline's ingest validation.

Checkpoints are not downloadable here, so networks run with fixed-seed
untrained weights; widths and file format do not depend on weight values.
"""

import importlib.util

import pytest

from deepextract import SPECS, extract_deep_view, verify_view_compat

HAS_NASNET_BACKEND = importlib.util.find_spec("pretrainedmodels") is not None

EXPECTED_DIMS = {
    "resnet18": 512,
    "resnet152": 2048,
    "resnext": 2048,
    "nasnet_a": 4032,
    "vgg16": 25088,
}


@pytest.mark.parametrize("name", sorted(EXPECTED_DIMS))
def test_criterion_extractor_dimensions(name, manifest, tmp_path):
    if name == "nasnet_a" and not HAS_NASNET_BACKEND:
        pytest.skip("nasnet_a backend (pretrainedmodels) not installed")
    assert SPECS[name].output_dim == EXPECTED_DIMS[name]
    out = tmp_path / f"{name}.csv"
    report = extract_deep_view(manifest, name, out, untrained=True, batch_size=2)
    assert report.ok
    assert report.output_dim == EXPECTED_DIMS[name]

    ok, diagnostics = verify_view_compat(out)
    assert ok, diagnostics

    rfsvm = pytest.importorskip("rfsvm")
    view = rfsvm.load_view(out, view_name=name)
    assert view.n_features == EXPECTED_DIMS[name]
    assert view.n_samples == 3
    print(f"PASS: {name} emits d={EXPECTED_DIMS[name]} and passes ingest validation")
