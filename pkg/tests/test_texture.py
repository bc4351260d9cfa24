from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from rfsvm import (
    FormatError,
    ParameterError,
    ValidationError,
    decode_image,
    extract_corpus,
    extract_features,
    glcm_extract,
    load_view,
    otsu_threshold,
    pftas_extract,
)
from rfsvm.texture import (
    cooccurrence_matrix,
    glcm_feature_names,
    haralick_features,
    pftas_feature_names,
    rgb_to_quantized,
)
from oracles import naive_glcm, naive_otsu, naive_pftas

GOLDEN = Path(__file__).parent / "golden"


def rgb(channel):
    """Stack one channel into a gray RGB image."""
    ch = np.asarray(channel, dtype=np.uint8)
    return np.stack([ch, ch, ch], axis=-1)


def random_tile(seed, size=24):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(size, size, 3)).astype(np.uint8)


class TestOtsu:
    @settings(max_examples=60, deadline=None)
    @given(arrays(np.uint8, (12, 14), elements=st.integers(0, 255)))
    def test_matches_skimage(self, channel):
        from skimage.filters import threshold_otsu

        if channel.min() == channel.max():
            assert otsu_threshold(channel) == int(channel.min())
        else:
            assert otsu_threshold(channel) == int(threshold_otsu(channel))

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            ch = rng.integers(0, 256, size=(10, 10)).astype(np.uint8)
            assert otsu_threshold(ch) == naive_otsu(ch)

    def test_constant_channel(self):
        assert otsu_threshold(np.full((16, 16), 77, dtype=np.uint8)) == 77


class TestPftas:
    @pytest.mark.parametrize("seed", range(4))
    def test_length_is_162(self, seed):
        assert pftas_extract(random_tile(seed)).shape == (162,)

    def test_all_black_mask_histograms_are_zero(self):
        vec = pftas_extract(rgb(np.zeros((20, 20))))
        assert vec.shape == (162,)
        assert np.all(np.isfinite(vec))
        per_channel = vec.reshape(3, 6, 9)
        # the three masks (not their complements) are empty -> zero histograms
        np.testing.assert_array_equal(per_channel[:, :3, :], 0.0)

    def test_constant_image_is_finite(self):
        vec = pftas_extract(rgb(np.full((20, 20), 130)))
        assert np.all(np.isfinite(vec))
        assert vec.shape == (162,)

    def test_isolated_above_threshold_pixel(self):
        # one bright pixel: the above-threshold mask is that single pixel,
        # which has zero white neighbors -> histogram 1.0 in bin 0
        ch = np.zeros((20, 20), dtype=np.uint8)
        ch[10, 10] = 255
        vec = pftas_extract(rgb(ch)).reshape(3, 6, 9)
        for c in range(3):
            np.testing.assert_array_equal(vec[c, 0], [1.0] + [0.0] * 8)

    @pytest.mark.parametrize("seed", range(3))
    def test_histograms_normalized_or_zero(self, seed):
        vec = pftas_extract(random_tile(seed)).reshape(18, 9)
        assert vec.min() >= 0.0 and vec.max() <= 1.0
        sums = vec.sum(axis=1)
        assert np.all((np.abs(sums - 1.0) < 1e-12) | (sums == 0.0))

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_naive_oracle(self, seed):
        tile = random_tile(seed, size=18)
        np.testing.assert_allclose(pftas_extract(tile), naive_pftas(tile), atol=1e-12)

    def test_blobby_image_against_oracle(self):
        rng = np.random.default_rng(9)
        yy, xx = np.mgrid[0:20, 0:20]
        blob = 200 * np.exp(-((yy - 10) ** 2 + (xx - 7) ** 2) / 30.0)
        tile = rgb(np.clip(blob + rng.normal(0, 10, (20, 20)), 0, 255))
        np.testing.assert_allclose(pftas_extract(tile), naive_pftas(tile), atol=1e-12)

    def test_rejects_small_image(self):
        with pytest.raises(ValidationError, match="16x16"):
            pftas_extract(np.zeros((8, 8, 3), dtype=np.uint8))

    def test_rejects_wrong_dtype(self):
        with pytest.raises(ValidationError):
            pftas_extract(np.zeros((20, 20, 3), dtype=np.float64))


class TestGlcm:
    def test_constant_image_degenerate_features(self):
        vec = glcm_extract(rgb(np.full((16, 16), 99)), distances=(1,), quantization_levels=256)
        per_dir = vec.reshape(4, 13)
        np.testing.assert_array_equal(per_dir[:, 0], 1.0)  # angular second moment
        np.testing.assert_array_equal(per_dir[:, 1], 0.0)  # contrast

    def test_checkerboard_contrast_is_one(self):
        # alternating 0/1 pixels: every horizontal unit pair differs by one
        # gray level, so contrast = 1 at distance 1, direction 0 degrees.
        ch = np.indices((16, 16)).sum(axis=0) % 2
        vec = glcm_extract(rgb(ch), distances=(1,), quantization_levels=256)
        contrast_0deg = vec.reshape(4, 13)[0, 1]
        assert contrast_0deg == 1.0

    def test_output_length(self):
        tile = random_tile(1)
        assert glcm_extract(tile, distances=(1,), quantization_levels=64).shape == (52,)
        assert glcm_extract(tile, distances=(1, 2, 3), quantization_levels=64).shape == (156,)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_naive_oracle(self, seed):
        tile = random_tile(seed, size=20)
        ours = glcm_extract(tile, distances=(1, 2), quantization_levels=8)
        ref = naive_glcm(tile, distances=(1, 2), levels=8)
        np.testing.assert_allclose(ours, ref, atol=1e-10)

    def test_cooccurrence_matches_skimage(self):
        from skimage.feature import graycomatrix

        rng = np.random.default_rng(3)
        q = rng.integers(0, 8, size=(20, 22)).astype(np.uint8)
        ref = graycomatrix(
            q, distances=[1], angles=[0, np.pi / 4, np.pi / 2, 3 * np.pi / 4],
            levels=8, symmetric=True, normed=True,
        )
        # row-axis sign differs: our 45 is skimage's 3pi/4 and vice versa
        np.testing.assert_allclose(cooccurrence_matrix(q, 8, (0, 1)), ref[:, :, 0, 0])
        np.testing.assert_allclose(cooccurrence_matrix(q, 8, (-1, 1)), ref[:, :, 0, 3])
        np.testing.assert_allclose(cooccurrence_matrix(q, 8, (-1, 0)), ref[:, :, 0, 2])
        np.testing.assert_allclose(cooccurrence_matrix(q, 8, (-1, -1)), ref[:, :, 0, 1])

    def test_features_match_skimage_props(self):
        from skimage.feature import graycomatrix, graycoprops

        rng = np.random.default_rng(4)
        q = rng.integers(0, 16, size=(24, 24)).astype(np.uint8)
        ref = graycomatrix(q, distances=[1], angles=[0], levels=16, symmetric=True, normed=True)
        ours = haralick_features(cooccurrence_matrix(q, 16, (0, 1)))
        assert ours[0] == pytest.approx(float(graycoprops(ref, "ASM")[0, 0]), abs=1e-10)
        assert ours[1] == pytest.approx(float(graycoprops(ref, "contrast")[0, 0]), abs=1e-10)
        assert ours[2] == pytest.approx(float(graycoprops(ref, "correlation")[0, 0]), abs=1e-10)

    def test_level_shift_invariance_except_sum_average(self):
        # shifting every pixel by a constant translates the co-occurrence
        # matrix along its diagonal: all statistics are unchanged except sum
        # average, which moves by exactly twice the shift
        base = np.indices((18, 18)).sum(axis=0) % 3 + 20  # levels {20,21,22}
        shifted = base + 100
        a = glcm_extract(rgb(base), distances=(1,), quantization_levels=256).reshape(4, 13)
        b = glcm_extract(rgb(shifted), distances=(1,), quantization_levels=256).reshape(4, 13)
        keep = [i for i in range(13) if i != 5]
        np.testing.assert_allclose(a[:, keep], b[:, keep], atol=1e-9)
        np.testing.assert_allclose(b[:, 5] - a[:, 5], 2 * 100, atol=1e-9)

    @pytest.mark.parametrize("seed", range(3))
    def test_feature_ranges(self, seed):
        vec = glcm_extract(random_tile(seed), distances=(1, 2), quantization_levels=32)
        per = vec.reshape(8, 13)
        assert np.all(per[:, 0] > 0.0) and np.all(per[:, 0] <= 1.0)  # asm
        assert np.all(per[:, 1] >= 0.0)  # contrast
        assert np.all(per[:, 2] >= -1.0) and np.all(per[:, 2] <= 1.0)  # correlation
        assert np.all(np.isfinite(vec))

    def test_bad_levels(self):
        with pytest.raises(ParameterError):
            glcm_extract(random_tile(0), distances=(1,), quantization_levels=1)

    def test_distance_out_of_range(self):
        with pytest.raises(ParameterError):
            glcm_extract(random_tile(0, size=16), distances=(16,))
        with pytest.raises(ParameterError):
            glcm_extract(random_tile(0), distances=(0,))


class TestGoldenFiles:
    def test_production_matches_stored_oracle_outputs(self):
        tiles = np.load(GOLDEN / "texture_tiles.npz")["tiles"]
        golden = np.load(GOLDEN / "texture_golden.npz")
        distances = tuple(int(d) for d in golden["glcm_distances"])
        levels = int(golden["glcm_levels"])
        assert tiles.shape[0] == 10
        for i, tile in enumerate(tiles):
            np.testing.assert_allclose(pftas_extract(tile), golden["pftas"][i], atol=1e-6)
            np.testing.assert_allclose(
                glcm_extract(tile, distances=distances, quantization_levels=levels),
                golden["glcm"][i],
                atol=1e-6,
            )


class TestImageIo:
    def test_png_and_tiff_round_trip(self, tmp_path):
        tile = random_tile(2)
        for name in ("t.png", "t.tiff"):
            path = tmp_path / name
            Image.fromarray(tile).save(path)
            np.testing.assert_array_equal(decode_image(path), tile)

    def test_rejects_16bit(self, tmp_path):
        path = tmp_path / "deep.png"
        arr = np.ones((20, 20), dtype=np.uint16) * 1000
        Image.fromarray(arr).save(path)
        with pytest.raises(ValidationError, match="mode"):
            decode_image(path)

    def test_rejects_corrupt_file(self, tmp_path):
        path = tmp_path / "bad.png"
        path.write_bytes(b"not an image at all")
        with pytest.raises(FormatError):
            decode_image(path)

    def test_rejects_small(self, tmp_path):
        path = tmp_path / "tiny.png"
        Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(path)
        with pytest.raises(ValidationError):
            decode_image(path)


class TestCorpus:
    def _write_images(self, tmp_path, n):
        lines = ["sample_id,image_path"]
        for i in range(n):
            name = f"img{i}.png"
            Image.fromarray(random_tile(i)).save(tmp_path / name)
            lines.append(f"s{i},{name}")
        manifest = tmp_path / "manifest.csv"
        manifest.write_text("\n".join(lines) + "\n")
        return manifest

    def test_three_valid_images(self, tmp_path):
        manifest = self._write_images(tmp_path, 3)
        out = tmp_path / "handcrafted.csv"
        report = extract_corpus(manifest, out)
        assert report.ok and report.n_extracted == 3
        view = load_view(out, view_name="handcrafted")
        assert view.n_samples == 3
        assert view.n_features == 162 + 52
        assert view.sample_ids == ("s0", "s1", "s2")
        feats = extract_features(np.asarray(Image.open(tmp_path / "img1.png")))
        np.testing.assert_array_equal(view.matrix[1], feats.combined)

    def test_corrupt_file_reported_run_continues(self, tmp_path):
        manifest = self._write_images(tmp_path, 3)
        (tmp_path / "img1.png").write_bytes(b"garbage")
        out = tmp_path / "v.csv"
        report = extract_corpus(manifest, out)
        assert report.n_extracted == 2
        assert len(report.failures) == 1
        assert report.failures[0].sample_id == "s1"
        assert "img1.png" in report.failures[0].image_path
        view = load_view(out)
        assert view.sample_ids == ("s0", "s2")

    def test_empty_manifest(self, tmp_path):
        manifest = tmp_path / "manifest.csv"
        manifest.write_text("sample_id,image_path\n")
        out = tmp_path / "v.csv"
        report = extract_corpus(manifest, out)
        assert report.ok and report.n_extracted == 0
        view = load_view(out)
        assert view.n_samples == 0
        assert view.n_features == 162 + 52

    def test_rows_sorted_by_sample_id(self, tmp_path):
        lines = ["sample_id,image_path"]
        for i, sid in enumerate(["zz", "aa", "mm"]):
            name = f"img{i}.png"
            Image.fromarray(random_tile(i)).save(tmp_path / name)
            lines.append(f"{sid},{name}")
        manifest = tmp_path / "manifest.csv"
        manifest.write_text("\n".join(lines) + "\n")
        out = tmp_path / "v.csv"
        extract_corpus(manifest, out)
        assert load_view(out).sample_ids == ("aa", "mm", "zz")

    def test_duplicate_manifest_ids(self, tmp_path):
        manifest = tmp_path / "manifest.csv"
        manifest.write_text("sample_id,image_path\na,x.png\na,y.png\n")
        with pytest.raises(ValidationError):
            extract_corpus(manifest, tmp_path / "v.csv")

    def test_feature_name_layout(self):
        assert len(pftas_feature_names()) == 162
        assert len(glcm_feature_names((1,))) == 52
        assert pftas_feature_names()[0] == "pftas_r_m1_b0"
        assert glcm_feature_names((1, 2))[13] == "glcm_d1_a45_asm"
