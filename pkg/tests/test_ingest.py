import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rfsvm import (
    AlignmentError,
    FeatureView,
    FormatError,
    LabelError,
    ParameterError,
    ParseError,
    RunConfig,
    ValidationError,
    assemble_dataset,
    load_config,
    load_labels,
    load_view,
    resolve_mtry,
    write_view,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadView:
    def test_well_formed(self, tmp_path):
        p = write(tmp_path / "v.csv", "sample_id,a,b\nx1,1.0,2.0\nx2,3.5,-4.0\nx3,0,7e-3\n")
        view = load_view(p)
        assert view.view_name == "v"
        assert view.n_samples == 3
        assert view.n_features == 2
        assert view.sample_ids == ("x1", "x2", "x3")
        assert view.feature_names == ("a", "b")
        np.testing.assert_array_equal(view.matrix[1], [3.5, -4.0])

    def test_duplicate_id(self, tmp_path):
        p = write(tmp_path / "v.csv", "sample_id,a\nimg001,1\nimg001,2\n")
        with pytest.raises(ValidationError, match="img001"):
            load_view(p)

    def test_nan_cell_names_location(self, tmp_path):
        p = write(tmp_path / "v.csv", "sample_id,a,b\nx1,1.0,2.0\nx2,NaN,1.0\n")
        with pytest.raises(ParseError, match=r"line 3.*'a'"):
            load_view(p)

    def test_inf_cell(self, tmp_path):
        p = write(tmp_path / "v.csv", "sample_id,a\nx1,inf\n")
        with pytest.raises(ParseError, match="not finite"):
            load_view(p)

    def test_non_numeric_cell(self, tmp_path):
        p = write(tmp_path / "v.csv", "sample_id,a\nx1,hello\n")
        with pytest.raises(ParseError, match=r"'hello' is not numeric"):
            load_view(p)

    def test_bad_header(self, tmp_path):
        p = write(tmp_path / "v.csv", "id,a\nx1,1\n")
        with pytest.raises(FormatError, match="sample_id"):
            load_view(p)

    def test_no_feature_columns(self, tmp_path):
        p = write(tmp_path / "v.csv", "sample_id\nx1\n")
        with pytest.raises(FormatError, match="feature column"):
            load_view(p)

    def test_ragged_row(self, tmp_path):
        p = write(tmp_path / "v.csv", "sample_id,a,b\nx1,1.0\n")
        with pytest.raises(FormatError, match="line 2"):
            load_view(p)

    def test_empty_file(self, tmp_path):
        p = write(tmp_path / "v.csv", "")
        with pytest.raises(FormatError):
            load_view(p)


class TestRoundTrip:
    def test_awkward_floats_bitwise(self, tmp_path):
        values = np.array(
            [[0.1, 1e-17, -3.7e300], [1 / 3, -0.0, 2**-1074], [np.pi, 1e16 + 1, 5.0]]
        )
        view = FeatureView("w", ("a", "b", "c"), values)
        path = tmp_path / "w.csv"
        write_view(view, path)
        again = load_view(path, view_name="w")
        assert again == view
        # a second trip through disk produces an identical file
        path2 = tmp_path / "w2.csv"
        write_view(again, path2)
        assert path2.read_text() == path.read_text()

    def test_empty_view(self, tmp_path):
        view = FeatureView("e", (), np.empty((0, 2)), feature_names=("a", "b"))
        path = tmp_path / "e.csv"
        write_view(view, path)
        again = load_view(path, view_name="e")
        assert again.n_samples == 0
        assert again.n_features == 2

    @settings(max_examples=25, deadline=None)
    @given(
        st.lists(
            st.floats(allow_nan=False, allow_infinity=False, width=64),
            min_size=4,
            max_size=12,
        )
    )
    def test_random_values_bitwise(self, tmp_path_factory, values):
        n = len(values) // 2
        matrix = np.array(values[: 2 * n]).reshape(n, 2)
        view = FeatureView("r", tuple(f"s{i}" for i in range(n)), matrix)
        path = tmp_path_factory.mktemp("roundtrip") / "r.csv"
        write_view(view, path)
        assert load_view(path, view_name="r") == view


class TestFeatureViewInvariants:
    def test_row_count_mismatch(self):
        with pytest.raises(ValidationError):
            FeatureView("v", ("a", "b"), np.zeros((3, 2)))

    def test_duplicate_ids(self):
        with pytest.raises(ValidationError):
            FeatureView("v", ("a", "a"), np.zeros((2, 2)))

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            FeatureView("v", ("a", "b"), np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_matrix_is_readonly(self):
        view = FeatureView("v", ("a",), np.zeros((1, 2)))
        with pytest.raises(ValueError):
            view.matrix[0, 0] = 1.0


class TestLabels:
    def test_load(self, tmp_path):
        p = write(tmp_path / "l.csv", "sample_id,label\nx1,benign\nx2,normal\n")
        assert load_labels(p) == {"x1": "benign", "x2": "normal"}

    def test_bad_header(self, tmp_path):
        p = write(tmp_path / "l.csv", "id,cls\nx1,benign\n")
        with pytest.raises(FormatError):
            load_labels(p)

    def test_duplicate(self, tmp_path):
        p = write(tmp_path / "l.csv", "sample_id,label\nx1,a\nx1,b\n")
        with pytest.raises(ValidationError):
            load_labels(p)

    def test_empty_label(self, tmp_path):
        p = write(tmp_path / "l.csv", "sample_id,label\nx1,\n")
        with pytest.raises(LabelError):
            load_labels(p)


class TestAssemble:
    def test_alignment_to_canonical_order(self):
        v1 = FeatureView("v1", ("b", "a", "c"), np.array([[2.0], [1.0], [3.0]]))
        v2 = FeatureView("v2", ("c", "b", "a"), np.array([[30.0], [20.0], [10.0]]))
        ds = assemble_dataset([v1, v2], {"a": "x", "b": "y", "c": "x"})
        assert ds.sample_ids == ("a", "b", "c")
        assert ds.n_views == 2
        np.testing.assert_array_equal(ds.views[0].matrix.ravel(), [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(ds.views[1].matrix.ravel(), [10.0, 20.0, 30.0])
        assert ds.labels == ("x", "y", "x")
        assert ds.class_names == ("x", "y")

    def test_order_insensitive(self, rng):
        X = rng.normal(size=(6, 3))
        ids = tuple(f"s{i}" for i in range(6))
        labels = {f"s{i}": f"c{i % 2}" for i in range(6)}
        base = FeatureView("v", ids, X)
        perm = rng.permutation(6)
        shuffled = FeatureView("v", tuple(ids[i] for i in perm), X[perm])
        assert assemble_dataset([base], labels) == assemble_dataset([shuffled], labels)

    def test_id_mismatch_names_offenders(self):
        v1 = FeatureView("v1", ("a", "b"), np.zeros((2, 1)))
        v2 = FeatureView("v2", ("a", "c"), np.zeros((2, 1)))
        with pytest.raises(AlignmentError) as err:
            assemble_dataset([v1, v2], {"a": "x", "b": "y", "c": "x"})
        assert "b" in str(err.value) and "c" in str(err.value)

    def test_missing_label(self):
        v = FeatureView("v", ("a", "b"), np.zeros((2, 1)))
        with pytest.raises(LabelError, match="b"):
            assemble_dataset([v], {"a": "x"})

    def test_400_samples_4_classes(self, rng):
        ids = tuple(f"img{i:03d}" for i in range(400))
        labels = {ids[i]: f"class{i % 4}" for i in range(400)}
        view = FeatureView("v", ids, rng.normal(size=(400, 5)))
        ds = assemble_dataset([view], labels)
        assert ds.n_samples == 400
        assert ds.n_views == 1
        assert len(ds.class_names) == 4

    def test_no_views(self):
        with pytest.raises(ParameterError):
            assemble_dataset([], {})

    def test_single_class_rejected(self):
        v = FeatureView("v", ("a", "b"), np.zeros((2, 1)))
        with pytest.raises(ValidationError):
            assemble_dataset([v], {"a": "x", "b": "x"})

    def test_labels_from_file(self, tmp_path):
        v = FeatureView("v", ("a", "b"), np.zeros((2, 1)))
        p = write(tmp_path / "l.csv", "sample_id,label\na,x\nb,y\n")
        ds = assemble_dataset([v], p)
        assert ds.labels == ("x", "y")

    def test_labels_superset_tolerated(self):
        # a labels file may cover more ids than the views contain
        v = FeatureView("v", ("a", "b"), np.zeros((2, 1)))
        ds = assemble_dataset([v], {"a": "x", "b": "y", "zz": "x"})
        assert ds.sample_ids == ("a", "b")
        assert ds.class_names == ("x", "y")


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.n_trees == 500
        assert cfg.train_fraction == 0.75
        assert cfg.n_repeats == 10
        assert cfg.c_grid == (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)
        assert cfg.mtry == "sqrt"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_trees": 0},
            {"train_fraction": 0.0},
            {"train_fraction": 1.0},
            {"n_repeats": 0},
            {"c_grid": ()},
            {"c_grid": (0.1, 0.1)},
            {"c_grid": (1.0, 0.1)},
            {"c_grid": (-1.0, 1.0)},
            {"mtry": 0},
            {"mtry": "cube"},
            {"cv_folds": 1},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ParameterError):
            RunConfig(**kwargs)

    def test_config_file(self, tmp_path):
        p = write(
            tmp_path / "run.cfg",
            "# experiment knobs\n"
            "n_trees = 100\n"
            "train_fraction = 0.8\n"
            "c_grid = 0.1, 1, 10\n"
            "mtry = 3\n"
            "rng_seed = 7\n",
        )
        cfg = load_config(p)
        assert cfg.n_trees == 100
        assert cfg.train_fraction == 0.8
        assert cfg.c_grid == (0.1, 1.0, 10.0)
        assert cfg.mtry == 3
        assert cfg.rng_seed == 7
        assert cfg.n_repeats == 10  # untouched default

    def test_config_unknown_key(self, tmp_path):
        p = write(tmp_path / "run.cfg", "trees = 10\n")
        with pytest.raises(FormatError, match="unknown key"):
            load_config(p)

    def test_config_bad_value(self, tmp_path):
        p = write(tmp_path / "run.cfg", "n_trees = many\n")
        with pytest.raises(FormatError, match="bad value"):
            load_config(p)

    def test_overrides(self):
        cfg = RunConfig().with_overrides(rng_seed=9, n_trees=None)
        assert cfg.rng_seed == 9
        assert cfg.n_trees == 500


class TestResolveMtry:
    def test_sqrt_default(self):
        assert resolve_mtry("sqrt", 9) == 3
        assert resolve_mtry(None, 2) == 1
        assert resolve_mtry("sqrt", 1) == 1

    def test_explicit(self):
        assert resolve_mtry(4, 10) == 4

    def test_out_of_range(self):
        with pytest.raises(ParameterError):
            resolve_mtry(11, 10)
        with pytest.raises(ParameterError):
            resolve_mtry(0, 10)
