import numpy as np
import pytest

from wgplvm.data_io import (
    Dataset,
    fractional_anisotropy,
    load_directions,
    load_landmarks,
    load_latents,
    load_prices,
    load_spd,
    load_truth_sidecar,
    log_returns,
    rolling_covariances,
    split,
    split_indices,
    truth_sidecar_path,
)
from wgplvm.errors import DataFormatError
from wgplvm.manifolds import Kendall2D, SpdLogEuclidean, Sphere, distance, sym_triu


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadDirections:
    def test_unit_rows_kept_in_order(self, tmp_path):
        path = write(tmp_path, "d.csv", "# x,y,z\n0,0,1\n1,0,0\n0,1,0\n")
        ds = load_directions(path)
        assert ds.manifold == Sphere(2)
        assert len(ds) == 3
        np.testing.assert_allclose(ds.points[0].coords, [0, 0, 1])
        assert ds.labels["timestamp"] == [0, 1, 2]

    def test_norm_outside_band_rejected(self, tmp_path):
        path = write(tmp_path, "d.csv", "0,0,1\n0,0,2\n")
        with pytest.raises(DataFormatError) as info:
            load_directions(path)
        assert info.value.line == 2

    def test_slightly_off_norm_renormalized(self, tmp_path):
        path = write(tmp_path, "d.csv", f"0,0,{1 + 5e-7}\n")
        ds = load_directions(path)
        assert abs(np.linalg.norm(ds.points[0].coords) - 1.0) < 1e-12

    def test_malformed_row(self, tmp_path):
        path = write(tmp_path, "d.csv", "0,0,abc\n")
        with pytest.raises(DataFormatError):
            load_directions(path)

    def test_wrong_column_count(self, tmp_path):
        path = write(tmp_path, "d.csv", "0,0,1,0\n")
        with pytest.raises(DataFormatError):
            load_directions(path)


def square_rows(scale=1.0, rotate=0.0, shift=(0.0, 0.0)):
    base = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0],
                     [0.5, 0.5]])
    rot = np.array([[np.cos(rotate), -np.sin(rotate)],
                    [np.sin(rotate), np.cos(rotate)]])
    return (scale * base @ rot.T + np.asarray(shift)).ravel()


class TestLoadLandmarks:
    def test_translation_and_scale_and_rotation_quotiented(self, tmp_path):
        rows = [square_rows(), square_rows(shift=(3.0, -2.0)),
                square_rows(scale=2.5, rotate=0.9)]
        text = "\n".join(",".join(map(str, r)) for r in rows)
        ds = load_landmarks(write(tmp_path, "s.csv", text))
        assert ds.manifold == Kendall2D(5)
        for point in ds.points[1:]:
            np.testing.assert_allclose(point.coords, ds.points[0].coords,
                                       atol=1e-9)

    def test_species_labels(self, tmp_path):
        rows = [",".join(map(str, square_rows())) + ",navicula",
                ",".join(map(str, square_rows(rotate=0.3))) + ",gomphonema"]
        ds = load_landmarks(write(tmp_path, "s.csv", "\n".join(rows)))
        assert ds.labels["species"] == ["navicula", "gomphonema"]

    def test_degenerate_shape_rejected(self, tmp_path):
        text = ",".join(["2.0,3.0"] * 5)
        with pytest.raises(DataFormatError):
            load_landmarks(write(tmp_path, "s.csv", text))

    def test_inconsistent_landmark_count(self, tmp_path):
        text = "0,0,1,0,0,1\n0,0,1,0\n"
        with pytest.raises(DataFormatError) as info:
            load_landmarks(write(tmp_path, "s.csv", text))
        assert info.value.line == 2

    def test_ingestion_invariance_under_per_shape_similarity(self, tmp_path):
        # rotating non-reference rows and translating/scaling everything must
        # leave the ingested representatives unchanged
        rng = np.random.default_rng(0)
        raw = [square_rows(rotate=rng.uniform(0, 2 * np.pi)) for _ in range(4)]
        plain = "\n".join(",".join(map(str, r)) for r in raw)
        transformed_rows = [raw[0] * 1.7 + np.tile([0.4, -0.2], 5)]
        for row in raw[1:]:
            xy = row.reshape(-1, 2)
            angle = rng.uniform(0, 2 * np.pi)
            rot = np.array([[np.cos(angle), -np.sin(angle)],
                            [np.sin(angle), np.cos(angle)]])
            transformed_rows.append(
                (rng.uniform(0.5, 3.0) * xy @ rot.T
                 + rng.uniform(-2, 2, size=2)).ravel())
        moved = "\n".join(",".join(map(str, r)) for r in transformed_rows)
        ds_a = load_landmarks(write(tmp_path, "a.csv", plain))
        ds_b = load_landmarks(write(tmp_path, "b.csv", moved))
        for pa, pb in zip(ds_a.points, ds_b.points):
            np.testing.assert_allclose(pb.coords, pa.coords, atol=1e-9)

    def test_rotated_reference_preserves_shapes(self, tmp_path):
        # rotating the reference row rotates every representative together;
        # the shapes themselves (Kendall distances to the originals) are unchanged
        raw = [square_rows(rotate=r) for r in (0.0, 0.5, 1.1)]
        plain = "\n".join(",".join(map(str, r)) for r in raw)
        rot_ref = [square_rows(rotate=0.8)] + [r.copy() for r in raw[1:]]
        moved = "\n".join(",".join(map(str, r)) for r in rot_ref)
        ds_a = load_landmarks(write(tmp_path, "a.csv", plain))
        ds_b = load_landmarks(write(tmp_path, "b.csv", moved))
        for pa, pb in zip(ds_a.points, ds_b.points):
            assert distance(pa, pb) < 1e-9


class TestLoadSpd:
    def test_identity_row(self, tmp_path):
        path = write(tmp_path, "t.csv", "1,0,0,1,0,1\n")
        ds = load_spd(path, size=3)
        assert ds.manifold == SpdLogEuclidean(3)
        assert fractional_anisotropy(ds.points[0]) == pytest.approx(0.0, abs=1e-12)

    def test_negative_eigenvalue_rejected_with_row(self, tmp_path):
        mat = np.diag([1.0, 1.0, -0.1])
        path = write(tmp_path, "t.csv",
                     "1,0,0,1,0,1\n" + ",".join(map(str, sym_triu(mat))))
        with pytest.raises(DataFormatError) as info:
            load_spd(path, size=3)
        assert info.value.line == 2
        assert "eigenvalue" in str(info.value)

    def test_many_rows_and_labels(self, tmp_path):
        rng = np.random.default_rng(1)
        lines = []
        for i in range(25):
            raw = rng.standard_normal((3, 3))
            mat = raw @ raw.T + 3 * np.eye(3)
            lines.append(",".join(map(str, sym_triu(mat))) + f",{i * 0.1}")
        ds = load_spd(write(tmp_path, "t.csv", "\n".join(lines)), size=3)
        assert len(ds) == 25
        assert len(ds.labels["label"]) == 25


class TestRollingCovariances:
    def test_window_count_formula(self):
        rng = np.random.default_rng(2)
        for T, window, stride in [(100, 20, 7), (55, 10, 3), (20, 20, 7)]:
            prices = rng.standard_normal((T, 3)).cumsum(axis=0) + 50.0
            ds = rolling_covariances(prices, window=window, stride=stride)
            assert len(ds) == (T - window) // stride + 1

    def test_constant_prices_error_names_window(self):
        prices = np.ones((40, 3))
        with pytest.raises(DataFormatError) as info:
            rolling_covariances(prices, window=20, stride=7)
        assert "[0, 20)" in str(info.value)

    def test_perfectly_correlated_assets_rank_one_plus_jitter(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(30).cumsum() + 10.0
        prices = np.column_stack([x, x])
        ds = rolling_covariances(prices, window=30, stride=1)
        assert len(ds) == 1
        from wgplvm.manifolds import vec_to_sym
        cov = vec_to_sym(ds.points[0].coords, 2)
        v = np.var(x, ddof=1)
        delta = 1e-8 * v  # mean diagonal of the rank-one covariance
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(cov)),
                                   [delta, 2 * v + delta], rtol=1e-6)

    def test_timestamps_are_window_ends(self):
        rng = np.random.default_rng(4)
        prices = rng.standard_normal((34, 2)).cumsum(axis=0) + 20.0
        ds = rolling_covariances(prices, window=20, stride=7)
        assert ds.labels["timestamp"] == [19, 26, 33]

    def test_log_returns_requires_positive_prices(self):
        with pytest.raises(DataFormatError):
            log_returns(np.array([[1.0, 2.0], [0.0, 1.0]]))
        out = log_returns(np.array([[1.0, 2.0], [2.0, 4.0]]))
        np.testing.assert_allclose(out, np.log(2.0) * np.ones((1, 2)))


class TestFractionalAnisotropy:
    def test_isotropic_is_zero(self):
        assert fractional_anisotropy(2.5 * np.eye(3)) == pytest.approx(0.0)

    def test_thin_limit_is_one(self):
        assert fractional_anisotropy(np.diag([1.0, 1e-12, 1e-12])) == \
            pytest.approx(1.0, abs=1e-6)

    def test_two_one_one(self):
        # direct evaluation: lambda = (2,1,1), mean 4/3,
        # FA = sqrt(3/2)*sqrt(6/9)/sqrt(6) = 1/sqrt(6)
        assert fractional_anisotropy(np.diag([2.0, 1.0, 1.0])) == \
            pytest.approx(1.0 / np.sqrt(6.0), abs=1e-12)

    def test_range(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            raw = rng.standard_normal((3, 3))
            value = fractional_anisotropy(raw @ raw.T + 0.1 * np.eye(3))
            assert 0.0 <= value <= 1.0


class TestSplit:
    def dataset(self, n=10):
        man = Sphere(2)
        rng = np.random.default_rng(6)
        pts = [__import__("wgplvm").ManifoldPoint(man, man.random_point(rng))
               for _ in range(n)]
        return Dataset(man, pts, labels={"timestamp": list(range(n))})

    def test_eight_two_split(self):
        train, test = split(self.dataset(10), 0.8, seed=0)
        assert len(train) == 8 and len(test) == 2

    def test_deterministic(self):
        a = split_indices(50, 0.8, seed=42)
        b = split_indices(50, 0.8, seed=42)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_partition(self):
        train_idx, test_idx = split_indices(37, 0.8, seed=3)
        union = np.sort(np.concatenate([train_idx, test_idx]))
        np.testing.assert_array_equal(union, np.arange(37))

    def test_labels_follow_points(self):
        train, test = split(self.dataset(10), 0.8, seed=1)
        assert len(train.labels["timestamp"]) == 8
        assert set(train.labels["timestamp"]) | set(test.labels["timestamp"]) \
            == set(range(10))

    def test_empty_side_rejected(self):
        with pytest.raises(ValueError):
            split_indices(3, 0.01, seed=0)
        with pytest.raises(ValueError):
            split_indices(10, 1.5, seed=0)


class TestAuxiliaryLoaders:
    def test_prices_matrix(self, tmp_path):
        path = write(tmp_path, "p.csv", "# a,b\n1,2\n3,4\n5,6\n")
        np.testing.assert_array_equal(load_prices(path),
                                      [[1, 2], [3, 4], [5, 6]])

    def test_latents_matrix(self, tmp_path):
        path = write(tmp_path, "x.csv", "0.1\n0.2\n0.3\n")
        assert load_latents(path).shape == (3, 1)

    def test_truth_sidecar_roundtrip(self, tmp_path):
        path = write(tmp_path, "d_labels.csv", "# index,truth\n1,0.5\n0,0.25\n")
        assert load_truth_sidecar(path) == [0.25, 0.5]
        assert truth_sidecar_path(tmp_path / "d.csv") == path

    def test_empty_file_rejected(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_prices(write(tmp_path, "e.csv", "# only comments\n"))
