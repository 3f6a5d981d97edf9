import numpy as np
import pytest

from wgplvm.errors import (
    ConvergenceError,
    CutLocusError,
    DimensionMismatchError,
    InvalidPointError,
)
from wgplvm.manifolds import (
    Euclidean,
    Kendall2D,
    ManifoldPoint,
    Product,
    Sphere,
    SpdLogEuclidean,
    TangentVector,
    distance,
    exp_map,
    frechet_mean,
    log_map,
    manifold_from_dict,
    project_to_manifold,
    sym_to_vec,
    tangent_basis,
    vec_to_sym,
)

from conftest import clustered_points, random_point, random_tangent_within


def spd_point(mat):
    return ManifoldPoint(SpdLogEuclidean(np.asarray(mat).shape[0]), sym_to_vec(mat))


class TestExpLogExamples:
    def test_zero_vector_is_identity(self, manifold):
        rng = np.random.default_rng(7)
        p = random_point(manifold, rng)
        q = exp_map(p, TangentVector(p, np.zeros(manifold.ambient_dim)))
        np.testing.assert_allclose(q.coords, p.coords, atol=1e-12)

    def test_sphere_quarter_circle(self):
        p = ManifoldPoint(Sphere(2), [0.0, 0.0, 1.0])
        q = exp_map(p, TangentVector(p, [np.pi / 2, 0.0, 0.0]))
        np.testing.assert_allclose(q.coords, [1.0, 0.0, 0.0], atol=1e-12)
        v = log_map(p, q)
        np.testing.assert_allclose(v.coords, [np.pi / 2, 0.0, 0.0], atol=1e-12)

    def test_spd_diagonal_exp(self):
        p = spd_point(np.eye(2))
        v = TangentVector(p, sym_to_vec(np.diag([1.0, 2.0])))
        q = exp_map(p, v)
        np.testing.assert_allclose(vec_to_sym(q.coords, 2),
                                   np.diag([np.e, np.e ** 2]), atol=1e-12)

    def test_spd_diagonal_log(self):
        p = spd_point(np.diag([np.e, 1.0]))
        q = spd_point(np.diag([np.e ** 3, np.e]))
        v = log_map(p, q)
        np.testing.assert_allclose(vec_to_sym(v.coords, 2),
                                   np.diag([2.0, 1.0]), atol=1e-12)

    def test_log_at_same_point_is_zero(self, manifold):
        rng = np.random.default_rng(3)
        p = random_point(manifold, rng)
        assert log_map(p, p).norm() < 1e-12


class TestDistanceExamples:
    def test_sphere_orthogonal(self):
        s = Sphere(2)
        d = distance(ManifoldPoint(s, [0, 0, 1]), ManifoldPoint(s, [0, 1, 0]))
        assert d == pytest.approx(np.pi / 2, abs=1e-12)

    def test_spd_identity_to_scaled(self):
        d = distance(spd_point(np.eye(2)), spd_point(np.diag([np.e, np.e])))
        assert d == pytest.approx(np.sqrt(2.0), abs=1e-12)

    def test_euclidean_reduces_to_norm(self):
        e = Euclidean(4)
        rng = np.random.default_rng(0)
        p, q = e.random_point(rng), e.random_point(rng)
        assert distance(ManifoldPoint(e, p), ManifoldPoint(e, q)) == \
            pytest.approx(np.linalg.norm(p - q), abs=1e-12)

    def test_antipodal_sphere_distance_is_pi(self):
        s = Sphere(2)
        p = ManifoldPoint(s, [0, 0, 1])
        q = ManifoldPoint(s, [0, 0, -1])
        assert distance(p, q) == pytest.approx(np.pi, abs=1e-12)
        with pytest.raises(CutLocusError):
            log_map(p, q)


class TestRoundtrips:
    def test_exp_then_log(self, manifold):
        rng = np.random.default_rng(11)
        for _ in range(50):
            p = random_point(manifold, rng)
            v = random_tangent_within(manifold, p.coords, rng)
            q = exp_map(p, TangentVector(p, v))
            back = log_map(p, q)
            np.testing.assert_allclose(back.coords, v, atol=1e-8)

    def test_log_then_exp(self, manifold):
        rng = np.random.default_rng(12)
        for _ in range(50):
            p = random_point(manifold, rng)
            v = random_tangent_within(manifold, p.coords, rng)
            q = ManifoldPoint(manifold, manifold.exp(p.coords, v))
            again = exp_map(p, log_map(p, q))
            np.testing.assert_allclose(again.coords, q.coords, atol=1e-8)

    def test_exp_outputs_valid_points(self, manifold):
        rng = np.random.default_rng(13)
        for _ in range(20):
            p = random_point(manifold, rng)
            v = random_tangent_within(manifold, p.coords, rng)
            q = exp_map(p, TangentVector(p, v))  # construction validates
            assert manifold.constraint_violation(q.coords) < 1e-9


class TestDistanceProperties:
    def test_symmetry_and_identity(self, manifold):
        rng = np.random.default_rng(21)
        for _ in range(25):
            p, q = random_point(manifold, rng), random_point(manifold, rng)
            assert abs(distance(p, q) - distance(q, p)) < 1e-9
            assert distance(p, p) < 1e-9

    def test_triangle_inequality(self, manifold):
        rng = np.random.default_rng(22)
        for _ in range(25):
            a, b, c = (random_point(manifold, rng) for _ in range(3))
            assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


class TestTangentBasis:
    def test_sphere_north_pole_equatorial_plane(self):
        frame = tangent_basis(ManifoldPoint(Sphere(2), [0, 0, 1]))
        np.testing.assert_allclose(frame.basis,
                                   [[1, 0, 0], [0, 1, 0]], atol=1e-12)

    def test_spd_gram_identity(self):
        man = SpdLogEuclidean(4)
        frame = tangent_basis(ManifoldPoint(man, man.random_point(
            np.random.default_rng(0))))
        assert frame.basis.shape == (10, 10)
        np.testing.assert_allclose(frame.basis @ frame.basis.T, np.eye(10),
                                   atol=1e-12)

    def test_kendall_count(self):
        man = Kendall2D(8)
        frame = tangent_basis(ManifoldPoint(
            man, man.random_point(np.random.default_rng(1))))
        assert frame.dim == 2 * 8 - 4

    def test_orthonormal_and_deterministic(self, manifold):
        rng = np.random.default_rng(30)
        p = random_point(manifold, rng)
        f1, f2 = tangent_basis(p), tangent_basis(p)
        assert f1.dim == manifold.intrinsic_dim
        np.testing.assert_allclose(f1.basis @ f1.basis.T,
                                   np.eye(f1.dim), atol=1e-10)
        np.testing.assert_array_equal(f1.basis, f2.basis)


class TestIntrinsicCoordinates:
    def test_roundtrip(self, manifold):
        rng = np.random.default_rng(40)
        p = random_point(manifold, rng)
        frame = tangent_basis(p)
        coeffs = rng.standard_normal(frame.dim)
        back = frame.to_intrinsic(frame.from_intrinsic(coeffs))
        np.testing.assert_allclose(back, coeffs, atol=1e-10)

    def test_zero_maps_to_zero(self, manifold):
        rng = np.random.default_rng(41)
        frame = tangent_basis(random_point(manifold, rng))
        assert frame.from_intrinsic(np.zeros(frame.dim)).norm() == 0.0
        np.testing.assert_array_equal(
            frame.to_intrinsic(np.zeros(manifold.ambient_dim)),
            np.zeros(frame.dim))

    def test_norm_preserved_against_direct_metric(self, manifold):
        # the metric norm in canonical coordinates is the plain 2-norm;
        # for SPD also cross-check against the Frobenius norm of the matrix
        rng = np.random.default_rng(42)
        p = random_point(manifold, rng)
        frame = tangent_basis(p)
        v = manifold.random_tangent(p.coords, rng)
        direct = np.linalg.norm(v)
        assert abs(np.linalg.norm(frame.to_intrinsic(v)) - direct) < 1e-10
        if isinstance(manifold, SpdLogEuclidean):
            frob = np.linalg.norm(vec_to_sym(v, manifold.size), "fro")
            assert abs(direct - frob) < 1e-10


class TestFrechetMean:
    def test_identical_points(self, manifold):
        rng = np.random.default_rng(50)
        p = random_point(manifold, rng)
        mean = frechet_mean([p, ManifoldPoint(manifold, p.coords), p])
        np.testing.assert_allclose(mean.coords, p.coords, atol=1e-12)

    def test_euclidean_is_arithmetic_mean(self):
        rng = np.random.default_rng(51)
        man = Euclidean(4)
        pts = [ManifoldPoint(man, man.random_point(rng)) for _ in range(9)]
        mean = frechet_mean(pts)
        np.testing.assert_allclose(
            mean.coords, np.mean([p.coords for p in pts], axis=0), atol=1e-12)

    def test_sphere_two_point_midpoint_vs_sweep(self):
        # oracle: dense sweep along the connecting geodesic minimizing sum d^2
        man = Sphere(2)
        rng = np.random.default_rng(52)
        p = random_point(man, rng)
        v = random_tangent_within(man, p.coords, rng, bound=1.5)
        q = ManifoldPoint(man, man.exp(p.coords, v))
        ts = np.linspace(0.0, 1.0, 2001)
        path = [man.exp(p.coords, t * man.log(p.coords, q.coords)) for t in ts]
        cost = [man.dist(c, p.coords) ** 2 + man.dist(c, q.coords) ** 2
                for c in path]
        best = path[int(np.argmin(cost))]
        mean = frechet_mean([p, q])
        assert man.dist(mean.coords, best) < 2e-3  # sweep resolution

    def test_nonconvergence_carries_last_iterate(self):
        man = Sphere(2)
        rng = np.random.default_rng(53)
        pts = clustered_points(man, rng, 5, spread=0.5)
        with pytest.raises(ConvergenceError) as info:
            frechet_mean(pts, tol=1e-10, max_iter=1)
        assert isinstance(info.value.last_iterate, ManifoldPoint)


class TestProjection:
    def test_sphere_radial(self):
        p = project_to_manifold(Sphere(2), [2.0, 0.0, 0.0])
        np.testing.assert_allclose(p.coords, [1.0, 0.0, 0.0], atol=1e-12)

    def test_spd_eigenvalue_clamp(self):
        vecs = np.linalg.qr(np.random.default_rng(0).standard_normal((2, 2)))[0]
        mat = (vecs * [1.0, -0.1]) @ vecs.T
        projected = project_to_manifold(SpdLogEuclidean(2), sym_to_vec(mat))
        vals = np.linalg.eigvalsh(vec_to_sym(projected.coords, 2))
        np.testing.assert_allclose(np.sort(vals), [1e-8, 1.0], rtol=1e-6)

    def test_idempotent_on_manifold(self, manifold):
        rng = np.random.default_rng(60)
        p = random_point(manifold, rng)
        np.testing.assert_allclose(manifold.project(p.coords), p.coords,
                                   atol=1e-9)

    def test_zero_vector_rejected(self):
        with pytest.raises(InvalidPointError):
            project_to_manifold(Sphere(2), [0.0, 0.0, 0.0])
        with pytest.raises(InvalidPointError):
            project_to_manifold(Kendall2D(4), np.zeros(8))


class TestProductManifold:
    def test_componentwise_exp_log_exact(self):
        rng = np.random.default_rng(70)
        sphere, flat = Sphere(2), Euclidean(2)
        prod = Product((sphere, flat))
        p1, p2 = sphere.random_point(rng), flat.random_point(rng)
        v1 = random_tangent_within(sphere, p1, rng, bound=1.0)
        v2 = flat.random_point(rng)
        p = np.concatenate([p1, p2])
        v = np.concatenate([v1, v2])
        np.testing.assert_array_equal(
            prod.exp(p, v), np.concatenate([sphere.exp(p1, v1), flat.exp(p2, v2)]))
        q = prod.exp(p, v)
        np.testing.assert_array_equal(
            prod.log(p, q),
            np.concatenate([sphere.log(p1, q[:3]), flat.log(p2, q[3:])]))

    def test_distance_is_pythagorean(self):
        rng = np.random.default_rng(71)
        prod = Product((Sphere(2), Euclidean(2)))
        p, q = prod.random_point(rng), prod.random_point(rng)
        d1 = Sphere(2).dist(p[:3], q[:3])
        d2 = Euclidean(2).dist(p[3:], q[3:])
        assert prod.dist(p, q) == pytest.approx(np.hypot(d1, d2), abs=1e-12)


class TestKendall:
    def test_rotation_invariance_of_distance(self):
        man = Kendall2D(6)
        rng = np.random.default_rng(80)
        p = man.random_point(rng)
        q = man.random_point(rng)
        angle = 1.234
        rot = np.array([[np.cos(angle), -np.sin(angle)],
                        [np.sin(angle), np.cos(angle)]])
        q_rot = (q.reshape(-1, 2) @ rot.T).ravel()
        assert abs(man.dist(p, q) - man.dist(p, q_rot)) < 1e-10

    def test_log_is_horizontal(self):
        man = Kendall2D(6)
        rng = np.random.default_rng(81)
        p, q = man.random_point(rng), man.random_point(rng)
        v = man.log(p, q)
        man.check_tangent(p, v)  # orthogonal to point, rotation orbit, translations


class TestValidation:
    def test_invalid_points_rejected(self):
        with pytest.raises(InvalidPointError):
            ManifoldPoint(Sphere(2), [1.0, 1.0, 0.0])
        with pytest.raises(InvalidPointError):
            ManifoldPoint(SpdLogEuclidean(2), sym_to_vec(np.diag([1.0, -1.0])))
        with pytest.raises(InvalidPointError):
            ManifoldPoint(Kendall2D(4), np.ones(8) / np.sqrt(8.0))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            ManifoldPoint(Sphere(2), [1.0, 0.0])
        p = ManifoldPoint(Sphere(2), [0, 0, 1])
        q = ManifoldPoint(Sphere(3), [0, 0, 0, 1])
        with pytest.raises(DimensionMismatchError):
            distance(p, q)

    def test_non_tangent_vector_rejected(self):
        p = ManifoldPoint(Sphere(2), [0, 0, 1])
        with pytest.raises(InvalidPointError):
            TangentVector(p, [0.0, 0.0, 0.5])

    def test_spd_near_boundary_log_rejected(self):
        man = SpdLogEuclidean(2)
        good = sym_to_vec(np.eye(2))
        boundary = sym_to_vec(np.diag([1.0, 1e-13]))
        with pytest.raises(InvalidPointError):
            man.log(good, boundary)

    def test_descriptor_roundtrip(self, manifold):
        assert manifold_from_dict(manifold.to_dict()) == manifold
