import numpy as np
import pytest
from scipy.stats import ortho_group

from otgp.barycenter import gaussian_barycenter, gaussian_barycenter_measure, grid_barycenter
from otgp.errors import GridMismatch, NoConvergence, ValidationError
from otgp.measures import GaussianMeasure, GridDensity
from otgp.ot import gaussian_w2


def random_spd(rng, d, scale=1.0):
    a = rng.normal(size=(d, d))
    return scale * (a @ a.T + 0.2 * np.eye(d))


class TestGaussianBarycenter:
    def test_fixed_point_of_equal_inputs(self):
        s = np.array([[2.0, 0.5], [0.5, 1.0]])
        rep = gaussian_barycenter([s, s, s])
        np.testing.assert_allclose(rep.result, s, atol=1e-12)
        assert rep.iterations == 1

    def test_one_dimensional_pair(self):
        # sigma_bar is the mean of the sigmas: (1 + 3)/2 = 2
        rep = gaussian_barycenter([np.array([[1.0]]), np.array([[9.0]])])
        assert rep.result[0, 0] == pytest.approx(4.0, abs=1e-8)

    def test_commuting_diagonal(self):
        rep = gaussian_barycenter([np.diag([1.0, 4.0]), np.diag([9.0, 16.0])])
        np.testing.assert_allclose(rep.result, np.diag([4.0, 9.0]), atol=1e-8)

    def test_residual_below_tolerance(self):
        rng = np.random.default_rng(0)
        covs = [random_spd(rng, 3) for _ in range(5)]
        rep = gaussian_barycenter(covs, tol=1e-9)
        assert rep.residual <= 1e-9
        assert np.linalg.eigvalsh(rep.result)[0] > 0

    def test_weights(self):
        # weight 1 on a single input recovers that input
        s1, s2 = np.diag([1.0, 1.0]), np.diag([9.0, 4.0])
        rep = gaussian_barycenter([s1, s2], weights=[0.0, 1.0])
        np.testing.assert_allclose(rep.result, s2, atol=1e-8)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        covs = [random_spd(rng, 3) for _ in range(6)]
        a = gaussian_barycenter(covs).result
        b = gaussian_barycenter(covs[::-1]).result
        np.testing.assert_allclose(a, b, rtol=1e-8, atol=1e-10)

    def test_orthogonal_equivariance(self):
        rng = np.random.default_rng(2)
        covs = [random_spd(rng, 3) for _ in range(4)]
        u = ortho_group.rvs(3, random_state=rng)
        base = gaussian_barycenter(covs).result
        rotated = gaussian_barycenter([u @ c @ u.T for c in covs]).result
        np.testing.assert_allclose(rotated, u @ base @ u.T, atol=1e-8)

    def test_minimizes_mean_squared_w2(self):
        rng = np.random.default_rng(3)
        covs = [random_spd(rng, 2) for _ in range(4)]
        rep = gaussian_barycenter(covs)
        zero = np.zeros(2)
        inputs = [GaussianMeasure(zero, c) for c in covs]
        bary = GaussianMeasure(zero, rep.result)
        objective = np.mean([gaussian_w2(bary, m) ** 2 for m in inputs])
        for _ in range(100):
            cand = GaussianMeasure(zero, random_spd(rng, 2))
            cand_obj = np.mean([gaussian_w2(cand, m) ** 2 for m in inputs])
            assert objective <= cand_obj + 1e-6

    def test_no_convergence(self):
        rng = np.random.default_rng(4)
        covs = [random_spd(rng, 3) for _ in range(4)]
        with pytest.raises(NoConvergence):
            gaussian_barycenter(covs, tol=1e-15, max_iter=2)

    def test_measure_wrapper_averages_means(self):
        ms = [GaussianMeasure([0.0, 2.0], np.eye(2)),
              GaussianMeasure([4.0, 0.0], np.eye(2))]
        measure, rep = gaussian_barycenter_measure(ms)
        np.testing.assert_allclose(measure.mean, [2.0, 1.0])
        np.testing.assert_allclose(measure.cov, np.eye(2), atol=1e-9)
        assert rep.residual <= 1e-9


def strip_density(g, col_masses):
    w = np.zeros((g, g))
    for ix, m in col_masses.items():
        w[0, ix] = m
    return GridDensity(w)


class TestGridBarycenter:
    def test_single_input_returned_exactly(self):
        rng = np.random.default_rng(5)
        w = rng.uniform(0.1, 1.0, size=(6, 6))
        d = GridDensity(w / w.sum())
        rep = grid_barycenter([d])
        assert rep.result is d
        assert rep.residual == 0.0

    def test_identical_inputs_returned_exactly(self):
        rng = np.random.default_rng(6)
        w = rng.uniform(0.1, 1.0, size=(6, 6))
        d = GridDensity(w / w.sum())
        rep = grid_barycenter([d, GridDensity(d.weights.copy())])
        np.testing.assert_array_equal(rep.result.weights, d.weights)

    def test_point_mass_pair_concentrates_at_midpoint(self):
        a = strip_density(9, {1: 1.0})
        b = strip_density(9, {5: 1.0})
        rep = grid_barycenter([a, b], lam=20.0)
        iy, ix = np.unravel_index(rep.result.weights.argmax(), (9, 9))
        assert (iy, ix) == (0, 3)

    def test_valid_density_output(self):
        rng = np.random.default_rng(7)
        ds = []
        for _ in range(3):
            w = rng.uniform(0.0, 1.0, size=(8, 8))
            w[w < 0.4] = 0.0
            ds.append(GridDensity(w / w.sum()))
        rep = grid_barycenter(ds, lam=20.0)
        assert abs(rep.result.weights.sum() - 1.0) < 1e-9
        assert rep.residual <= 1e-6

    def test_permutation_invariance_within_tol(self):
        rng = np.random.default_rng(8)
        ds = []
        for _ in range(3):
            w = rng.uniform(0.1, 1.0, size=(7, 7))
            ds.append(GridDensity(w / w.sum()))
        a = grid_barycenter(ds, tol=1e-8).result.weights
        b = grid_barycenter(ds[::-1], tol=1e-8).result.weights
        assert np.abs(a - b).sum() < 1e-6

    def test_grid_mismatch(self):
        a = GridDensity(np.full((4, 4), 1 / 16))
        b = GridDensity(np.full((5, 5), 1 / 25))
        with pytest.raises(GridMismatch):
            grid_barycenter([a, b])

    def test_empty_input_list(self):
        with pytest.raises(ValidationError):
            grid_barycenter([])
