import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from otgp.barycenter import gaussian_barycenter
from otgp.errors import NotSymmetric, ReferenceMismatch, UnsupportedSmoothness, ValidationError
from otgp.kernels import (
    DEFAULT_BOUNDS,
    GridFeature,
    KernelParams,
    Matern,
    PowerExponential,
    SquareExponential,
    embed_gaussians,
    embed_grids,
    embedding_distance,
    gram_from_distances,
    gram_matrix,
    kernel_eval,
    naive_w2_gram,
    naive_w2_kernel,
    pairwise_distances,
    params_in_box,
    psd_diagnostic,
    radial_eval,
)
from otgp.measures import GaussianMeasure, GridDensity, sample_gaussian_population
from otgp.ot import TransportAssignment


def random_spd(rng, d, scale=1.0):
    a = rng.normal(size=(d, d))
    return scale * (a @ a.T + 0.2 * np.eye(d))


def gaussian_features(rng, n, d, reference_cov=None, means=False):
    ref_cov = reference_cov if reference_cov is not None else random_spd(rng, d)
    reference = GaussianMeasure(np.zeros(d), ref_cov)
    ms = [GaussianMeasure(rng.normal(size=d) if means else np.zeros(d),
                          random_spd(rng, d)) for _ in range(n)]
    return embed_gaussians(ms, reference), reference


class TestRadialEval:
    def test_square_exponential(self):
        se = SquareExponential(1.0, 1.0)
        assert radial_eval(se, 0.0) == pytest.approx(1.0)
        assert radial_eval(se, 1.0) == pytest.approx(math.exp(-1.0))

    def test_matern_half_is_exponential(self):
        m = Matern(variance=1.0, rate=1.0, smoothness=0.5)
        for t in (0.0, 0.3, 1.0, 2.5):
            assert radial_eval(m, t) == pytest.approx(math.exp(-t))

    def test_matern_higher_orders_at_zero(self):
        for nu in (1.5, 2.5):
            fam = Matern(variance=2.0, rate=1.3, smoothness=nu)
            assert radial_eval(fam, 0.0) == pytest.approx(2.0)

    def test_unsupported_smoothness(self):
        with pytest.raises(UnsupportedSmoothness):
            Matern(smoothness=0.7)

    def test_power_exponential(self):
        pe = PowerExponential(variance=4.0, length_scale=2.0, exponent=1.0)
        assert radial_eval(pe, 2.0) == pytest.approx(4.0 * math.exp(-1.0))

    @given(st.floats(min_value=0.0, max_value=50.0), st.floats(min_value=0.0, max_value=50.0))
    @settings(max_examples=60, deadline=None)
    def test_monotone_nonincreasing_and_bounded(self, t1, t2):
        lo, hi = sorted((t1, t2))
        for fam in (SquareExponential(1.5, 0.7),
                    Matern(1.5, 0.9, 1.5), Matern(1.5, 0.9, 2.5),
                    PowerExponential(1.5, 0.7, 1.3)):
            v_lo, v_hi = radial_eval(fam, lo), radial_eval(fam, hi)
            assert v_lo >= v_hi - 1e-12
            assert 0.0 <= v_hi <= radial_eval(fam, 0.0) + 1e-12


class TestKernelParams:
    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            KernelParams(-1.0, 1.0, 1.0, 0.0)
        with pytest.raises(ValidationError):
            KernelParams(1.0, 1.0, 2.5, 0.0)

    def test_box_predicate(self):
        assert params_in_box(KernelParams(1.0, 1.0, 1.0, 0.01))
        assert not params_in_box(KernelParams(1.0, 1.0, 1.0, 0.0))
        assert params_in_box(KernelParams(*(b[0] for b in DEFAULT_BOUNDS)))

    def test_roundtrip(self):
        p = KernelParams(2.0, 0.5, 1.0, 0.1)
        assert KernelParams.from_array(p.as_array()) == p


class TestEmbeddingDistance:
    def test_zero_on_same_feature(self):
        rng = np.random.default_rng(0)
        feats, _ = gaussian_features(rng, 2, 2)
        assert embedding_distance(feats[0], feats[0]) == 0.0

    def test_one_dimensional_sigma_difference(self):
        reference = GaussianMeasure([0.0], [[4.0]])
        ms = [GaussianMeasure([0.0], [[4.0]]), GaussianMeasure([0.0], [[9.0]])]
        f = embed_gaussians(ms, reference)
        assert embedding_distance(f[0], f[1]) == pytest.approx(1.0, abs=1e-10)

    def test_mean_translation_term(self):
        # equal covariances: distance reduces to the mean separation
        reference = GaussianMeasure([0.0, 0.0], np.eye(2))
        ms = [GaussianMeasure([0.0, 0.0], np.eye(2)),
              GaussianMeasure([3.0, 4.0], np.eye(2))]
        f = embed_gaussians(ms, reference)
        assert embedding_distance(f[0], f[1]) == pytest.approx(5.0, abs=1e-10)

    def test_grid_single_cell_displacement(self):
        # one source cell of weight 1/2 displaced by (1, 0)
        locs = np.array([[0.0, 0.0], [1.0, 0.0]])
        a1 = TransportAssignment(np.array([0, 0]), np.array([0.5, 0.5]),
                                 locs, locs)
        a2 = TransportAssignment(np.array([1, 0]), np.array([0.5, 0.5]),
                                 locs, locs)
        ref = GridDensity(np.array([[0.5, 0.5], [0.0, 0.0]]))
        f1 = GridFeature(a1, a1.mapped_locations(), ref)
        f2 = GridFeature(a2, a2.mapped_locations(), ref)
        assert embedding_distance(f1, f2) == pytest.approx(math.sqrt(0.5))

    def test_reference_mismatch(self):
        rng = np.random.default_rng(1)
        f1, _ = gaussian_features(rng, 1, 2)
        f2, _ = gaussian_features(rng, 1, 2)
        with pytest.raises(ReferenceMismatch):
            embedding_distance(f1[0], f2[0])

    def test_triangle_inequality_gaussian_path(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            feats, _ = gaussian_features(rng, 3, 3, means=True)
            dab = embedding_distance(feats[0], feats[1])
            dbc = embedding_distance(feats[1], feats[2])
            dac = embedding_distance(feats[0], feats[2])
            assert dac <= dab + dbc + 1e-9

    def test_triangle_inequality_grid_path(self):
        rng = np.random.default_rng(3)
        ref_w = rng.uniform(0.2, 1.0, size=(5, 5))
        ref = GridDensity(ref_w / ref_w.sum())
        ds = []
        for _ in range(3):
            w = rng.uniform(0.2, 1.0, size=(5, 5))
            ds.append(GridDensity(w / w.sum()))
        f = embed_grids(ds, ref, lam=20.0)
        dab = embedding_distance(f[0], f[1])
        dbc = embedding_distance(f[1], f[2])
        dac = embedding_distance(f[0], f[2])
        assert dac <= dab + dbc + 1e-9


class TestKernelEval:
    def test_coincident_value(self):
        rng = np.random.default_rng(4)
        feats, _ = gaussian_features(rng, 1, 2)
        theta = KernelParams(2.0, 1.0, 1.0, 0.25)
        assert kernel_eval(feats[0], feats[0], theta) == pytest.approx(4.25)

    def test_unit_distance(self):
        reference = GaussianMeasure([0.0], [[1.0]])
        ms = [GaussianMeasure([0.0], [[1.0]]), GaussianMeasure([1.0], [[1.0]])]
        f = embed_gaussians(ms, reference)
        theta = KernelParams(1.0, 1.0, 2.0, 0.0)
        assert kernel_eval(f[0], f[1], theta) == pytest.approx(math.exp(-1.0))

    def test_general_values(self):
        reference = GaussianMeasure([0.0], [[1.0]])
        ms = [GaussianMeasure([0.0], [[1.0]]), GaussianMeasure([4.0], [[1.0]])]
        f = embed_gaussians(ms, reference)
        theta = KernelParams(2.0, 0.5, 1.0, 0.1)
        assert kernel_eval(f[0], f[1], theta) == pytest.approx(4.0 * math.exp(-2.0))


class TestGram:
    def test_single_feature(self):
        rng = np.random.default_rng(5)
        feats, _ = gaussian_features(rng, 1, 2)
        theta = KernelParams(1.5, 1.0, 1.0, 0.25)
        g = gram_matrix(feats, theta)
        assert g.shape == (1, 1)
        assert g[0, 0] == pytest.approx(1.5**2 + 0.25)

    def test_duplicated_feature_nugget_on_diagonal_only(self):
        rng = np.random.default_rng(6)
        feats, _ = gaussian_features(rng, 1, 2)
        theta = KernelParams(1.0, 1.0, 1.0, 0.25)
        g = gram_matrix([feats[0], feats[0]], theta)
        a = theta.amplitude**2 + theta.nugget
        np.testing.assert_allclose(g, [[a, a - 0.25], [a - 0.25, a]])

    def test_thirty_random_features_psd(self):
        rng = np.random.default_rng(7)
        feats, _ = gaussian_features(rng, 30, 2)
        theta = KernelParams(1.0, 1.0, 1.0, 1e-5)
        report = psd_diagnostic(gram_matrix(feats, theta), tol=1e-8)
        assert report.negatives == 0

    def test_psd_across_theta_box(self):
        rng = np.random.default_rng(8)
        feats, _ = gaussian_features(rng, 15, 3, means=True)
        dist = pairwise_distances(feats)
        for amp in (0.05, 1.0, 10.0):
            for rate in (0.01, 1.0, 10.0):
                for expo in (0.5, 1.0, 2.0):
                    theta = KernelParams(amp, rate, expo, 1e-5)
                    rep = psd_diagnostic(gram_from_distances(dist, theta), tol=1e-8)
                    assert rep.negatives == 0

    def test_gram_orthogonal_invariance(self):
        rng = np.random.default_rng(9)
        d = 3
        ref_cov = random_spd(rng, d)
        covs = [random_spd(rng, d) for _ in range(6)]
        u = ortho_group.rvs(d, random_state=rng)
        theta = KernelParams(1.0, 1.0, 1.0, 1e-4)
        zero = np.zeros(d)
        base = gram_matrix(embed_gaussians(
            [GaussianMeasure(zero, c) for c in covs],
            GaussianMeasure(zero, ref_cov)), theta)
        rot = gram_matrix(embed_gaussians(
            [GaussianMeasure(zero, u @ c @ u.T) for c in covs],
            GaussianMeasure(zero, u @ ref_cov @ u.T)), theta)
        np.testing.assert_allclose(rot, base, atol=1e-8)


class TestPsdDiagnostic:
    def test_identity_no_negatives(self):
        rep = psd_diagnostic(np.eye(5))
        assert rep.negatives == 0
        assert rep.min_eigenvalue == pytest.approx(1.0)

    def test_indefinite_two_by_two(self):
        rep = psd_diagnostic(np.array([[1.0, 2.0], [2.0, 1.0]]))
        np.testing.assert_allclose(rep.eigenvalues, [-1.0, 3.0])
        assert rep.negatives == 1

    def test_rejects_asymmetric(self):
        with pytest.raises(NotSymmetric):
            psd_diagnostic(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_naive_gram_indefinite_in_2d(self):
        measures = sample_gaussian_population(100, 2, seed=(1, 0),
                                              entry_range=(0.1, 0.7))
        rep = psd_diagnostic(naive_w2_gram(measures), tol=1e-6)
        assert rep.negatives >= 1


class TestNaiveKernel:
    def test_equal_inputs(self):
        m = GaussianMeasure([0.3, 0.4], np.eye(2))
        assert naive_w2_kernel(m, m) == 1.0

    def test_unit_distance(self):
        a = GaussianMeasure([0.0], [[1.0]])
        b = GaussianMeasure([1.0], [[1.0]])
        assert naive_w2_kernel(a, b) == pytest.approx(math.exp(-1.0))

    def test_embedding_gram_psd_on_same_inputs(self):
        measures = sample_gaussian_population(40, 2, seed=(2, 0),
                                              entry_range=(0.1, 0.7))
        bar = gaussian_barycenter([m.cov for m in measures]).result
        reference = GaussianMeasure(np.zeros(2), bar)
        feats = embed_gaussians(measures, reference)
        gram = radial_eval(SquareExponential(1.0, 1.0), pairwise_distances(feats))
        rep = psd_diagnostic(gram, tol=1e-8)
        assert rep.negatives == 0
