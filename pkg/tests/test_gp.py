import math

import numpy as np
import pytest

import oracles
from conftest import all_spherical_specs, random_instance, random_sites
from spheregp import gp
from spheregp import kernels as K
from spheregp.exceptions import DataError, NotPositiveDefiniteError, PoleUndefinedError
from spheregp.geometry import SpherePoint

EXP_MINUS_PI = 4.32139182638e-2
SPHERE_SAFE = [s for s in all_spherical_specs() if s.family != "separable_lonlat"]


def rel_err(a, b):
    return np.abs(np.asarray(a) - np.asarray(b)) / np.maximum(np.abs(b), 1e-300)


class TestDataset:
    def test_validation(self):
        with pytest.raises(DataError):
            gp.Dataset([], [])
        with pytest.raises(DataError):
            gp.Dataset([SpherePoint(0, 0)], [1.0, 2.0])
        with pytest.raises(DataError):
            gp.Dataset([SpherePoint(0, 0)], [float("inf")])

    def test_read_only(self):
        d = gp.Dataset([SpherePoint(0, 0)], [1.0])
        with pytest.raises(ValueError):
            d.values[0] = 2.0

    def test_duplicates_pole_aware(self):
        d = gp.Dataset([SpherePoint(1, math.pi / 2), SpherePoint(-1, math.pi / 2)], [1, 2])
        assert d.has_duplicates

    def test_fingerprint(self):
        a = gp.Dataset([SpherePoint(0, 0), SpherePoint(1, 0)], [1, 2])
        assert a.fingerprint() == gp.Dataset([SpherePoint(0, 0), SpherePoint(1, 0)], [1, 2]).fingerprint()
        assert a.fingerprint() != a.with_values([1, 3]).fingerprint()


class TestAssemble:
    def test_single_site(self):
        M = gp.assemble_covariance(K.iso_exponential(1, 1, nugget=0.2), [SpherePoint(0, 0)], [SpherePoint(0, 0)])
        assert M.shape == (1, 1) and M[0, 0] == pytest.approx(1.2)

    def test_antipodal_equator(self):
        pts = [SpherePoint(0, 0), SpherePoint(math.pi, 0)]
        M = gp.assemble_covariance(K.iso_exponential(1, 1), pts, pts)
        assert M[0, 1] == pytest.approx(EXP_MINUS_PI, rel=1e-11)
        assert M[0, 0] == 1.0

    def test_cross_shape_and_no_nugget_off_diagonal(self, rng):
        a, b = random_sites(rng, 4), random_sites(rng, 3)
        M = gp.assemble_covariance(K.iso_exponential(1, 1, nugget=0.5), a, b)
        assert M.shape == (4, 3) and np.all(M <= 1.0)

    def test_pole_error_names_sites(self):
        pts = [SpherePoint(0, 0), SpherePoint(0, math.pi / 2)]
        with pytest.raises(PoleUndefinedError, match=r"covariance undefined at pole.*sites_a\[0\] and sites_b\[1\]"):
            gp.assemble_covariance(K.separable_lonlat(), pts, pts)


class TestBuildModel:
    def test_single_site(self):
        m = gp.build_model(K.iso_exponential(1, 1), gp.Dataset([SpherePoint(0.3, 0.1)], [2.5]))
        assert m.chol.tolist() == [[1.0]]
        assert m.alpha.tolist() == [2.5]
        assert m.log_det == 0.0 and m.jitter == 0.0

    @pytest.mark.parametrize("spec", SPHERE_SAFE, ids=lambda s: s.label)
    def test_reconstruction_and_solve(self, spec, rng):
        lon, lat = random_sites(rng, 60)
        data = gp.Dataset((lon, lat), rng.normal(size=60))
        m = gp.build_model(spec, data)
        Kmat = gp.assemble_covariance(spec, (lon, lat), (lon, lat)) + m.jitter * np.eye(60)
        recon = m.chol @ m.chol.T
        assert np.linalg.norm(recon - Kmat) / np.linalg.norm(Kmat) <= 1e-8
        assert np.linalg.norm(Kmat @ m.alpha - data.values) / np.linalg.norm(data.values) <= 1e-8

    def test_degenerate_variance(self, rng):
        data = gp.Dataset(random_sites(rng, 5), np.zeros(5))
        with pytest.raises(NotPositiveDefiniteError, match="not positive definite at these parameters"):
            gp.build_model(K.iso_exponential(1e-30, 1), data)

    def test_jitter_recorded(self):
        # two sites 1e-9 rad apart under a very smooth kernel need help
        data = gp.Dataset([SpherePoint(0, 0), SpherePoint(1e-9, 0)], [1, 1])
        m = gp.build_model(K.chordal_matern(1, 2, 5), data)
        assert m.jitter > 0

    def test_duplicates_need_nugget(self):
        pts = [SpherePoint(0, 0), SpherePoint(0, 0)]
        data = gp.Dataset(pts, [1.0, 1.2])
        with pytest.raises(DataError):
            gp.build_model(K.iso_exponential(), data)
        m = gp.build_model(K.iso_exponential(nugget=0.1), data)
        assert m.jitter == 0.0

    def test_jitter_ladder(self):
        levels = list(gp.DEFAULT_JITTER.levels(2.0))
        assert levels[0] == 0.0
        np.testing.assert_allclose(levels[1:], 2.0 * 10.0 ** np.arange(-10, -3), rtol=1e-9)


class TestKrige:
    def test_single_site_closed_form(self):
        spec = K.iso_exponential(2.0, 0.5)
        x, t = SpherePoint(0, 0), SpherePoint(0.3, 0.2)
        m = gp.build_model(spec, gp.Dataset([x], [1.7]))
        (res,) = gp.krige(m, [t])
        k = K.eval(spec, x, t)
        assert res.mean == pytest.approx(k / 2.0 * 1.7, rel=1e-14)
        assert res.variance == pytest.approx(2.0 - k * k / 2.0, rel=1e-14)

    def test_at_observed_site(self, rng):
        lon, lat = random_sites(rng, 5)
        data = gp.Dataset((lon, lat), rng.normal(size=5))
        m = gp.build_model(K.axisym_exp_product(1, 1, 0.3), data)
        mean, var = gp.krige_arrays(m, (lon, lat))
        np.testing.assert_allclose(mean, data.values, rtol=0, atol=1e-10)
        assert np.all(var <= 1e-8)

    def test_five_sites_oracle(self, rng):
        spec = K.axisym_exp_product(1.3, 0.8, 0.4)
        lon, lat = random_sites(rng, 5)
        y = rng.normal(size=5)
        target = (0.2, -0.3)
        (res,) = gp.krige(gp.build_model(spec, gp.Dataset((lon, lat), y)), [SpherePoint(*target)])
        om, ov = oracles.conditional(spec.to_dict(), list(zip(lon, lat)), y, target)
        assert abs(res.mean - om) <= 1e-8 * abs(om)
        assert abs(res.variance - ov) <= 1e-8 * abs(ov)

    @pytest.mark.parametrize("seed", range(40))
    def test_oracle_with_nugget(self, seed):
        spec, data, targets = random_instance(seed, nugget=True)
        mean, var = gp.krige_arrays(gp.build_model(spec, data), targets)
        pts = list(zip(data.lon, data.lat))
        for k in range(targets[0].size):
            om, ov = oracles.conditional(spec.to_dict(), pts, data.values, (targets[0][k], targets[1][k]))
            assert rel_err(mean[k], om) <= 1e-8
            assert rel_err(var[k], ov) <= 1e-8

    @pytest.mark.parametrize("spec", SPHERE_SAFE, ids=lambda s: s.label)
    def test_interpolation_all_families(self, spec, rng):
        lon, lat = random_sites(rng, 15)
        data = gp.Dataset((lon, lat), rng.normal(size=15))
        mean, var = gp.krige_arrays(gp.build_model(spec, data), (lon, lat))
        np.testing.assert_allclose(mean, data.values, atol=1e-6)
        assert np.all(var <= 1e-8)

    @pytest.mark.parametrize("seed", range(20))
    def test_variance_screening_and_monotone(self, seed):
        spec, data, targets = random_instance(seed)
        prior = K.covariance(spec, *targets, *targets, with_nugget=False)
        _, v_full = gp.krige_arrays(gp.build_model(spec, data), targets)
        assert np.all(v_full <= prior + 1e-12)
        if len(data) > 1:
            _, v_less = gp.krige_arrays(gp.build_model(spec, data.subset(range(len(data) - 1))), targets)
            assert np.all(v_full <= v_less + 1e-9)

    @pytest.mark.parametrize("delta", [0.7, -2.9, 12.0])
    def test_longitude_shift_equivariance(self, delta, rng):
        spec = K.axisym_exp_product(1.0, 0.9, 0.25)
        lon, lat = random_sites(rng, 40)
        y = rng.normal(size=40)
        tl, tt = random_sites(rng, 10)
        m0, v0 = gp.krige_arrays(gp.build_model(spec, gp.Dataset((lon, lat), y)), (tl, tt))
        m1, v1 = gp.krige_arrays(gp.build_model(spec, gp.Dataset((lon + delta, lat), y)), (tl + delta, tt))
        np.testing.assert_allclose(m1, m0, rtol=0, atol=1e-10)
        np.testing.assert_allclose(v1, v0, rtol=0, atol=1e-10)

    def test_empty_targets(self):
        m = gp.build_model(K.iso_exponential(), gp.Dataset([SpherePoint(0, 0)], [1.0]))
        assert gp.krige(m, []) == []

    def test_separable_pole_target(self):
        m = gp.build_model(K.separable_lonlat(), gp.Dataset([SpherePoint(0, 0)], [1.0]))
        with pytest.raises(PoleUndefinedError):
            gp.krige(m, [SpherePoint(0, math.pi / 2)])


class TestLogLikelihood:
    def test_n1_zero(self):
        v = gp.log_likelihood(K.iso_exponential(1, 1), gp.Dataset([SpherePoint(0, 0)], [0.0]))
        assert v == pytest.approx(-0.5 * math.log(2 * math.pi), rel=1e-15)

    def test_n1_scalar_gaussian(self):
        v = gp.log_likelihood(K.iso_exponential(2, 1), gp.Dataset([SpherePoint(0, 0)], [1.0]))
        assert v == pytest.approx(-0.5 * (math.log(2 * math.pi) + math.log(2) + 0.5), rel=1e-15)

    def test_n6_oracle(self, rng):
        spec = K.axisym_exp_product(1.4, 0.7, 0.5, nugget=0.05)
        lon, lat = random_sites(rng, 6)
        y = rng.normal(size=6)
        v = gp.log_likelihood(spec, gp.Dataset((lon, lat), y))
        assert rel_err(v, oracles.loglik(spec.to_dict(), list(zip(lon, lat)), y)) <= 1e-8

    def test_non_pd_returns_minus_inf(self, rng):
        data = gp.Dataset(random_sites(rng, 5), np.ones(5))
        assert gp.log_likelihood(K.iso_exponential(1e-30, 1), data) == -math.inf

    def test_matches_model_property(self, rng):
        spec = K.chordal_matern(1, 0.5, 1.5)
        data = gp.Dataset(random_sites(rng, 20), rng.normal(size=20))
        assert gp.log_likelihood(spec, data) == gp.build_model(spec, data).log_likelihood


class TestSimulate:
    def test_deterministic(self, rng):
        sites = random_sites(rng, 10)
        a = gp.simulate(K.axisym_exp_product(), sites, seed=7, n_draws=3)
        b = gp.simulate(K.axisym_exp_product(), sites, seed=7, n_draws=3)
        assert a.shape == (3, 10) and np.array_equal(a, b)
        assert not np.array_equal(a, gp.simulate(K.axisym_exp_product(), sites, seed=8, n_draws=3))

    def test_zero_draws(self, rng):
        assert gp.simulate(K.iso_exponential(), random_sites(rng, 4), seed=1, n_draws=0).shape == (0, 4)

    def test_standard_normal_stream(self):
        z = gp.standard_normal(3, 200001)
        assert z.size == 200001
        assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01
        assert np.array_equal(gp.standard_normal(3, 5), gp.standard_normal(3, 6)[:5])

    def test_pole_separable_error(self):
        with pytest.raises(PoleUndefinedError):
            gp.simulate(K.separable_lonlat(), [SpherePoint(0, math.pi / 2), SpherePoint(0, 0)], seed=0)
