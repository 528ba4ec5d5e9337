import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import all_spherical_specs, random_sites
from spheregp import kernels as K
from spheregp.exceptions import KernelSpecError, PoleUndefinedError
from spheregp.geometry import SpherePoint, euclidean_point, great_circle, great_circle_distance, shift

# frozen from 40-digit mpmath evaluations, 12 significant digits
TWO_EXP_MINUS_TWO_PI = 3.73488546342e-3
EXP_MINUS_TWO_PI = 1.86744273171e-3
EXP_MINUS_1_5 = 0.223130160148
EXP_MINUS_PI = 4.32139182638e-2

NORTH = SpherePoint(0.0, math.pi / 2)
SOUTH = SpherePoint(0.0, -math.pi / 2)

lons = st.floats(-math.pi, math.pi, allow_nan=False)
lats = st.floats(-math.pi / 2, math.pi / 2, allow_nan=False)
points = st.builds(SpherePoint, lons, lats)
nonpole = st.builds(SpherePoint, lons, st.floats(-1.5707, 1.5707))
SPECS = all_spherical_specs()
SPHERE_SAFE = [s for s in SPECS if s.family != "separable_lonlat"]
AXISYM = [s for s in SPECS if s.family == "axisym_product" or s.family in K.ISO_FAMILIES]


class TestEvalIso:
    def test_zero_lag(self):
        p = SpherePoint(0.4, -0.3)
        assert K.eval_iso(K.iso_exponential(1, 1), p, p) == 1.0

    def test_antipodal_derived(self):
        v = K.eval_iso(K.iso_exponential(2, 0.5), NORTH, SOUTH)
        assert v == pytest.approx(TWO_EXP_MINUS_TWO_PI, rel=1e-11)

    def test_spherical_compact_support(self):
        v = K.eval_iso(K.iso_spherical(1, 1), SpherePoint(0, 0), SpherePoint(2, 0))
        assert v == 0.0

    def test_rejects_non_iso(self):
        with pytest.raises(KernelSpecError):
            K.eval_iso(K.axisym_exp_product(), NORTH, SOUTH)

    def test_matern_half_is_exponential_of_chord(self, rng):
        lon, lat = random_sites(rng, 50)
        d = great_circle(lon[:, None], lat[:, None], lon[None, :], lat[None, :])
        got = K.covariance(K.chordal_matern(1.0, 0.7, 0.5), lon[:, None], lat[:, None], lon[None, :], lat[None, :])
        want = np.exp(-2 * np.sin(d / 2) / 0.7)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-15)

    def test_matern_three_halves_closed_form(self):
        h = np.linspace(0, 5, 101)
        s = math.sqrt(3) * h
        np.testing.assert_allclose(K.matern_correlation(h, 1.5), (1 + s) * np.exp(-s), rtol=1e-12, atol=1e-15)


class TestEvalLat:
    def test_zero_lag(self):
        assert K.eval_lat(K.lat_exponential(1), 0.3, 0.3) == 1.0

    def test_pole_to_pole(self):
        v = K.eval_lat(K.lat_exponential(0.5), math.pi / 2, -math.pi / 2)
        assert v == pytest.approx(EXP_MINUS_TWO_PI, rel=1e-11)

    @given(lats, lats)
    def test_powered_alpha_one_reduces(self, a, b):
        assert K.eval_lat(K.lat_powered_exponential(1, 1), a, b) == pytest.approx(
            K.eval_lat(K.lat_exponential(1), a, b), rel=1e-15, abs=0
        )

    def test_rejects_bad_latitude(self):
        with pytest.raises(KernelSpecError):
            K.eval_lat(K.lat_exponential(1), 2.0, 0.0)


class TestProduct:
    def test_zero_lag(self):
        spec = K.make_axisym_product(K.iso_exponential(1, 1), K.lat_exponential(1))
        p = SpherePoint(1.0, 0.7)
        assert K.eval(spec, p, p) == 1.0

    def test_derived_value(self):
        # y on latitude 0.5 chosen so that d(x, y) = 1
        theta = math.acos(math.cos(1.0) / math.cos(0.5))
        x, y = SpherePoint(0, 0), SpherePoint(theta, 0.5)
        assert great_circle_distance(x, y) == pytest.approx(1.0, abs=1e-15)
        v = K.eval(K.axisym_exp_product(1, 1, 1), x, y)
        assert v == pytest.approx(EXP_MINUS_1_5, rel=1e-11)

    def test_long_latitude_range_limit(self, rng):
        iso = K.iso_exponential(1.7, 0.6)
        spec = K.make_axisym_product(iso, K.lat_exponential(1e8))
        lon, lat = random_sites(rng, 30)
        for i in range(29):
            x, y = SpherePoint(lon[i], lat[i]), SpherePoint(lon[i + 1], lat[i + 1])
            assert K.eval(spec, x, y) == pytest.approx(K.eval_iso(iso, x, y), rel=1e-7)

    def test_children_validated(self):
        with pytest.raises(KernelSpecError):
            K.make_axisym_product(K.lat_exponential(1), K.iso_exponential())
        with pytest.raises(KernelSpecError):
            K.make_axisym_product(K.iso_exponential(), K.iso_exponential())

    def test_param_order(self):
        assert K.param_names(K.axisym_exp_product()) == ["sigma", "r_iso", "r_lat", "nugget"]


class TestSeparable:
    def test_zero_lag(self):
        p = SpherePoint(0.2, 0.3)
        assert K.eval_separable_lonlat(K.separable_lonlat(1.3, 1, 1), p, p) == 1.3

    def test_half_turn(self):
        v = K.eval_separable_lonlat(K.separable_lonlat(1, 1, 1), SpherePoint(0, 0.1), SpherePoint(math.pi, 0.1))
        assert v == pytest.approx(EXP_MINUS_PI, rel=1e-11)

    def test_lag_is_wrapped(self):
        spec = K.separable_lonlat(1, 1, 1)
        a = K.eval_separable_lonlat(spec, SpherePoint(-3.0, 0), SpherePoint(3.0, 0))
        assert a == pytest.approx(math.exp(-(2 * math.pi - 6.0)))

    @pytest.mark.parametrize("evaluator", [K.eval_separable_lonlat, K.eval])
    def test_pole_raises(self, evaluator):
        with pytest.raises(PoleUndefinedError, match="covariance undefined at pole"):
            evaluator(K.separable_lonlat(), NORTH, SpherePoint(0.1, 0.2))


class TestEuclidean:
    def test_zero_lag(self):
        p = euclidean_point((0.3, 0.4))
        assert K.eval_euclidean_aniso(K.euclidean_aniso_exp(2.5, 1, 1), p, p) == 2.5

    def test_derived(self):
        v = K.eval_euclidean_aniso(K.euclidean_aniso_exp(1, 1, 2), euclidean_point((0, 0)), euclidean_point((1, 1)))
        assert v == pytest.approx(math.exp(-1) * math.exp(-0.5), rel=1e-15)

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 3))
    def test_equal_ranges(self, a, b, r):
        v = K.eval_euclidean_aniso(K.euclidean_aniso_exp(1, r, r), euclidean_point((0, 0)), euclidean_point((a, b)))
        assert v == pytest.approx(math.exp(-(abs(a) + abs(b)) / r), rel=1e-14)

    def test_not_a_sphere_kernel(self):
        with pytest.raises(KernelSpecError):
            K.eval(K.euclidean_aniso_exp(), NORTH, SOUTH)


class TestNugget:
    @pytest.mark.parametrize("spec", SPHERE_SAFE, ids=lambda s: s.label)
    def test_added_on_coincidence_only(self, spec):
        noisy = K.set_params(spec, [p.value for p in K.param_vector(spec)][:-1] + [0.1])
        x, y = SpherePoint(0.5, 0.2), SpherePoint(0.6, 0.2)
        assert K.eval(noisy, x, x) == pytest.approx(K.eval(spec, x, x) + 0.1, rel=1e-15)
        assert K.eval(noisy, x, y) == K.eval(spec, x, y)

    def test_pole_coincidence_any_longitude(self):
        spec = K.iso_exponential(1, 1, nugget=0.1)
        assert K.eval(spec, SpherePoint(1.0, math.pi / 2), SpherePoint(-2.0, math.pi / 2)) == pytest.approx(1.1)


class TestParams:
    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label)
    def test_round_trip(self, spec):
        again = K.set_params(spec, [p.value for p in K.param_vector(spec)])
        assert again == spec

    def test_negative_sigma(self):
        spec = K.axisym_exp_product()
        with pytest.raises(KernelSpecError):
            K.set_params(spec, [-1, 1, 1, 0])

    def test_length_mismatch(self):
        with pytest.raises(KernelSpecError):
            K.set_params(K.iso_exponential(), [1.0])

    @pytest.mark.parametrize(
        "factory",
        [
            lambda: K.iso_exponential(0, 1),
            lambda: K.iso_exponential(1, -1),
            lambda: K.iso_powered_exponential(1, 1, 1.5),
            lambda: K.chordal_matern(1, 1, 0),
            lambda: K.iso_exponential(1, 1, nugget=-0.1),
            lambda: K.set_params(K.iso_exponential(1, 1), [1, 1, 11]),
            lambda: K.set_params(K.iso_spherical(1, 1), [1, 4.0, 0]),
            lambda: K.KernelSpec("iso_cubic", {"sigma": 1, "r_iso": 1}),
            lambda: K.KernelSpec("iso_exponential", {"sigma": 1}),
        ],
    )
    def test_invalid_specs(self, factory):
        with pytest.raises(KernelSpecError):
            factory()

    @pytest.mark.parametrize("spec", SPECS + [K.euclidean_aniso_exp(1, 2, 3)], ids=lambda s: s.label)
    def test_json_round_trip(self, spec):
        d = spec.to_dict()
        assert set(d) == {"family", "params", "children"}
        assert K.KernelSpec.from_dict(d) == spec

    def test_json_shape_of_product(self):
        d = K.axisym_exp_product(1.0, 2.0, 0.5, nugget=0.01).to_dict()
        assert d["params"] == {"nugget": 0.01}
        assert [c["family"] for c in d["children"]] == ["iso_exponential", "lat_exponential"]

    @pytest.mark.parametrize("bad", [[], {"params": {}}, {"family": "iso_exponential", "params": "x"}])
    def test_from_dict_errors(self, bad):
        with pytest.raises(KernelSpecError):
            K.KernelSpec.from_dict(bad)


class TestInvariants:
    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label)
    def test_symmetry_exact(self, spec, rng):
        lon, lat = random_sites(rng, 80)
        M = K.covariance(spec, lon[:, None], lat[:, None], lon[None, :], lat[None, :])
        assert np.array_equal(M, M.T)

    @given(nonpole, nonpole)
    def test_symmetry_property(self, x, y):
        for spec in SPECS:
            assert K.eval(spec, x, y) == K.eval(spec, y, x)

    @given(points, points, st.floats(-20, 20))
    def test_axial_symmetry(self, x, y, delta):
        for spec in AXISYM:
            assert K.eval(spec, shift(x, delta), shift(y, delta)) == pytest.approx(K.eval(spec, x, y), abs=1e-12)

    @given(lons, lats, lats)
    def test_latitudinal_reversibility(self, dlon, a, b):
        for spec in AXISYM:
            v1 = K.eval(spec, SpherePoint(0.0, a), SpherePoint(dlon, b))
            v2 = K.eval(spec, SpherePoint(0.0, b), SpherePoint(dlon, a))
            assert v1 == pytest.approx(v2, abs=1e-12)

    @given(nonpole, nonpole)
    def test_bounded_by_variance(self, x, y):
        for spec in SPECS:
            v = K.eval(spec, x, y)
            assert 0.0 <= v <= spec.variance + spec.nugget

    @pytest.mark.parametrize("spec", SPHERE_SAFE, ids=lambda s: s.label)
    def test_matches_scalar_oracle(self, spec, rng):
        lon, lat = random_sites(rng, 12, poles=True)
        pts = list(zip(lon, lat))
        want = oracles.gram(spec.to_dict(), pts, pts)
        got = K.covariance(spec, lon[:, None], lat[:, None], lon[None, :], lat[None, :])
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label)
    def test_gram_positive_definite(self, spec, rng):
        lon, lat = random_sites(rng, 60)
        M = K.covariance(spec, lon[:, None], lat[:, None], lon[None, :], lat[None, :])
        np.linalg.cholesky(M + 1e-10 * spec.variance * np.eye(60))
