import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenesim.fields import (Aabb, RadianceField, field_by_name,
                             homogeneous_box, two_slab, vacuum)
from scenesim.geometry import Ray
from scenesim.photometry import (RaySampling, exposure_factor, inverse_oetf,
                                 oetf, photometric_loss, render_ray,
                                 render_rays, seam_check)
from scenesim.scene import ExposureStats

UNIT = ExposureStats(mean=0.02, std=0.0)


class TestExposureFactor:
    def test_single_exposure_rig_is_unity(self):
        assert exposure_factor(0.013, UNIT) == 1.0

    def test_linear_in_deviation(self):
        stats = ExposureStats(mean=0.02, std=0.005, epsilon=0.5)
        # 1 + 0.5 * (0.03 - 0.02) / 0.005 = 2.0, by hand
        assert exposure_factor(0.03, stats) == pytest.approx(2.0, abs=1e-15)
        assert exposure_factor(0.02, stats) == pytest.approx(1.0, abs=1e-15)

    def test_nonpositive_exposure_rejected(self):
        with pytest.raises(ValueError):
            exposure_factor(0.0, UNIT)


class TestRenderRays:
    def test_homogeneous_box_matches_closed_form(self):
        # analytic: through a box of density sigma over chord length L the
        # accumulated weight is 1 - exp(-sigma L) and radiance is that times e
        sigma, rad = 0.7, (2.0, 1.0, 0.5)
        field = homogeneous_box(sigma=sigma, radiance=rad)
        ray = Ray(np.array([-5.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]))
        hdr, trans = render_ray(ray, field, RaySampling(64), 0.02, UNIT)
        expect = (1.0 - math.exp(-sigma * 2.0)) * np.asarray(rad)
        assert np.allclose(hdr, expect, atol=1e-12)
        assert trans == pytest.approx(math.exp(-sigma * 2.0), abs=1e-12)

    def test_exact_at_any_sample_count(self):
        # midpoint quadrature telescopes exactly for piecewise-constant fields
        field = homogeneous_box(sigma=2.0)
        ray = Ray(np.array([0.0, 0.0, -4.0]), np.array([0.0, 0.0, 1.0]))
        expect = 1.0 - math.exp(-2.0 * 2.0)
        for k in (1, 2, 7, 64, 333):
            hdr, _ = render_ray(ray, field, RaySampling(k), 0.02, UNIT)
            assert hdr[0] == pytest.approx(expect, abs=1e-12)

    def test_missing_ray_returns_zero_and_full_transmittance(self):
        field = homogeneous_box()
        ray = Ray(np.array([0.0, 5.0, 0.0]), np.array([0.0, 1.0, 0.0]))
        hdr, trans = render_ray(ray, field, RaySampling(16), 0.02, UNIT)
        assert np.all(hdr == 0.0)
        assert trans == 1.0

    def test_vacuum_is_black(self):
        hdr, trans = render_ray(Ray(np.zeros(3), np.array([1.0, 0.0, 0.0])),
                                vacuum(), RaySampling(32), 0.02, UNIT)
        assert np.all(hdr == 0.0)
        assert trans == pytest.approx(1.0, abs=1e-12)

    def test_exposure_scales_output_linearly(self):
        stats = ExposureStats(mean=0.02, std=0.01, epsilon=0.5)
        field = two_slab()
        ray = Ray(np.zeros(3), np.array([1.0, 0.0, 0.0]))
        hdr_a, _ = render_ray(ray, field, RaySampling(64), 0.02, stats)
        hdr_b, _ = render_ray(ray, field, RaySampling(64), 0.04, stats)
        fb = exposure_factor(0.04, stats)
        assert np.allclose(hdr_b, fb * hdr_a, atol=1e-12)

    def test_weight_identity_random_fields(self, rng):
        # sum of compositing weights plus residual transmittance must be 1
        # for every ray and any nonnegative density profile
        for _ in range(200):
            sigmas = rng.uniform(0.0, 3.0, size=8)
            rads = rng.uniform(0.0, 5.0, size=(8, 3))
            lo = np.array([0.0, -10.0, -10.0])
            hi = np.array([8.0, 10.0, 10.0])

            def q(points, dirs, sigmas=sigmas, rads=rads):
                idx = np.clip(points[:, 0].astype(int), 0, 7)
                inside = (points[:, 0] >= 0) & (points[:, 0] <= 8)
                return (np.where(inside[:, None], rads[idx], 0.0),
                        np.where(inside, sigmas[idx], 0.0))

            field = RadianceField(q, Aabb(lo, hi), "steps")
            ray = Ray(np.array([-1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]))
            hdr, trans = render_ray(ray, field, RaySampling(144), 0.02, UNIT)
            # brightest channel bounded by max radiance (convexity of weights)
            assert np.all(hdr <= rads.max() + 1e-12)
            assert 0.0 <= trans <= 1.0
            # weight sum check via an all-ones radiance probe
            ones_field = RadianceField(
                lambda p, d, s=sigmas: (np.ones((p.shape[0], 3)),
                                        q(p, d)[1]),
                Aabb(lo, hi), "probe")
            probe, t2 = render_ray(ray, ones_field, RaySampling(144), 0.02, UNIT)
            assert probe[0] + t2 == pytest.approx(1.0, abs=1e-12)

    def test_batch_matches_single(self, rng):
        field = two_slab()
        origins = rng.uniform(-2, 2, size=(10, 3))
        dirs = rng.normal(size=(10, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        hdr, trans = render_rays(origins, dirs, field, RaySampling(32), 0.02, UNIT)
        for i in range(10):
            h1, t1 = render_ray(Ray(origins[i], dirs[i]), field,
                                RaySampling(32), 0.02, UNIT)
            assert np.allclose(hdr[i], h1) and trans[i] == pytest.approx(t1)


class TestOetf:
    def test_known_anchor_points(self):
        assert oetf(0.0) == 0.0
        assert oetf(1.0) == pytest.approx(1.0, abs=1e-12)
        # linear segment: 12.92 * x below the cut
        assert oetf(0.001) == pytest.approx(0.01292, abs=1e-15)
        # 0.5 -> 1.055 * 0.5**(1/2.4) - 0.055, computed independently
        assert oetf(0.5) == pytest.approx(1.055 * 0.5 ** (1 / 2.4) - 0.055,
                                          abs=1e-15)

    def test_clips_above_one(self):
        assert oetf(7.3) == pytest.approx(1.0, abs=1e-12)

    def test_continuous_at_cut(self):
        lo = oetf(0.0031308 - 1e-12)
        hi = oetf(0.0031308 + 1e-12)
        assert abs(hi - lo) < 1e-6

    @given(st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=200, deadline=None)
    def test_round_trip(self, x):
        assert inverse_oetf(oetf(x)) == pytest.approx(x, abs=1e-9)

    @given(st.floats(min_value=0.0, max_value=0.999),
           st.floats(min_value=1e-6, max_value=1e-3))
    @settings(max_examples=200, deadline=None)
    def test_monotone(self, x, step):
        assert oetf(x + step) >= oetf(x)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            oetf(-0.1)


class TestPhotometricLoss:
    def test_zero_when_consistent(self):
        hdr = np.array([[0.2, 0.4, 0.8]])
        assert photometric_loss(hdr, np.asarray(oetf(hdr))) == 0.0

    def test_is_mse_after_encoding(self):
        hdr = np.array([0.25])
        ldr = np.array([0.0])
        expect = float(oetf(0.25)) ** 2
        assert photometric_loss(hdr, ldr) == pytest.approx(expect, abs=1e-15)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            photometric_loss(np.zeros((2, 3)), np.zeros((3, 3)))


class TestSeamCheck:
    def test_normalized_ratio_unity_on_demo_rig(self, scene):
        field = field_by_name("demo_street")
        stats = ExposureStats.from_rig(scene.rig)
        reports = seam_check(scene.rig, field, stats)
        assert reports
        for rep in reports:
            if rep.degenerate:
                continue
            assert rep.normalized_ratio == pytest.approx(1.0, abs=1e-9)

    def test_raw_ratio_reflects_exposure_factors(self, scene):
        field = field_by_name("demo_street")
        stats = ExposureStats.from_rig(scene.rig)
        for rep in seam_check(scene.rig, field, stats):
            if rep.degenerate:
                continue
            fa = exposure_factor(scene.rig.camera(rep.camera_a).exposure, stats)
            fb = exposure_factor(scene.rig.camera(rep.camera_b).exposure, stats)
            assert rep.raw_ratio == pytest.approx(fa / fb, abs=1e-9)

    def test_vacuum_field_flags_degenerate(self, scene):
        stats = ExposureStats.from_rig(scene.rig)
        with pytest.warns(UserWarning):
            reports = seam_check(scene.rig, vacuum(), stats)
        assert all(r.degenerate for r in reports)
        assert all(r.normalized_ratio == 1.0 for r in reports)


def test_field_registry_lists_known_names():
    with pytest.raises(KeyError, match="unknown field"):
        field_by_name("nope")
