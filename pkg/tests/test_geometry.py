import math

import numpy as np
import pytest

from conftest import random_rotation
from scenesim.geometry import (AlignmentInput, Ray, ViewDelta, align_cameras,
                               apply_view_delta, equirect_dir, equirect_grid,
                               equirect_pixel, pixel_ray)
from scenesim.scene import CameraModel, Pose6D


def _camera(extrinsic=None):
    return CameraModel("cam", (100.0, 100.0, 50.0, 40.0), (100, 80),
                       extrinsic or Pose6D.identity(), 0.02)


class TestViewDelta:
    def test_zero_delta_is_identity(self):
        pose = Pose6D.from_heading(3.0, 4.0, 0.7)
        out = apply_view_delta(pose, ViewDelta())
        assert np.allclose(out.matrix(), pose.matrix(), atol=1e-12)

    def test_ahead_and_above(self):
        pose = Pose6D.identity()
        out = apply_view_delta(pose, ViewDelta(translation=(5.0, 0.0, 0.5)))
        assert np.allclose(out.translation, [5.0, 0.0, 0.5])

    def test_composition_associativity(self, rng):
        # oracle: direct 4x4 matrix product of the two delta transforms
        for _ in range(20):
            pose = Pose6D(random_rotation(rng), rng.normal(size=3))
            d1 = ViewDelta(tuple(rng.normal(size=3)), tuple(rng.normal(size=3)))
            d2 = ViewDelta(tuple(rng.normal(size=3)), tuple(rng.normal(size=3)))
            stepped = apply_view_delta(apply_view_delta(pose, d1), d2)
            composed = Pose6D.from_matrix(
                d2.matrix() @ d1.matrix() @ pose.matrix())
            assert np.allclose(stepped.matrix(), composed.matrix(), atol=1e-9)

    def test_orthonormality_preserved(self, rng):
        pose = Pose6D(random_rotation(rng), rng.normal(size=3))
        for _ in range(50):
            delta = ViewDelta(tuple(rng.normal(size=3)),
                              tuple(rng.normal(size=3)))
            pose = apply_view_delta(pose, delta)
        assert pose.orthonormality_error() <= 1e-12


def _synthetic_alignment(rng, scale, rigid_rot=None, rigid_t=None):
    """Build vehicle-space ground truth and its similarity-transformed copy."""
    rigid_rot = np.eye(3) if rigid_rot is None else rigid_rot
    rigid_t = np.zeros(3) if rigid_t is None else rigid_t
    truth = {}
    for i in range(3):          # cameras
        for k in range(4):      # triggers
            truth[(i, k)] = Pose6D(random_rotation(rng),
                                   rng.normal(scale=5.0, size=3))
    external = {
        key: Pose6D(rigid_rot @ p.rotation,
                    scale * (rigid_rot @ p.translation) + rigid_t)
        for key, p in truth.items()
    }
    inp = AlignmentInput(external, truth[(0, 0)], truth[(0, 1)])
    return truth, inp


class TestAlignment:
    def test_identity_space(self, rng):
        truth, inp = _synthetic_alignment(rng, scale=1.0)
        out = align_cameras(inp)
        for key in truth:
            assert np.allclose(out[key].matrix(), truth[key].matrix(), atol=1e-9)

    def test_uniform_scale_two(self, rng):
        truth, inp = _synthetic_alignment(rng, scale=2.0)
        out = align_cameras(inp)
        for key in truth:
            assert np.allclose(out[key].matrix(), truth[key].matrix(), atol=1e-9)

    def test_anchor_recovered_exactly(self, rng):
        truth, inp = _synthetic_alignment(
            rng, scale=3.7, rigid_rot=random_rotation(rng),
            rigid_t=rng.normal(size=3))
        out = align_cameras(inp)
        assert np.allclose(out[(0, 0)].matrix(), truth[(0, 0)].matrix(),
                           atol=1e-12)

    def test_hundred_random_similarity_rigs(self, rng):
        for _ in range(100):
            scale = float(rng.uniform(0.2, 5.0))
            truth, inp = _synthetic_alignment(
                rng, scale=scale, rigid_rot=random_rotation(rng),
                rigid_t=rng.normal(scale=10.0, size=3))
            out = align_cameras(inp)
            worst = max(
                np.max(np.abs(out[key].matrix() - truth[key].matrix()))
                for key in truth)
            assert worst <= 1e-9

    def test_degenerate_anchors_rejected(self, rng):
        truth, inp = _synthetic_alignment(rng, scale=1.0)
        inp.front_vehicle_1 = inp.front_vehicle_0
        inp.external[(0, 1)] = inp.external[(0, 0)]
        with pytest.raises(ValueError, match="degenerate"):
            align_cameras(inp)


class TestPixelRay:
    def test_principal_point_is_optical_axis(self, rng):
        cam = _camera(Pose6D(random_rotation(rng), rng.normal(size=3)))
        ray = pixel_ray(cam, (cam.cx, cam.cy))
        axis = cam.extrinsic.rotation @ np.array([0.0, 0.0, 1.0])
        assert np.allclose(ray.direction, axis, atol=1e-12)

    def test_one_focal_off_axis_is_45_degrees(self):
        cam = _camera()
        # pixel (cx + fx, cy) would be at u=150 > width; widen the image
        cam = CameraModel("cam", (40.0, 40.0, 50.0, 40.0), (100, 80),
                          Pose6D.identity(), 0.02)
        ray = pixel_ray(cam, (cam.cx + cam.fx, cam.cy))
        axis = np.array([0.0, 0.0, 1.0])
        angle = math.degrees(math.acos(float(ray.direction @ axis)))
        assert angle == pytest.approx(45.0, abs=1e-9)  # atan(fx/fx)

    def test_direction_unit_norm(self, rng):
        cam = _camera(Pose6D(random_rotation(rng), rng.normal(size=3)))
        for _ in range(50):
            u = float(rng.uniform(0, cam.image_size[0]))
            v = float(rng.uniform(0, cam.image_size[1]))
            ray = pixel_ray(cam, (u, v))
            assert abs(np.linalg.norm(ray.direction) - 1.0) <= 1e-12

    def test_out_of_bounds_rejected(self):
        with pytest.raises(ValueError):
            pixel_ray(_camera(), (200.0, 10.0))


class TestEquirect:
    def test_row_zero_near_zenith(self):
        d = equirect_dir(0, 0, 64, 128)
        # within one pixel (pi/64) of +z
        assert math.acos(float(d[2])) <= math.pi / 64

    def test_equator_col_zero_near_plus_x(self):
        h, w = 64, 128
        d = equirect_dir(h // 2, 0, h, w)
        angle = math.acos(np.clip(d @ np.array([1.0, 0.0, 0.0]), -1, 1))
        # half-pixel error budget in both axes
        assert angle <= 0.5 * (math.pi / h) + 0.5 * (2 * math.pi / w)

    @pytest.mark.parametrize("h,w", [(32, 64), (64, 128), (128, 256)])
    def test_round_trip_every_pixel(self, h, w):
        for r in range(h):
            for c in range(w):
                assert equirect_pixel(equirect_dir(r, c, h, w), h, w) == (r, c)

    def test_grid_matches_scalar(self):
        h, w = 16, 32
        grid = equirect_grid(h, w)
        for r in range(0, h, 5):
            for c in range(0, w, 7):
                assert np.allclose(grid[r, c], equirect_dir(r, c, h, w))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            equirect_dir(64, 0, 64, 128)


def test_ray_normalizes_direction():
    ray = Ray(np.zeros(3), np.array([3.0, 4.0, 0.0]))
    assert np.allclose(ray.direction, [0.6, 0.8, 0.0])
