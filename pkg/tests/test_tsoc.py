import math

import numpy as np
import pytest

from socrescale.cones import BlockVector, ConeStructure, lambda_min, soc
from socrescale.tsoc import (
    BlockAutomorphism,
    HalfSpace,
    automorphism_from_cut,
    check_automorphism,
    hyperbolic_rotation,
    hyperbolic_rotation_inv,
    min_volume_normal,
    otsoc_volume,
    std_tsoc_volume,
)
from tests.conftest import random_interior_direction, sample_std_tsoc


def mc_std_tsoc_volume(d, samples, seed):
    """Independent rejection-sampling oracle over the box [0,1] x [-1,1]^(d-1)."""
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = samples
    while remaining:
        chunk = min(remaining, 1_000_000)
        x0 = rng.uniform(0.0, 1.0, chunk)
        tail = rng.uniform(-1.0, 1.0, (chunk, d - 1))
        hits += int(np.count_nonzero(np.linalg.norm(tail, axis=1) <= x0))
        remaining -= chunk
    return 2.0 ** (d - 1) * hits / samples


class TestStdVolume:
    def test_triangle(self):
        # base 2, height 1
        assert std_tsoc_volume(2) == pytest.approx(1.0, rel=1e-12)

    def test_unit_cone(self):
        # pi r^2 h / 3 with r = h = 1
        assert std_tsoc_volume(3) == pytest.approx(math.pi / 3.0, rel=1e-12)

    def test_dimension_four_frozen_monte_carlo(self):
        # oracle value from 1e7 rejection samples: 1.0478 +/- 0.001;
        # the closed form evaluates to pi/3 here as well
        assert std_tsoc_volume(4) == pytest.approx(1.0471975511965976, rel=1e-12)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_monte_carlo_agreement(self, d):
        est = mc_std_tsoc_volume(d, 1_000_000, 7000 + d)
        assert est == pytest.approx(std_tsoc_volume(d), rel=0.02)

    def test_low_dimension_rejected(self):
        with pytest.raises(ValueError):
            std_tsoc_volume(1)


class TestHyperbolicRotation:
    def test_axis_point_gives_identity(self):
        g = hyperbolic_rotation([1.0, 0.0, 0.0])
        assert np.allclose(g.matrix, np.eye(3))

    def test_two_dimensional_hand_value(self):
        g = hyperbolic_rotation([math.sqrt(2.0), 1.0])
        expected = np.array([[math.sqrt(2.0), 1.0], [1.0, math.sqrt(2.0)]])
        assert np.allclose(g.matrix, expected, atol=1e-12)
        assert np.linalg.det(g.matrix) == pytest.approx(1.0, abs=1e-12)

    def test_inverse_composes_to_identity(self, rng):
        for _ in range(100):
            d = int(rng.integers(2, 8))
            w = random_interior_direction(rng, d)
            fwd = hyperbolic_rotation(w).matrix
            inv = hyperbolic_rotation_inv(w).matrix
            assert np.abs(fwd @ inv - np.eye(d)).max() < 1e-10

    def test_determinant_one_across_dimensions(self, rng):
        for _ in range(1000):
            d = int(rng.integers(2, 11))
            w = random_interior_direction(rng, d)
            det = np.linalg.det(hyperbolic_rotation(w).matrix)
            assert det == pytest.approx(1.0, rel=1e-8)

    def test_maps_axis_to_normalized_w(self, rng):
        for _ in range(50):
            d = int(rng.integers(2, 6))
            w = random_interior_direction(rng, d)
            gamma = math.sqrt(w[0] ** 2 - w[1:] @ w[1:])
            e = np.zeros(d)
            e[0] = 1.0
            assert np.allclose(hyperbolic_rotation(w).matrix @ e, w / gamma)

    def test_non_interior_rejected(self):
        with pytest.raises(ValueError):
            hyperbolic_rotation([1.0, 1.0])
        with pytest.raises(ValueError):
            hyperbolic_rotation([-2.0, 1.0])


class TestAutomorphismFromCut:
    def test_identity_cut(self):
        e = np.array([1.0, 0.0, 0.0])
        g = automorphism_from_cut(HalfSpace(e, e))
        assert np.allclose(g.matrix, np.eye(3))
        assert g.det == pytest.approx(1.0)

    def test_pure_shrink(self):
        for d in (2, 3, 5):
            e = np.zeros(d)
            e[0] = 1.0
            g = automorphism_from_cut(HalfSpace(e, e / math.sqrt(2.0)))
            assert np.allclose(g.matrix, np.eye(d) / math.sqrt(2.0))
            assert g.det == pytest.approx(2.0 ** (-d / 2.0), rel=1e-12)

    def test_maps_standard_cone_into_oblique_cone(self, rng):
        for _ in range(20):
            w = random_interior_direction(rng, 3)
            v = random_interior_direction(rng, 3)
            h = HalfSpace(w, v)
            g = automorphism_from_cut(h)
            pts = sample_std_tsoc(rng, 3, 100)
            images = pts @ g.matrix.T
            in_cone = images[:, 0] - np.linalg.norm(images[:, 1:], axis=1)
            assert in_cone.min() >= -1e-9
            assert (images @ w <= h.offset() + 1e-9).all()
            # the axis image lands on the cutting hyperplane
            assert float(w @ (g.matrix[:, 0])) == pytest.approx(h.offset(), rel=1e-10)

    def test_determinant_matches_volume(self, rng):
        for _ in range(200):
            d = int(rng.integers(2, 7))
            w = random_interior_direction(rng, d)
            v = random_interior_direction(rng, d)
            h = HalfSpace(w, v)
            g = automorphism_from_cut(h)
            vol = otsoc_volume(h, d)
            assert g.det * std_tsoc_volume(d) == pytest.approx(vol, rel=1e-10)

    def test_boundary_preserved(self, rng):
        for _ in range(100):
            d = int(rng.integers(2, 6))
            w = random_interior_direction(rng, d)
            v = random_interior_direction(rng, d)
            g = automorphism_from_cut(HalfSpace(w, v))
            tail = rng.standard_normal(d - 1)
            x = np.concatenate(([np.linalg.norm(tail)], tail))
            y = g.matrix @ x
            assert abs(y[0] - np.linalg.norm(y[1:])) < 1e-8 * max(1.0, np.abs(y).max())

    def test_rejects_nonpositive_offset(self):
        w = np.array([1.0, 0.0])
        with pytest.raises(ValueError):
            automorphism_from_cut(HalfSpace(w, -w))


class TestOtsocVolume:
    def test_standard_case(self):
        for d in (2, 3, 4):
            e = np.zeros(d)
            e[0] = 1.0
            assert otsoc_volume(HalfSpace(e, e), d) == pytest.approx(std_tsoc_volume(d))

    def test_shrunk_triangle(self):
        e = np.array([1.0, 0.0])
        vol = otsoc_volume(HalfSpace(e, e / math.sqrt(2.0)), 2)
        assert vol == pytest.approx(0.5, rel=1e-12)

    def test_exact_triangle_oracle(self, rng):
        # d = 2: the region is the triangle with vertices 0 and the
        # intersections of the cut line with the rays x0 = +-x1; its area
        # is the product of the two ray parameters
        for _ in range(50):
            w = random_interior_direction(rng, 2)
            v = random_interior_direction(rng, 2)
            level = float(w @ v)
            t_plus = level / (w[0] + w[1])
            t_minus = level / (w[0] - w[1])
            assert otsoc_volume(HalfSpace(w, v), 2) == pytest.approx(
                t_plus * t_minus, rel=1e-10
            )

    def test_dimension_mismatch(self):
        e = np.array([1.0, 0.0])
        with pytest.raises(ValueError):
            otsoc_volume(HalfSpace(e, e), 3)


class TestMinVolumeNormal:
    def test_axis_point(self):
        h = min_volume_normal([1.0, 0.0, 0.0])
        assert np.allclose(h.w, [1.0, 0.0, 0.0])
        assert otsoc_volume(h, 3) == pytest.approx(std_tsoc_volume(3))

    def test_hand_value(self):
        h = min_volume_normal([1.0, 0.5, 0.0])
        assert np.allclose(h.w, [1.0, -0.5, 0.0])
        assert otsoc_volume(h, 3) == pytest.approx(0.75**1.5 * std_tsoc_volume(3))

    def test_no_candidate_beats_it(self, rng):
        for _ in range(100):
            d = int(rng.integers(2, 6))
            v = random_interior_direction(rng, d)
            best = otsoc_volume(min_volume_normal(v), d)
            for _ in range(50):
                w = random_interior_direction(rng, d)
                det_w = w[0] ** 2 - w[1:] @ w[1:]
                w = w / math.sqrt(det_w)  # normalize block determinant to 1
                assert otsoc_volume(HalfSpace(w, v), d) >= best - 1e-10


class TestCheckAutomorphism:
    def test_identity(self):
        assert check_automorphism(np.eye(4))

    def test_reflection_is_automorphism(self):
        # maps (x0, x1) to (x0, -x1), which preserves the cone
        assert check_automorphism(np.diag([1.0, -1.0]))

    def test_axis_swap_is_not(self):
        # swapping axes flips the sign of the quadratic form
        assert not check_automorphism(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_cut_automorphisms_pass_with_transpose(self, rng):
        for _ in range(100):
            d = int(rng.integers(2, 6))
            w = random_interior_direction(rng, d)
            v = random_interior_direction(rng, d)
            g = automorphism_from_cut(HalfSpace(w, v))
            assert check_automorphism(g.matrix)
            assert check_automorphism(g.matrix.T)

    def test_scaled_rotation_passes(self, rng):
        w = random_interior_direction(rng, 4)
        g = 3.0 * hyperbolic_rotation(w).matrix
        assert check_automorphism(g)

    def test_apply_helper(self):
        g = BlockAutomorphism(2.0 * np.eye(2), 4.0, 2)
        assert np.allclose(g.apply(np.array([1.0, 1.0])), [2.0, 2.0])


class TestMonteCarloAgreement:
    @pytest.mark.parametrize("d", [2, 3])
    def test_oblique_volumes(self, rng, d):
        from socrescale.instances import mc_volume

        for trial in range(5):
            w = random_interior_direction(rng, d)
            v = random_interior_direction(rng, d)
            h = HalfSpace(w, v)
            est, stderr = mc_volume(h, d, 400_000, seed=900 + trial)
            exact = otsoc_volume(h, d)
            assert est == pytest.approx(exact, rel=0.02)
