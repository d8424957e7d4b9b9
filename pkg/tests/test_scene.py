"""Geometric scene, specular reflection, and channel synthesis."""

import math

import numpy as np
import pytest

from nfisac.geometry import Point2D, steering_matrix, steering_vector
from nfisac.scene import (KIND_ST, KIND_T1, KIND_T2, PathComponent, Rect,
                          Scene, SensingTargetCluster, Type1Object,
                          Type2Object, draw_coefficients,
                          enumerate_interactions, near_field_check,
                          random_type1, realize, specular_point,
                          synthesize_downlink, synthesize_sensing)

WALL_X7 = Type2Object(Point2D(7.0, 0.0), Point2D(7.0, 20.0), 0.8)


class TestSpecularPoint:
    def test_symmetric_midpoint(self):
        s = specular_point(WALL_X7, (0.0, 0.0), (0.0, 20.0))
        assert s == pytest.approx((7.0, 10.0))

    def test_opposite_sides_none(self):
        wall = Type2Object(Point2D(-5.0, 10.0), Point2D(5.0, 10.0), 0.5)
        assert specular_point(wall, (0.0, 0.0), (2.0, 20.0)) is None

    def test_intersection_outside_segment_none(self):
        short = Type2Object(Point2D(7.0, 0.0), Point2D(7.0, 1.0), 0.5)
        assert specular_point(short, (0.0, 0.0), (0.0, 20.0)) is None

    def test_monostatic_foot_of_perpendicular(self):
        s = specular_point(WALL_X7, (0.0, 6.0), (0.0, 6.0))
        assert s == pytest.approx((7.0, 6.0))

    def test_degenerate_wall_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            Type2Object(Point2D(1.0, 1.0), Point2D(1.0, 1.0), 0.5)

    def test_snell_law_residual(self, rng):
        # angle of incidence equals angle of reflection at the returned point
        for _ in range(25):
            src = (rng.uniform(-6, 6), rng.uniform(0.5, 19.0))
            dst = (rng.uniform(-6, 6), rng.uniform(0.5, 19.0))
            s = specular_point(WALL_X7, src, dst)
            if s is None:
                continue
            normal = np.array([-1.0, 0.0])
            v_in = np.asarray(src) - np.asarray(s)
            v_out = np.asarray(dst) - np.asarray(s)
            cos_in = np.dot(v_in, normal) / np.linalg.norm(v_in)
            cos_out = np.dot(v_out, normal) / np.linalg.norm(v_out)
            assert abs(cos_in - cos_out) < 1e-10


class TestEnumerateInteractions:
    def test_single_point_object(self, ula64):
        scene = Scene(type1=(Type1Object(Point2D(3.0, 8.0), 1.0),),
                      type2=(), targets=(), roi=Rect(-7, 7, 5, 25))
        out = enumerate_interactions(scene, ula64, (0.0, 20.0), block_seed=0)
        assert len(out) == 1
        it = out[0]
        assert it.point == Point2D(3.0, 8.0)
        assert it.kind == KIND_T1
        assert it.in_comm and it.in_sensing

    def test_wall_contributes_comm_and_mono_points(self, ula64):
        scene = Scene(type1=(), type2=(WALL_X7,), targets=(),
                      roi=Rect(-7, 7, 5, 25))
        out = enumerate_interactions(scene, ula64, (0.0, 20.0), block_seed=0)
        comm = [it for it in out if it.in_comm]
        mono = [it for it in out if it.in_sensing]
        assert len(comm) == 1 and len(mono) == 1
        assert comm[0].point == pytest.approx((7.0, 10.0))
        assert mono[0].point == pytest.approx((7.0, 0.0))
        assert all(it.kind == KIND_T2 for it in out)

    def test_cluster_membership_and_determinism(self, ula64):
        cluster = SensingTargetCluster(Point2D(-1.5, 5.0), 1.5, 8, 1.0)
        scene = Scene(type1=(), type2=(), targets=(cluster,),
                      roi=Rect(-7, 7, 5, 25))
        out1 = enumerate_interactions(scene, ula64, (0.0, 20.0), block_seed=3)
        out2 = enumerate_interactions(scene, ula64, (0.0, 20.0), block_seed=3)
        other = enumerate_interactions(scene, ula64, (0.0, 20.0), block_seed=4)
        assert out1 == out2
        assert [it.point for it in out1] != [it.point for it in other]
        assert len(out1) == 8
        for it in out1:
            assert it.kind == KIND_ST
            assert math.hypot(it.point.x + 1.5, it.point.y - 5.0) <= 1.5


class TestDrawCoefficients:
    def test_moment_matches_closed_form(self, ula64):
        scene = Scene(type1=(Type1Object(Point2D(3.0, 8.0), 0.7),),
                      type2=(), targets=(), roi=Rect(-7, 7, 5, 25))
        base = enumerate_interactions(scene, ula64, (0.0, 20.0), 0)
        draws = 100_000
        comps = draw_coefficients(base * draws, (0.0, 20.0), ula64,
                                  block_seed=9)
        beta2 = np.mean([abs(c.comm_coefficient) ** 2 for c in comps])
        gamma2 = np.mean([abs(c.roundtrip_coefficient) ** 2 for c in comps])
        d2 = 3.0 ** 2 + 12.0 ** 2
        amp2 = (ula64.wavelength / (4 * np.pi)) ** 2
        assert beta2 == pytest.approx(0.7 * amp2 / d2, rel=0.03)
        assert gamma2 == pytest.approx(0.7, rel=0.03)

    def test_zero_gain_gives_zero_coefficients(self, ula64):
        scene = Scene(type1=(Type1Object(Point2D(3.0, 8.0), 0.0),),
                      type2=(), targets=(), roi=Rect(-7, 7, 5, 25))
        its = enumerate_interactions(scene, ula64, (0.0, 20.0), 0)
        comps = draw_coefficients(its, (0.0, 20.0), ula64, 5)
        assert comps[0].comm_coefficient == 0.0
        assert comps[0].roundtrip_coefficient == 0.0

    def test_deterministic_per_seed(self, ula64, cluster_scene):
        its = enumerate_interactions(cluster_scene, ula64, (0.0, 20.0), 2)
        a = draw_coefficients(its, (0.0, 20.0), ula64, 2)
        b = draw_coefficients(its, (0.0, 20.0), ula64, 2)
        assert a == b

    def test_links_share_one_reflectivity(self, ula64):
        # beta is the common reflectivity times the hop to the user
        scene = Scene(type1=(Type1Object(Point2D(3.0, 8.0), 1.3),),
                      type2=(), targets=(), roi=Rect(-7, 7, 5, 25))
        its = enumerate_interactions(scene, ula64, (0.0, 20.0), 0)
        comp = draw_coefficients(its, (0.0, 20.0), ula64, 11)[0]
        d = math.hypot(3.0, 12.0)
        k = ula64.wavenumber
        amp = ula64.wavelength / (4 * math.pi)
        hop = amp * complex(math.cos(-k * d), math.sin(-k * d)) / d
        assert comp.comm_coefficient == pytest.approx(
            comp.roundtrip_coefficient * hop)

    def test_user_on_interaction_point_rejected(self, ula64):
        scene = Scene(type1=(Type1Object(Point2D(0.0, 20.0), 1.0),),
                      type2=(), targets=(), roi=Rect(-7, 7, 5, 25))
        its = enumerate_interactions(scene, ula64, (0.0, 20.0), 0)
        with pytest.raises(ValueError, match="coincides"):
            draw_coefficients(its, (0.0, 20.0), ula64, 0)


class TestSynthesis:
    def test_empty_superpositions(self, ula16):
        assert np.count_nonzero(synthesize_downlink([], ula16)) == 0
        assert np.count_nonzero(synthesize_sensing([], ula16)) == 0

    def test_unit_coefficient_identities(self, ula16):
        comp = PathComponent(Point2D(2.0, 9.0), 1.0 + 0.0j, 1.0 + 0.0j,
                             KIND_T1)
        h = synthesize_downlink([comp], ula16)
        v = steering_vector(ula16, (2.0, 9.0))
        np.testing.assert_array_equal(h, v)
        H = synthesize_sensing([comp], ula16)
        np.testing.assert_allclose(H, np.outer(v, v), rtol=1e-12)
        assert np.linalg.matrix_rank(H) == 1
        assert np.trace(H) == pytest.approx(np.sum(v * v), rel=1e-12)

    def test_downlink_superposition(self, ula16, rng):
        comps = [PathComponent(Point2D(rng.uniform(-5, 5), rng.uniform(6, 14)),
                               complex(*rng.standard_normal(2)),
                               complex(*rng.standard_normal(2)), KIND_T1)
                 for _ in range(4)]
        total = synthesize_downlink(comps, ula16)
        parts = sum(synthesize_downlink([c], ula16) for c in comps)
        np.testing.assert_allclose(total, parts, rtol=1e-14, atol=1e-18)

    def test_sensing_rank_and_symmetry(self, ula16, rng):
        comps = [PathComponent(Point2D(rng.uniform(-5, 5), rng.uniform(6, 14)),
                               0.0, complex(*rng.standard_normal(2)), KIND_ST)
                 for _ in range(3)]
        H = synthesize_sensing(comps, ula16)
        parts = sum(synthesize_sensing([c], ula16) for c in comps)
        np.testing.assert_allclose(H, parts, rtol=1e-13, atol=1e-18)
        np.testing.assert_allclose(H, H.T, rtol=1e-12)
        assert np.linalg.matrix_rank(H, tol=1e-9 * np.linalg.norm(H, 2)) <= 3


class TestRealize:
    def test_symmetry_and_span(self, ula64, cluster_scene):
        rlz = realize(cluster_scene, ula64, (0.0, 20.0), block_seed=1)
        asym = np.abs(rlz.H - rlz.H.T).max() / np.abs(rlz.H).max()
        assert asym < 1e-12
        pts = [c.interaction_point for c in rlz.components]
        basis = steering_matrix(ula64, pts)
        _, res, _, _ = np.linalg.lstsq(basis, rlz.h, rcond=None)
        resid = math.sqrt(float(res[0])) if res.size else 0.0
        assert resid < 1e-10 * np.linalg.norm(rlz.h)

    def test_deterministic(self, ula64, cluster_scene):
        a = realize(cluster_scene, ula64, (0.0, 20.0), block_seed=7)
        b = realize(cluster_scene, ula64, (0.0, 20.0), block_seed=7)
        np.testing.assert_array_equal(a.h, b.h)
        np.testing.assert_array_equal(a.H, b.H)

    def test_block_rank_bound(self, ula64, cluster_scene):
        rlz = realize(cluster_scene, ula64, (0.0, 20.0), block_seed=2)
        n_pts = len(rlz.components)
        assert np.linalg.matrix_rank(
            rlz.H, tol=1e-9 * np.linalg.norm(rlz.H, 2)) <= n_pts

    def test_scaling_linearity(self, ula64, three_scatterers):
        rlz = realize(three_scatterers, ula64, (0.0, 20.0), block_seed=3)
        scaled = [PathComponent(c.interaction_point, 2.5 * c.comm_coefficient,
                                c.roundtrip_coefficient, c.kind)
                  for c in rlz.components]
        h2 = synthesize_downlink(scaled, ula64)
        np.testing.assert_allclose(h2, 2.5 * rlz.h, rtol=1e-14)


class TestSceneHelpers:
    def test_random_type1_contract(self):
        region = Rect(-7.0, 7.0, 5.0, 15.0)
        objs = random_type1(12, region, 0.9, seed=4)
        assert len(objs) == 12
        assert all(region.contains(o.location) for o in objs)
        assert all(o.mean_interaction_gain == 0.9 for o in objs)
        again = random_type1(12, region, 0.9, seed=4)
        assert objs == again

    def test_gain_sign_validation(self):
        with pytest.raises(ValueError):
            Type1Object(Point2D(0, 10), -1.0)
        with pytest.raises(ValueError):
            Type2Object(Point2D(0, 0), Point2D(1, 0), 1.5)
        with pytest.raises(ValueError):
            SensingTargetCluster(Point2D(0, 10), -0.5, 4, 1.0)

    def test_near_field_check_flags_far_scene(self, ula64):
        far = Scene(type1=(Type1Object(Point2D(0.0, 9000.0), 1.0),),
                    type2=(), targets=(), roi=Rect(-7, 7, 5, 25))
        assert near_field_check(far, ula64)

    def test_near_field_check_clean_scene(self, ula64, three_scatterers):
        assert near_field_check(three_scatterers, ula64) == []
