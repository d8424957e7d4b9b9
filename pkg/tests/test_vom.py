"""Virtual object map: collection, clustering, ranking metrics, persistence."""

import numpy as np
import pytest

from nfisac.geometry import Point2D, steering_norms_sq
from nfisac.scene import (Rect, Scene, SensingTargetCluster, Type1Object,
                          Type2Object, specular_point)
from nfisac.vom import (Vom, VomCommEntry, VomSensEntry,
                        VirtualObjectLibrary, build_vom, cluster_points,
                        collect_virtual_points, comm_metric, load_vom, lookup,
                        save_vom, sens_metric)


class TestCollect:
    def test_point_objects_are_location_invariant(self, ula64,
                                                  three_scatterers):
        pts = collect_virtual_points(three_scatterers, ula64, [(0.0, 20.0)])
        assert sorted(pts) == sorted(o.location
                                     for o in three_scatterers.type1)
        # two samples collect each location twice; clustering dedups later
        pts2 = collect_virtual_points(three_scatterers, ula64,
                                      [(0.0, 20.0), (1.0, 20.0)])
        assert len(pts2) == 6

    def test_wall_gives_distinct_specular_points(self, ula64):
        wall = Type2Object(Point2D(7.0, 0.0), Point2D(7.0, 20.0), 0.8)
        scene = Scene(type1=(), type2=(wall,), targets=(),
                      roi=Rect(-7, 7, 5, 25))
        samples = [(0.0, 20.0), (-3.0, 12.0)]
        pts = collect_virtual_points(scene, ula64, samples)
        expected = {specular_point(wall, (0.0, 0.0), s) for s in samples}
        expected.add(specular_point(wall, (0.0, 0.0), (0.0, 0.0)))
        assert expected <= set(pts)
        assert len({p for p in pts}) == 3

    def test_dynamic_points_excluded(self, ula64, cluster_scene):
        pts = collect_virtual_points(cluster_scene, ula64, [(0.0, 20.0)])
        assert pts == [cluster_scene.type1[0].location]

    def test_empty_samples_rejected(self, ula64, three_scatterers):
        with pytest.raises(ValueError):
            collect_virtual_points(three_scatterers, ula64, [])


class TestCluster:
    def test_isolated_points_stay_apart(self):
        pts = [(0.0, 0.0), (5.0, 0.0), (0.0, 5.0)]
        lib = cluster_points(pts, 0.5)
        assert [tuple(p) for p in lib.locations] == pts

    def test_single_cluster_collapse(self):
        pts = [(0.0, 0.0), (0.1, 0.0), (0.0, 0.2), (-0.1, -0.1)]
        lib = cluster_points(pts, 0.5)
        assert len(lib) == 1
        assert lib.locations[0] == pytest.approx((0.0, 0.025))

    def test_two_blobs_match_partition_oracle(self, rng):
        blob_a = rng.normal([0.0, 0.0], 0.05, size=(5, 2))
        blob_b = rng.normal([10.0, 10.0], 0.05, size=(5, 2))
        pts = np.concatenate([blob_a, blob_b])
        lib = cluster_points(pts, 0.5)
        assert len(lib) == 2
        np.testing.assert_allclose(lib.as_array(),
                                   [blob_a.mean(axis=0), blob_b.mean(axis=0)],
                                   rtol=1e-12)

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            cluster_points([(0.0, 0.0)], 0.0)


class TestMetrics:
    def test_comm_closed_form(self, ula64, three_scatterers):
        s = Point2D(3.0, 8.0)
        u = Point2D(0.0, 20.0)
        m = comm_metric(s, u, three_scatterers, ula64)
        amp2 = (ula64.wavelength / (4 * np.pi)) ** 2
        norm2 = float(steering_norms_sq(ula64, [s])[0])
        d2 = 3.0 ** 2 + 12.0 ** 2
        assert m == pytest.approx(amp2 / d2 * norm2, rel=1e-12)

    def test_comm_monte_carlo_close_to_analytic(self, ula64,
                                                three_scatterers):
        s, u = Point2D(3.0, 8.0), Point2D(0.0, 20.0)
        analytic = comm_metric(s, u, three_scatterers, ula64)
        sampled = comm_metric(s, u, three_scatterers, ula64,
                              mc_trials=100_000, seed=5)
        assert sampled == pytest.approx(analytic, rel=0.03)

    def test_sens_closed_form_and_monte_carlo(self, ula64, three_scatterers):
        s = Point2D(-4.0, 10.0)
        norm2 = float(steering_norms_sq(ula64, [s])[0])
        analytic = sens_metric(s, three_scatterers, ula64)
        assert analytic == pytest.approx(norm2 ** 2, rel=1e-12)
        sampled = sens_metric(s, three_scatterers, ula64, mc_trials=100_000,
                              seed=6)
        assert sampled == pytest.approx(analytic, rel=0.03)

    def test_zero_gain_zero_metric(self, ula64):
        scene = Scene(type1=(Type1Object(Point2D(3.0, 8.0), 0.0),),
                      type2=(), targets=(), roi=Rect(-7, 7, 5, 25))
        assert comm_metric((3.0, 8.0), (0.0, 20.0), scene, ula64) == 0.0
        assert sens_metric((3.0, 8.0), scene, ula64) == 0.0

    def test_proximity_to_array_wins(self, ula64):
        # equal gains, equidistant from the user: closer to the array means
        # a larger steering norm, hence strictly larger metrics
        u = Point2D(0.0, 20.0)
        near = Point2D(0.0, 8.0)
        far = Point2D(0.0, 32.0)
        scene = Scene(type1=(Type1Object(near, 1.0), Type1Object(far, 1.0)),
                      type2=(), targets=(), roi=Rect(-7, 7, 5, 35))
        assert comm_metric(near, u, scene, ula64) > comm_metric(far, u, scene,
                                                                ula64)
        assert sens_metric(near, scene, ula64) > sens_metric(far, scene,
                                                             ula64)

    def test_coincident_user_rejected(self, ula64, three_scatterers):
        with pytest.raises(ValueError):
            comm_metric((3.0, 8.0), (3.0, 8.0), three_scatterers, ula64)


class TestBuildVom:
    def test_entry_sizes(self, ula64, three_scatterers):
        vom = build_vom(three_scatterers, ula64, J=2, K=3)
        assert len(vom.library) == 3
        assert all(len(e.indices) == 2 for e in vom.comm_entries)
        assert len(vom.sens_entry.indices) == 3

    def test_single_object_trivial_entry(self, ula64):
        scene = Scene(type1=(Type1Object(Point2D(3.0, 8.0), 1.0),),
                      type2=(), targets=(), roi=Rect(-3, 3, 5, 9))
        vom = build_vom(scene, ula64, J=1, K=1)
        assert all(e.indices == (0,) for e in vom.comm_entries)
        assert vom.sens_entry.indices == (0,)

    def test_top2_matches_sort_oracle(self, ula64, three_scatterers):
        vom = build_vom(three_scatterers, ula64, J=2, K=3)
        for entry in vom.comm_entries:
            u = entry.grid_location
            metrics = []
            for idx, s in enumerate(vom.library.locations):
                if s == u:
                    metrics.append(-np.inf)
                else:
                    metrics.append(comm_metric(s, u, three_scatterers, ula64))
            oracle = tuple(sorted(range(3), key=lambda i: (-metrics[i], i))[:2])
            assert entry.indices == oracle

    def test_sens_ranking_descending(self, ula64, three_scatterers):
        vom = build_vom(three_scatterers, ula64, J=2, K=3)
        rho = [sens_metric(vom.library.locations[i], three_scatterers, ula64)
               for i in vom.sens_entry.indices]
        assert all(a >= b for a, b in zip(rho, rho[1:]))

    def test_clamps_with_warning(self, ula64, three_scatterers):
        with pytest.warns(UserWarning, match="clamping"):
            vom = build_vom(three_scatterers, ula64, J=5, K=20)
        assert all(len(e.indices) == 3 for e in vom.comm_entries)
        assert len(vom.sens_entry.indices) == 3

    def test_tie_break_ascending_index(self, ula64):
        # mirror-symmetric pair: equal metrics on the x=0 axis, index 0 first
        scene = Scene(type1=(Type1Object(Point2D(4.0, 9.0), 1.0),
                             Type1Object(Point2D(-4.0, 9.0), 1.0)),
                      type2=(), targets=(), roi=Rect(-1, 1, 18, 22))
        vom = build_vom(scene, ula64, J=2, K=2)
        axis = [e for e in vom.comm_entries if e.grid_location.x == 0.0]
        assert axis and all(e.indices == (0, 1) for e in axis)
        assert vom.sens_entry.indices == (0, 1)

    def test_gain_scaling_leaves_rankings(self, ula64, rng):
        objs = tuple(Type1Object(Point2D(x, y), g) for x, y, g in
                     zip(rng.uniform(-6, 6, 5), rng.uniform(6, 14, 5),
                         rng.uniform(0.2, 2.0, 5)))
        roi = Rect(-4, 4, 16, 24)
        base = Scene(type1=objs, type2=(), targets=(), roi=roi)
        scaled = Scene(type1=tuple(Type1Object(o.location,
                                               7.0 * o.mean_interaction_gain)
                                   for o in objs),
                       type2=(), targets=(), roi=roi)
        v1 = build_vom(base, ula64, J=3, K=5)
        v2 = build_vom(scaled, ula64, J=3, K=5)
        assert [e.indices for e in v1.comm_entries] == \
               [e.indices for e in v2.comm_entries]
        assert v1.sens_entry.indices == v2.sens_entry.indices

    def test_index_validation(self):
        lib = VirtualObjectLibrary((Point2D(0.0, 5.0),))
        good = VomCommEntry(Point2D(0.0, 20.0), (0,))
        with pytest.raises(ValueError):
            Vom(library=lib, comm_entries=(good,),
                sens_entry=VomSensEntry((1,)), grid_spacing=1.0,
                roi=Rect(-1, 1, 19, 21), build_metadata={})


class TestLookup:
    @pytest.fixture()
    def built(self, ula64, three_scatterers):
        return build_vom(three_scatterers, ula64, J=2, K=3)

    def test_on_grid_point_verbatim(self, built):
        entry = built.comm_entries[10]
        got = lookup(built, entry.grid_location)
        assert got == [built.library.locations[i] for i in entry.indices]

    def test_nearest_neighbor_contract(self, built):
        g = built.comm_entries[0].grid_location
        near_left = Point2D(g.x + 0.2, g.y + 0.1)
        assert lookup(built, near_left) == lookup(built, g)

    def test_matches_linear_scan_oracle(self, built, rng):
        grid = built.grid_array()
        for _ in range(25):
            u = rng.uniform([-7.0, 5.0], [7.0, 25.0])
            d2 = (grid[:, 0] - u[0]) ** 2 + (grid[:, 1] - u[1]) ** 2
            want = built.comm_entries[int(np.argmin(d2))].indices
            got = lookup(built, u)
            assert got == [built.library.locations[i] for i in want]

    def test_outside_roi_rejected(self, built):
        with pytest.raises(ValueError, match="outside"):
            lookup(built, (0.0, 40.0))


class TestSerialization:
    def test_round_trip_identity(self, tmp_path, ula64, three_scatterers):
        vom = build_vom(three_scatterers, ula64, J=2, K=3)
        path = tmp_path / "map.vom"
        save_vom(vom, path)
        back = load_vom(path)
        assert back.library.locations == vom.library.locations
        assert back.comm_entries == vom.comm_entries
        assert back.sens_entry == vom.sens_entry
        assert back.grid_spacing == vom.grid_spacing
        assert back.roi == vom.roi
        assert back.build_metadata == vom.build_metadata

    def test_rewrite_is_byte_identical(self, tmp_path, ula64,
                                       three_scatterers):
        vom = build_vom(three_scatterers, ula64, J=2, K=3)
        p1, p2 = tmp_path / "a.vom", tmp_path / "b.vom"
        save_vom(vom, p1)
        save_vom(load_vom(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_format_rejected(self, tmp_path):
        p = tmp_path / "junk.vom"
        p.write_text("not a map\n")
        with pytest.raises(ValueError):
            load_vom(p)
