import math

import numpy as np
import pytest

from conftest import lidar_scene, random_cloud
from havs import (
    PointCloud,
    SampleError,
    SampleSpec,
    avs,
    count_nonempty,
    havs,
    havs_layer,
    rvs,
    sample,
    voxel_coords,
)
from oracles import voxel_winners_reference


class TestAvs:
    def test_defaults_are_sigma_005_tmax_20(self):
        import havs.samplers as samplers

        assert samplers.DEFAULT_SIGMA == 0.05
        assert samplers.DEFAULT_T_MAX == 20

    def test_well_separated_points_saturate(self):
        # m points pairwise far apart: any fine-enough voxel isolates each
        gen = np.random.default_rng(1)
        pts = gen.uniform(0, 1, (32, 3)) + 10.0 * np.indices((32, 1, 1))[0].reshape(32, 1)
        cloud = PointCloud(points=pts)
        res = avs(cloud, 32)
        assert res.converged
        assert res.count == 32

    def test_contract_on_uniform_cloud(self):
        gen = np.random.default_rng(7)
        pts = gen.uniform(0, 10, (4096, 3))
        res = avs(PointCloud(points=pts), 512)
        assert res.converged
        assert 512 <= res.count <= 538  # 538 = ceil(1.05 * 512)
        assert res.iterations <= 20
        # self-consistency: recounting at the returned voxel reproduces count
        assert count_nonempty(pts, res.voxel) == res.count

    def test_aspect_scales_voxel(self):
        gen = np.random.default_rng(8)
        pts = gen.uniform(0, 10, (2000, 3))
        res = avs(PointCloud(points=pts), 300, aspect=(1.0, 1.0, 2.0))
        assert res.voxel[2] == pytest.approx(2.0 * res.voxel[0])
        assert res.converged

    def test_m_exceeding_distinct_points_rejected(self):
        base = np.random.default_rng(3).uniform(0, 5, (10, 3))
        dup = np.repeat(base, 5, axis=0)
        with pytest.raises(SampleError, match="distinct"):
            avs(PointCloud(points=dup), 20)

    def test_unreachable_window_reports_non_convergence(self):
        # four points straddling both axes: every voxel size yields 4 cells,
        # but m=1 needs count in [1, 2]
        pts = np.array([
            [-5.0, -5.0, 0.1],
            [-5.0, 5.0, 0.1],
            [5.0, -5.0, 0.1],
            [5.0, 5.0, 0.1],
        ])
        res = avs(PointCloud(points=pts), 1)
        assert not res.converged
        assert res.iterations == 20
        assert res.count >= 1

    def test_parameter_validation(self, small_cloud):
        with pytest.raises(SampleError):
            avs(small_cloud, 0)
        with pytest.raises(SampleError):
            avs(small_cloud, 5, sigma=0.0)
        with pytest.raises(SampleError):
            avs(small_cloud, 5, t_max=0)
        with pytest.raises(SampleError):
            avs(small_cloud, 5, aspect=(1, 0, 1))

    @pytest.mark.parametrize("seed", range(6))
    def test_converges_across_extents(self, seed):
        extent = 5.0 * (seed + 1)
        scene = lidar_scene(seed, n_background=3000,
                            extent=(extent, extent, max(2.0, extent / 12)))
        m = len(scene) // 4
        res = avs(scene, m)
        assert res.iterations <= 20
        if res.converged:
            assert m <= res.count <= math.ceil(1.05 * m)


class TestHavsLayer:
    def test_no_adjustment_when_counts_match(self):
        # one point per cell of a 3x3x3 grid: count == m, no truncation
        ax = np.arange(3) + 0.3
        pts = np.stack(np.meshgrid(ax, ax, ax), axis=-1).reshape(-1, 3)
        cloud = PointCloud(points=pts)
        spec = SampleSpec(m=27, layers=1, fixed_voxel=(1.0, 1.0, 1.0))
        out = havs_layer(cloud, np.ones(27, bool), 27, spec)
        assert out.avs_log[0].adjustment == "none"
        assert sorted(out.indices.tolist()) == list(range(27))

    def test_truncation_drops_largest_center_distance(self):
        # 50-point instance; oracle: sort winners by (distance, lex), keep m
        gen = np.random.default_rng(50)
        pts = gen.uniform(0, 5, (50, 3))
        cloud = PointCloud(points=pts)
        voxel = (1.0, 1.0, 1.0)
        winners = voxel_winners_reference(pts, voxel)
        k = len(winners)
        m_l = k - 3
        spec = SampleSpec(m=m_l, layers=1, fixed_voxel=voxel)
        out = havs_layer(cloud, np.ones(50, bool), m_l, spec)
        assert out.avs_log[0].adjustment == "truncated"
        ranked = sorted(
            winners.values(), key=lambda e: (e[1], tuple(pts[e[0]]))
        )
        expect = {i for i, _ in ranked[:m_l]}
        assert set(out.indices.tolist()) == expect

    def test_winners_match_group_by_oracle(self):
        gen = np.random.default_rng(200)
        pts = gen.uniform(-4, 4, (200, 3))
        cloud = PointCloud(points=pts)
        voxel = (0.9, 0.9, 0.9)
        winners = voxel_winners_reference(pts, voxel)
        k = len(winners)
        spec = SampleSpec(m=k, layers=1, fixed_voxel=voxel)
        out = havs_layer(cloud, np.ones(200, bool), k, spec)
        assert set(out.indices.tolist()) == {i for i, _ in winners.values()}

    def test_padding_fills_from_unselected(self, small_cloud):
        spec = SampleSpec(m=60, layers=1, fixed_voxel=(50.0, 50.0, 50.0), seed=3)
        out = havs_layer(small_cloud, np.ones(len(small_cloud), bool), 60, spec)
        assert out.avs_log[0].adjustment == "padded"
        assert len(out) == 60
        assert len(np.unique(out.indices)) == 60

    def test_respects_active_mask(self, small_cloud):
        mask = np.zeros(len(small_cloud), bool)
        mask[:50] = True
        spec = SampleSpec(m=10, layers=1)
        out = havs_layer(small_cloud, mask, 10, spec)
        assert (out.indices < 50).all()

    def test_mask_too_small_rejected(self, small_cloud):
        mask = np.zeros(len(small_cloud), bool)
        mask[:5] = True
        with pytest.raises(SampleError):
            havs_layer(small_cloud, mask, 10, SampleSpec(m=10, layers=1))


class TestHavs:
    def test_single_layer_equals_havs_layer(self, small_cloud):
        spec = SampleSpec(m=40, layers=1, seed=2)
        a = havs(small_cloud, spec)
        b = havs_layer(small_cloud, np.ones(len(small_cloud), bool), 40, spec)
        assert (a.indices == b.indices).all()
        assert (a.points == b.points).all()

    def test_layer_counts_and_provenance(self):
        cloud = random_cloud(21, 4000)
        out = havs(cloud, SampleSpec(m=1000, layers=2))
        assert len(out) == 1000
        assert (out.layer_of[:200] == 1).all()
        assert (out.layer_of[200:] == 2).all()
        assert len(out.avs_log) == 2

    def test_indices_unique_and_layers_disjoint(self):
        cloud = random_cloud(22, 3000)
        out = havs(cloud, SampleSpec(m=900, layers=3))
        assert len(np.unique(out.indices)) == 900
        for layer in (1, 2, 3):
            sel = set(out.indices[out.layer_of == layer].tolist())
            for other in range(layer + 1, 4):
                assert sel.isdisjoint(out.indices[out.layer_of == other].tolist())

    def test_one_winner_per_voxel_within_layer(self):
        cloud = random_cloud(23, 2500)
        out = havs(cloud, SampleSpec(m=600, layers=2))
        for log in out.avs_log:
            if log.adjustment == "padded":
                continue
            sel = out.indices[out.layer_of == log.layer]
            g = voxel_coords(cloud.points[sel], log.voxel)
            assert len(np.unique(g, axis=0)) == len(sel)

    def test_determinism_repeat_runs(self):
        cloud = random_cloud(24, 2000)
        spec = SampleSpec(m=500, layers=2, seed=5)
        a = havs(cloud, spec)
        for _ in range(3):
            b = havs(cloud, spec)
            assert (a.indices == b.indices).all()
            assert (a.points == b.points).all()

    def test_determinism_across_threads(self):
        cloud = random_cloud(25, 4000)
        spec = SampleSpec(m=1000, layers=2, seed=5)
        a = havs(cloud, spec, threads=1)
        for threads in (2, 4):
            b = havs(cloud, spec, threads=threads)
            assert (a.indices == b.indices).all()

    def test_permutation_invariance_of_coordinate_set(self):
        cloud = random_cloud(26, 1500)
        spec = SampleSpec(m=400, layers=2, seed=9)
        base = havs(cloud, spec)
        base_set = set(map(tuple, base.points.tolist()))
        gen = np.random.default_rng(0)
        for _ in range(3):
            perm = gen.permutation(len(cloud))
            shuffled = PointCloud(points=cloud.points[perm])
            out = havs(shuffled, spec)
            assert set(map(tuple, out.points.tolist())) == base_set

    def test_scene_output_stable_across_runs_and_shuffles(self):
        scene = lidar_scene(64, n_background=2**12)
        spec = SampleSpec(m=len(scene) // 4, layers=2, seed=7)
        base = havs(scene, spec)
        for _ in range(3):
            assert (havs(scene, spec).indices == base.indices).all()
        gen = np.random.default_rng(1)
        shuffled = PointCloud(points=scene.points[gen.permutation(len(scene))])
        out = havs(shuffled, spec)
        assert (set(map(tuple, out.points.tolist()))
                == set(map(tuple, base.points.tolist())))

    def test_fixed_voxel_bypasses_avs(self):
        # 100-point instance: fixed-voxel havs (k=1) equals center-closest rvs
        cloud = random_cloud(27, 100)
        voxel = (2.0, 2.0, 2.0)
        k = count_nonempty(cloud.points, voxel)
        spec = SampleSpec(m=k, layers=1, fixed_voxel=voxel,
                          representative="center_closest", seed=1)
        a = sample(cloud, spec)
        b = rvs(cloud, k, voxel, representative="center_closest", seed=1)
        assert (a.indices == b.indices).all()
        assert a.avs_log[0].iterations == 0

    def test_m_exceeding_distinct_rejected(self):
        base = np.random.default_rng(3).uniform(0, 5, (20, 3))
        dup = np.repeat(base, 3, axis=0)
        with pytest.raises(SampleError, match="distinct"):
            havs(PointCloud(points=dup), SampleSpec(m=30, layers=1))

    def test_synthesized_strategies_emit_no_indices(self):
        cloud = random_cloud(28, 800)
        for strategy in ("average", "center"):
            out = havs(cloud, SampleSpec(m=200, layers=2, representative=strategy,
                                         seed=4))
            assert len(out.indices) == 0
            assert len(out.points) == 200
            assert len(out.layer_of) == 200

    def test_real_strategies_emit_valid_indices(self):
        cloud = random_cloud(29, 800)
        for strategy in ("random", "center_closest"):
            out = havs(cloud, SampleSpec(m=200, layers=2, representative=strategy,
                                         seed=4))
            assert len(np.unique(out.indices)) == 200
            assert (cloud.points[out.indices] == out.points).all()

    def test_ablation_grid_runs(self):
        cloud = random_cloud(30, 600)
        for strategy in ("average", "center", "random", "center_closest"):
            for layers in (1, 2, 3):
                for fixed in (None, (1.5, 1.5, 1.5)):
                    spec = SampleSpec(m=150, layers=layers, representative=strategy,
                                      fixed_voxel=fixed, seed=6)
                    out = havs(cloud, spec)
                    assert len(out) == 150
                    assert len(out.avs_log) == layers

    def test_synthesized_points_near_bbox(self):
        cloud = random_cloud(31, 500)
        out = havs(cloud, SampleSpec(m=100, layers=2, representative="center"))
        margin = max(log.voxel[0] for log in out.avs_log)
        lo = cloud.points.min(axis=0) - margin
        hi = cloud.points.max(axis=0) + margin
        assert (out.points >= lo).all() and (out.points <= hi).all()
