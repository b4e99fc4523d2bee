import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from havs import (
    PointCloud,
    SampleError,
    SampleSpec,
    bounding_box,
    plan_layers,
)


class TestPlanLayers:
    def test_two_layers_forced_ratio(self):
        # m1 + 4*m1 = m pins the split exactly
        assert plan_layers(1000, 2).counts == (200, 800)

    def test_single_layer_identity(self):
        assert plan_layers(7, 1).counts == (7,)

    def test_three_layer_split_with_remainder(self):
        # floor(100/21) = 4, floor(4*100/21) = 19, remainder goes to the last
        # layer: 100 - 4 - 19 = 77; direct arithmetic oracle below
        plan = plan_layers(100, 3)
        assert plan.counts == (4, 19, 77)
        assert sum(plan.counts) == 100

    def test_rejects_m_less_than_k(self):
        with pytest.raises(SampleError):
            plan_layers(2, 3)

    def test_rejects_nonpositive(self):
        with pytest.raises(SampleError):
            plan_layers(0, 1)
        with pytest.raises(SampleError):
            plan_layers(5, 0)

    @given(m=st.integers(1, 5000), k=st.integers(1, 7))
    @settings(max_examples=300)
    def test_sum_positivity_monotonicity(self, m, k):
        if m < k:
            with pytest.raises(SampleError):
                plan_layers(m, k)
            return
        counts = plan_layers(m, k).counts
        assert len(counts) == k
        assert sum(counts) == m
        assert all(c >= 1 for c in counts)
        assert all(b >= a for a, b in zip(counts, counts[1:]))

    @given(m5=st.integers(1, 2000))
    @settings(max_examples=100)
    def test_divisible_by_five_exact(self, m5):
        m = 5 * m5
        if m < 2:
            return
        assert plan_layers(m, 2).counts == (m // 5, 4 * m // 5)

    def test_growth_ratio_approx_four(self):
        counts = plan_layers(100000, 4).counts
        for a, b in zip(counts, counts[1:]):
            assert b / a == pytest.approx(4.0, rel=0.01)


class TestBoundingBox:
    def test_two_points(self):
        cloud = PointCloud(points=[[0, 0, 0], [1, 2, 3]])
        mins, maxs = bounding_box(cloud)
        assert (mins == [0, 0, 0]).all()
        assert (maxs == [1, 2, 3]).all()

    def test_degenerate_single_point(self):
        mins, maxs = bounding_box(PointCloud(points=[[5.0, 5.0, 5.0]]))
        assert (mins == maxs).all()
        assert (mins == 5.0).all()

    def test_containment_of_uniform_points(self, rng):
        pts = rng.uniform(-1, 1, (100, 3))
        mins, maxs = bounding_box(PointCloud(points=pts))
        assert (mins >= -1).all() and (maxs <= 1).all()

    def test_empty_cloud_rejected(self):
        with pytest.raises(SampleError):
            bounding_box(PointCloud(points=np.empty((0, 3))))


class TestPointCloud:
    def test_rejects_nan(self):
        with pytest.raises(SampleError):
            PointCloud(points=[[0, 0, np.nan]])

    def test_rejects_inf(self):
        with pytest.raises(SampleError):
            PointCloud(points=[[np.inf, 0, 0]])

    def test_rejects_bad_shape(self):
        with pytest.raises(SampleError):
            PointCloud(points=[[0, 0], [1, 1]])

    def test_optional_arrays_must_match_length(self):
        with pytest.raises(SampleError):
            PointCloud(points=[[0, 0, 0]], intensity=[1.0, 2.0])
        with pytest.raises(SampleError):
            PointCloud(points=[[0, 0, 0]], instance_label=[1, 2])

    def test_points_are_read_only(self):
        cloud = PointCloud(points=[[0, 0, 0]])
        with pytest.raises(ValueError):
            cloud.points[0, 0] = 1.0

    def test_len(self, small_cloud):
        assert len(small_cloud) == small_cloud.n == 200


class TestSampleSpec:
    def test_defaults(self):
        spec = SampleSpec(m=10)
        assert spec.method == "havs"
        assert spec.sigma == 0.05
        assert spec.t_max == 20
        assert spec.layers == 2

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(method="nope"),
            dict(representative="nope"),
            dict(m=0),
            dict(layers=0),
            dict(sigma=0.0),
            dict(t_max=0),
            dict(aspect=(1.0, -1.0, 1.0)),
            dict(fixed_voxel=(0.0, 1.0, 1.0)),
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        base = dict(m=10)
        base.update(kwargs)
        with pytest.raises(SampleError):
            SampleSpec(**base)


class TestSampleOutputRoundTrip:
    def test_indices_gather_points_bit_exactly(self, rng):
        from havs import sample

        cloud = PointCloud(points=rng.uniform(-5, 5, (300, 3)))
        for method in ("fps", "rps", "havs"):
            out = sample(cloud, SampleSpec(m=60, method=method, seed=3))
            assert len(out.indices) == 60
            assert len(np.unique(out.indices)) == 60
            assert (out.indices >= 0).all() and (out.indices < 300).all()
            gathered = cloud.points[out.indices]
            assert (gathered == out.points).all()
