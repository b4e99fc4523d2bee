import json

import numpy as np
import pytest

from conftest import lidar_scene
from havs import (
    FormatError,
    SampleSpec,
    SceneConfig,
    generate_scene,
    read_bin,
    read_xyz,
    sample,
    write_bin,
    write_output,
    write_xyz,
)


class TestReadXyz:
    def test_basic(self, tmp_path):
        path = tmp_path / "a.xyz"
        path.write_text("0 0 0\n1 2 3\n")
        cloud = read_xyz(path)
        assert len(cloud) == 2
        assert cloud.points.tolist() == [[0, 0, 0], [1, 2, 3]]
        assert cloud.intensity is None

    def test_comment_and_intensity(self, tmp_path):
        path = tmp_path / "a.xyz"
        path.write_text("# comment\n1 1 1 0.5\n")
        cloud = read_xyz(path)
        assert len(cloud) == 1
        assert cloud.intensity.tolist() == [0.5]

    def test_nan_rejected_with_line(self, tmp_path):
        path = tmp_path / "a.xyz"
        path.write_text("0 0 0\n1 nan 1\n")
        with pytest.raises(FormatError, match=r":2:.*column 2"):
            read_xyz(path)

    def test_garbage_token_named(self, tmp_path):
        path = tmp_path / "a.xyz"
        path.write_text("0 0 zebra\n")
        with pytest.raises(FormatError, match=r":1:.*column 3"):
            read_xyz(path)

    def test_mixed_arity(self, tmp_path):
        path = tmp_path / "a.xyz"
        path.write_text("0 0 0\n1 1 1 0.5\n")
        with pytest.raises(FormatError, match="mixed arity"):
            read_xyz(path)

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "a.xyz"
        path.write_text("0 0\n")
        with pytest.raises(FormatError, match="expected 3 or 4"):
            read_xyz(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "a.xyz"
        path.write_text("# nothing\n")
        with pytest.raises(FormatError, match="no data"):
            read_xyz(path)

    def test_round_trip_six_significant_digits(self, tmp_path, rng):
        pts = rng.uniform(-100, 100, (200, 3))
        path = tmp_path / "rt.xyz"
        write_xyz(pts, path)
        back = read_xyz(path)
        assert np.allclose(back.points, pts, rtol=1e-5, atol=1e-9)


class TestReadBin:
    def test_two_zero_quadruples(self, tmp_path):
        path = tmp_path / "a.bin"
        path.write_bytes(b"\x00" * 32)
        cloud = read_bin(path)
        assert len(cloud) == 2
        assert (cloud.points == 0).all()
        assert (cloud.intensity == 0).all()

    def test_size_not_multiple_of_16(self, tmp_path):
        path = tmp_path / "a.bin"
        path.write_bytes(b"\x00" * 17)
        with pytest.raises(FormatError, match="multiple of 16"):
            read_bin(path)

    def test_non_finite_rejected(self, tmp_path):
        quads = np.zeros((2, 4), dtype="<f4")
        quads[1, 0] = np.inf
        path = tmp_path / "a.bin"
        quads.tofile(path)
        with pytest.raises(FormatError, match="record 1"):
            read_bin(path)

    def test_round_trip_bit_exact(self, tmp_path, rng):
        pts = rng.uniform(-50, 50, (300, 3)).astype(np.float32).astype(np.float64)
        inten = rng.random(300).astype(np.float32).astype(np.float64)
        path = tmp_path / "rt.bin"
        write_bin(pts, path, intensity=inten)
        back = read_bin(path)
        assert (back.points == pts).all()
        assert (back.intensity == inten).all()
        # second trip: byte-identical files
        path2 = tmp_path / "rt2.bin"
        write_bin(back.points, path2, intensity=back.intensity)
        assert path.read_bytes() == path2.read_bytes()


class TestWriteOutput:
    def test_xyz_round_trip(self, tmp_path):
        scene = lidar_scene(0, n_background=500)
        out = sample(scene, SampleSpec(m=100, method="rps", seed=1))
        path = tmp_path / "o.xyz"
        write_output(out, "xyz", path)
        back = read_xyz(path)
        assert np.allclose(back.points, out.points, rtol=1e-5, atol=1e-9)

    def test_bin_round_trip(self, tmp_path):
        scene = lidar_scene(0, n_background=500)
        out = sample(scene, SampleSpec(m=100, method="rps", seed=1))
        path = tmp_path / "o.bin"
        write_output(out, "bin", path)
        back = read_bin(path)
        assert (back.points == out.points.astype(np.float32).astype(np.float64)).all()

    def test_json_structure(self, tmp_path):
        scene = lidar_scene(0, n_background=2000)
        out = sample(scene, SampleSpec(m=500, method="havs", layers=2, seed=1))
        path = tmp_path / "o.json"
        write_output(out, "json", path)
        data = json.loads(path.read_text())
        assert data["method"] == "havs"
        assert data["m"] == 500
        assert len(data["points"]) == 500
        assert len(data["indices"]) == 500
        assert len(data["layer_of"]) == 500
        assert len(data["avs_log"]) == 2
        assert data["timing_ms"] > 0
        log = data["avs_log"][0]
        assert set(log) == {"layer", "voxel", "count", "iterations",
                            "converged", "adjustment"}

    def test_unknown_format(self, tmp_path):
        scene = lidar_scene(0, n_background=100)
        out = sample(scene, SampleSpec(m=10, method="rps"))
        with pytest.raises(ValueError):
            write_output(out, "ply", tmp_path / "o.ply")


class TestGenerateScene:
    def test_deterministic(self):
        cfg = SceneConfig(seed=4)
        a = generate_scene(cfg)
        b = generate_scene(cfg)
        assert (a.points == b.points).all()
        assert (a.instance_label == b.instance_label).all()

    def test_single_instance_all_labeled(self):
        cfg = SceneConfig(seed=1, n_background=0, n_instances=1)
        scene = generate_scene(cfg)
        assert (scene.instance_label == 0).all()
        assert len(scene) >= 4

    def test_labels_partition(self):
        scene = generate_scene(SceneConfig(seed=2))
        labels = scene.instance_label
        assert labels is not None
        assert len(labels) == len(scene)
        assert labels.min() >= -1
        assert labels.max() == 9  # 10 instances

    def test_instance_counts_decay_with_distance(self):
        scene = generate_scene(SceneConfig(seed=3, n_background=0, n_instances=8))
        labels = scene.instance_label
        radii, counts = [], []
        for i in range(8):
            pts = scene.points[labels == i]
            radii.append(np.linalg.norm(pts.mean(axis=0)[:2]))
            counts.append(len(pts))
        order = np.argsort(radii)
        ordered = np.asarray(counts)[order]
        assert ordered[0] > ordered[-1]

    def test_background_count_exact(self):
        scene = generate_scene(SceneConfig(seed=5, n_background=1234, n_instances=0))
        assert len(scene) == 1234
        assert (scene.instance_label == -1).all()

    def test_radial_falloff_slope(self):
        # alpha = 2: shell counts fall like r^-2; regression over 20 seeds
        shells = np.arange(2.0, 24.0)
        totals = np.zeros(len(shells) - 1)
        for seed in range(20):
            cfg = SceneConfig(seed=seed, extent=(50.0, 50.0, 4.0),
                              n_background=8000, n_instances=0,
                              density_falloff=2.0)
            scene = generate_scene(cfg)
            r = np.linalg.norm(scene.points[:, :2], axis=1)
            hist, _ = np.histogram(r, bins=shells)
            totals += hist
        centers = 0.5 * (shells[:-1] + shells[1:])
        slope = np.polyfit(np.log(centers), np.log(totals / 20), 1)[0]
        assert slope == pytest.approx(-2.0, abs=0.3)

    def test_ground_plane_flag(self):
        flat = generate_scene(SceneConfig(seed=6, ground_plane=True, n_instances=0))
        tall = generate_scene(SceneConfig(seed=6, ground_plane=False, n_instances=0))
        assert np.median(flat.points[:, 2]) < np.median(tall.points[:, 2])

    def test_validation(self):
        with pytest.raises(ValueError):
            SceneConfig(n_background=-1)
        with pytest.raises(ValueError):
            SceneConfig(extent=(0.0, 1.0, 1.0))
        with pytest.raises(ValueError):
            SceneConfig(density_falloff=-1.0)
        with pytest.raises(ValueError):
            SceneConfig(instance_size_range=(2.0, 1.0))
