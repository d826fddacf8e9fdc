"""Smoke test for the python bindings: exercises every exposed operation
once on tiny inputs. Invoked with the directory holding the built module."""

import json
import math
import os
import sys
import tempfile

sys.path.insert(0, sys.argv[1])

import numpy as np

import _core as m


def tiny_config():
    cfg = m.NetworkConfig()
    cfg.d = 8
    cfg.k = 4
    cfg.encoder_widths = [8, 16]
    cfg.encoder_post_width = 16
    cfg.f_hidden = [16, 16]
    cfg.g_layers = 3
    cfg.g_width = 16
    return cfg


def main():
    rng = np.random.default_rng(0)
    params = m.init_parameters(tiny_config(), 1)
    assert params.seed == 1
    assert "f.0.W" in params.array_names()
    assert params.array("f.0.W").shape == (3 + 8, 16)

    pts = rng.uniform(-0.5, 0.5, size=(50, 3))
    z = m.encode(pts, params)
    assert z.shape == (8,)
    pev = m.part_embedding(pts, z, params)
    assert pev.shape == (50, 4)
    assert 0.0 < pev.min() and pev.max() < 1.0

    value, branch = m.occupancy(pts[0], z, params)
    assert math.isclose(value, pev[0].max(), rel_tol=1e-12)
    assert branch == int(np.argmax(pev[0])) + 1

    rec = m.inverse_map(pev, z, params)
    assert rec.shape == (50, 3)
    assert np.abs(rec).max() < 1.0

    grad = m.spatial_gradient(pts[0], z, params)
    assert grad.shape == (3,)

    # Correspondence and confidence.
    b = rng.uniform(-0.5, 0.5, size=(40, 3))
    results = m.correspond_dense(pts, b, params, 0.2)
    assert len(results) == 50
    r = results[0]
    assert 0.0 <= r.confidence <= 1.0
    assert r.exists == (r.confidence >= 0.2)
    c = m.confidence(np.zeros(12), np.concatenate([np.ones(3), np.zeros(9)]))
    assert math.isclose(c, 0.5, rel_tol=1e-12)

    labels = m.segment(pts, params)
    assert set(labels) <= {1, 2, 3, 4}

    ra, rb = m.cross_reconstruct(pts, b, params)
    assert ra.shape == (40, 3) and rb.shape == (50, 3)

    frames = m.interpolate_offsets(pts, rb, 4)
    assert len(frames) == 5
    assert np.abs(frames[0] - pts).max() == 0.0

    verts, faces, empty = m.reconstruct_surface(z, params, 8)
    assert isinstance(empty, bool)

    # Checkpoint round trip.
    with tempfile.TemporaryDirectory() as tmp:
        ckpt = os.path.join(tmp, "ckpt")
        m.save_checkpoint(params, ckpt)
        back = m.load_checkpoint(ckpt)
        assert np.abs(back.array("f.0.W") - params.array("f.0.W")).max() == 0.0

    # Metrics.
    curve = m.accuracy_curve(pts, pts + np.array([0.07, 0.0, 0.0]), [0.05, 0.1])
    assert curve.fractions == [0.0, 1.0]
    assert math.isclose(curve.auc, 0.025, rel_tol=1e-12)
    assert len(m.default_accuracy_thresholds()) == 26

    miou = m.modified_iou([[1, 1, 2, 2]], [[5, 5, 6, 6]], [[5], [6]])
    assert math.isclose(miou, 100.0, rel_tol=1e-12)

    roc = m.nonexistence_roc([0.1, 0.2, 0.8, 0.9], [False, False, True, True])
    assert math.isclose(roc.auc, 1.0, rel_tol=1e-12)

    mean, std = m.onehot_cosine_stats(np.eye(4))
    assert math.isclose(mean, 1.0, rel_tol=1e-12) and std == 0.0

    assert m.chamfer_distance(pts, pts) == 0.0
    assert m.emd_distance(pts, pts, 0, 512) < 1e-12

    # Synthetic families.
    shapes = m.generate_synthetic_family("table", 2, 3, 128)
    assert len(shapes) == 2
    s = shapes[0]
    # Per-part allocation rounds, so the total can fall slightly short.
    assert s.points.shape[1] == 3 and s.points.shape[0] >= 120
    assert s.part_labels.shape == (s.points.shape[0],)
    assert len(s.present_parts) >= 2

    # End-to-end CLI harness on a desk-scale config.
    with tempfile.TemporaryDirectory() as tmp:
        cfg = {
            "corpus": {"family": "table", "count": 2, "surface_points": 64, "seed": 4},
            "network": {
                "d": 8,
                "k": 4,
                "encoder_widths": [8, 16],
                "encoder_post_width": 16,
                "f_hidden": [16, 16],
                "g_layers": 3,
                "g_width": 16,
            },
            "training": {
                "learning_rate": 1e-3,
                "shapes_per_batch": 2,
                "pairs_per_batch": 1,
                "stage1_iterations": 1,
                "stage2_iterations": 1,
                "stage3_iterations": 1,
                "occ_samples_per_step": 32,
                "surface_points_per_step": 24,
                "encoder_points_per_step": 32,
            },
            "inference": {"grid_resolution": 8},
            "evaluation": {"grid_resolution": 8, "sample_count": 32},
        }
        m.run_cli("sample", json.dumps(cfg), tmp)
        m.run_cli("train", json.dumps(cfg), tmp)
        m.run_cli("eval", json.dumps(cfg), tmp)
        assert os.path.exists(os.path.join(tmp, "output", "metrics.json"))

    print("python smoke: all checks passed")


if __name__ == "__main__":
    main()
