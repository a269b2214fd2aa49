"""Smoke tests for the python surface of the core module."""

import json
import math

import numpy as np
import pytest

import labeldense as ld


def test_generate_scene_deterministic():
    a = ld.generate_scene([0, 3], points_per_object=50, seed=7)
    b = ld.generate_scene([0, 3], points_per_object=50, seed=7)
    assert a["positions"].shape == (100, 3)
    assert set(np.unique(a["labels"])) == {0, 3}
    np.testing.assert_array_equal(a["positions"], b["positions"])
    np.testing.assert_array_equal(a["colors"], b["colors"])


def test_derive_scene_labels():
    assert ld.derive_scene_labels([0, 0, 3], 4) == [1, 0, 0, 1]


def test_kmeans_canonical_instance():
    pts = np.array([[0.0], [1.0], [9.0], [10.0]])
    centroids, labels, trace = ld.kmeans(pts, 2, seed=3)
    assert trace[-1] == pytest.approx(1.0)
    assert sorted(centroids.ravel().tolist()) == pytest.approx([0.5, 9.5])
    assert labels[0] == labels[1] != labels[2] == labels[3]


def test_hungarian_beats_naive_on_contention():
    scores = np.array([[0.9, 0.8], [0.85, 0.1]])
    h = ld.hungarian_match(scores)
    n = ld.naive_match(scores)
    assert h["total_score"] == pytest.approx(1.65)
    assert h["class_of_primitive"] == [1, 0]
    assert h["matched_count"] == 2
    assert n["matched_count"] == 1


def test_loss_values():
    s = np.zeros((5, 2))
    loss, grad = ld.loss_cam(s, [1, 0])
    assert loss == pytest.approx(2.0 * math.log(2.0))
    assert grad.shape == (5, 2)

    loss, grad = ld.loss_dense(np.zeros((3, 4)), [0, 2, 3])
    assert loss == pytest.approx(math.log(4.0))

    loss, _ = ld.loss_dense(np.zeros((3, 4)), [-1, -1, -1])
    assert loss == 0.0


def test_evaluate_predictions():
    rep = ld.evaluate_predictions([[0, 0, 1, 1]], [[0, 1, 1, 1]], 2)
    assert rep["miou"] == pytest.approx(7.0 / 12.0)
    assert rep["per_class_iou"][0] == pytest.approx(0.5)


def test_end_to_end_tiny_training(tmp_path):
    manifest = ld.gen_dataset(str(tmp_path / "ds"), scenes=4, cooccur="free", seed=1,
                              points_per_object=60)
    cfg = json.dumps({
        "epochs": 2,
        "k_primitives": 8,
        "kmeans_period": 1,
        "warmup_epochs": 1,
        "match_delay_epochs": 0,
        "k_nn": 6,
    })
    out = ld.train(manifest, cfg, threads=2)
    assert 0.0 <= out["miou"] <= 1.0
    assert out["history_csv"].startswith("epoch,")
    assert len(out["history_csv"].strip().splitlines()) == 3
    report = json.loads(out["report_json"])
    assert len(report["per_class_iou"]) == 6


def test_scene_file_errors(tmp_path):
    bad = tmp_path / "bad.wpc"
    bad.write_bytes(b"XXXX")
    with pytest.raises(ld.LdDataError):
        ld.read_scene(str(bad))
