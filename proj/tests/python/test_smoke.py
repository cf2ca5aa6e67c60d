"""End-to-end smoke tests for the python bindings."""

import numpy as np
import pytest

import hgcnn

hgcnn.set_thread_count(1)


def test_single_edge_laplacian():
    L = hgcnn.normalized_laplacian(2, [[0, 1]])
    assert np.allclose(L, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)


def test_eigendecomposition_matches_numpy():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((12, 12))
    m = a + a.T
    values, vectors = hgcnn.symmetric_eigendecomposition(m)
    ref = np.linalg.eigvalsh(m)
    assert np.allclose(values, ref, atol=1e-9)
    assert np.allclose(vectors @ np.diag(values) @ vectors.T, m, atol=1e-9)
    assert np.allclose(vectors.T @ vectors, np.eye(12), atol=1e-10)


def test_chebyshev_matches_exact_filtering():
    L = hgcnn.normalized_laplacian(4, [[0, 1, 2], [1, 2, 3], [0, 3]], [1.0, 0.7, 1.3])
    rng = np.random.default_rng(1)
    x = rng.standard_normal((4, 2))
    theta = [0.3, -0.8, 0.25]
    fast = hgcnn.chebyshev_filter(L, x, theta)
    exact = hgcnn.spectral_filter_exact(L, x, theta)
    assert np.allclose(fast, exact, atol=1e-10)


def test_hgft_preserves_norm():
    L = hgcnn.normalized_laplacian(5, [[0, 1, 2], [2, 3, 4]])
    rng = np.random.default_rng(2)
    x = rng.standard_normal((5, 3))
    x_hat = hgcnn.hgft(L, x)
    assert x_hat.shape == (5, 3)
    assert np.isclose(np.linalg.norm(x_hat), np.linalg.norm(x))


def test_landmark_pipeline_shapes():
    tmpl = hgcnn.canonical_face_template()
    assert tmpl.shape == (68, 2)
    coords, channels = hgcnn.augment_landmarks(tmpl, np.zeros((68, 1)), k_interp=6)
    assert coords.shape == (318, 2)
    assert channels.shape == (318, 1)
    edges = hgcnn.build_knn_hyperedges(coords, 13)
    assert len(edges) == 318
    assert all(len(e) == 14 for e in edges)
    assert all(list(e) == sorted(e) for e in edges)


def test_metrics_hand_values():
    rate, threshold = hgcnn.eer([0.9, 0.8, 0.4, 0.3], [True, True, False, False])
    assert rate == 0.0
    assert 0.4 < threshold <= 0.8
    assert hgcnn.auc([0.9, 0.8, 0.4, 0.3], [True, True, False, False]) == 1.0

    report = hgcnn.metrics_report(
        [0.9, 0.2, 0.7, 0.6],
        [True, True, False, False],
        attack_types=["", "", "print", "replay"],
        threshold=0.5,
    )
    assert report["threshold"]["value"] == 0.5
    assert report["counts"]["genuine"] == 2
    assert report["counts"]["attacks"] == 2
    assert set(report["apcer_by_type"]) == {"print", "replay"}
    assert "eer" in report and "auc" in report


def test_generate_train_evaluate(tmp_path):
    manifest = hgcnn.generate_dataset(str(tmp_path / "data"), seed=7, subjects=4,
                                      samples_per_class=4)
    assert manifest["total_samples"] == 4 * 4 * 4
    assert (tmp_path / "data" / "samples.jsonl").exists()

    data = str(tmp_path / "data" / "samples.jsonl")
    ckpt = str(tmp_path / "model.hgc")
    summary = hgcnn.train(data, ckpt, model_id=4, protocol="subjects", seed=7, epochs=3,
                          batch_size=16)
    assert summary["checkpoint"] == ckpt
    assert summary["epochs_run"] >= 1

    report = hgcnn.evaluate(data, ckpt, protocol="subjects")
    assert report["threshold"]["provenance"] == "dev-EER"
    assert 0.0 <= report["acer"] <= 1.0

    rows = hgcnn.predict_scores(ckpt, data)
    assert len(rows) == 64
    ident, subject, genuine, attack_type, score = rows[0]
    assert ident == "s00_genuine_000"
    assert subject == "s00"
    assert genuine is True
    assert attack_type == ""
    assert 0.0 <= score <= 1.0


def test_invalid_inputs_raise():
    with pytest.raises(Exception):
        hgcnn.normalized_laplacian(3, [])  # no hyperedges
    with pytest.raises(Exception):
        hgcnn.eer([0.5, 0.6], [True, True])  # one class only
