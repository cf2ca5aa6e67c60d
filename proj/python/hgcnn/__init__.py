"""Hypergraph spectral learning toolkit for face presentation-attack detection.

Thin wrapper over the C++ core: graph construction, spectral filtering,
landmark augmentation, the synthetic RGB-D dataset generator, the two-branch
classifier pipeline, and the PAD metric suite.
"""

import json as _json

from ._core import (
    auc,
    augment_landmarks,
    build_knn_hyperedges,
    canonical_face_template,
    chebyshev_filter,
    eer,
    hgft,
    normalized_laplacian,
    predict_scores,
    set_thread_count,
    simple_complete_graph_laplacian,
    spectral_filter_exact,
    symmetric_eigendecomposition,
)
from ._core import evaluate as _evaluate_json
from ._core import generate_dataset as _generate_dataset_json
from ._core import metrics_report as _metrics_report_json
from ._core import train as _train_json

__all__ = [
    "auc",
    "augment_landmarks",
    "build_knn_hyperedges",
    "canonical_face_template",
    "chebyshev_filter",
    "eer",
    "evaluate",
    "generate_dataset",
    "hgft",
    "metrics_report",
    "normalized_laplacian",
    "predict_scores",
    "set_thread_count",
    "simple_complete_graph_laplacian",
    "spectral_filter_exact",
    "symmetric_eigendecomposition",
    "train",
]


def generate_dataset(out_dir, seed=7, subjects=10, samples_per_class=6):
    """Write samples.jsonl and manifest.json; returns the manifest as a dict."""
    return _json.loads(_generate_dataset_json(out_dir, seed, subjects, samples_per_class))


def metrics_report(scores, genuine, attack_types=(), threshold=0.5, provenance="fixed",
                   fdr_targets=(0.01, 0.05, 0.10, 0.20)):
    """Full PAD metric report as a dict."""
    return _json.loads(
        _metrics_report_json(list(scores), list(genuine), list(attack_types), threshold,
                             provenance, list(fdr_targets)))


def train(data, out, model_id=4, protocol="subjects", seed=7, epochs=60, batch_size=50,
          lr=1e-3, patience=10, arch_json=""):
    """Train on a samples.jsonl file, write a checkpoint; returns a summary dict."""
    return _json.loads(
        _train_json(data, out, model_id, protocol, seed, epochs, batch_size, lr, patience,
                    arch_json))


def evaluate(data, ckpt, protocol="subjects", threshold=None,
             fdr_targets=(0.01, 0.05, 0.10, 0.20), cross=False):
    """Score a dataset with a checkpoint; returns the metric report as a dict."""
    return _json.loads(_evaluate_json(data, ckpt, protocol, threshold, list(fdr_targets), cross))
