#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgcnn/model.hpp"
#include "hgcnn/parallel.hpp"
#include "hgcnn/spectral.hpp"
#include "hgcnn/synthdata.hpp"

namespace py = pybind11;
using namespace hgcnn;

namespace {

PointSet make_pointset(const Matrix& coords, const Matrix& channels) {
    PointSet pts;
    pts.coords = coords;
    pts.channels = channels;
    pts.channel_layout.resize(static_cast<std::size_t>(channels.cols()));
    for (std::size_t c = 0; c < pts.channel_layout.size(); ++c)
        pts.channel_layout[c] = "c" + std::to_string(c);
    pts.validate();
    return pts;
}

ScoreSet make_scores(const std::vector<double>& scores, const std::vector<bool>& genuine,
                     const std::vector<std::string>& subjects,
                     const std::vector<std::string>& attack_types) {
    if (scores.size() != genuine.size())
        throw std::invalid_argument("scores and genuine flags must have equal length");
    if (!subjects.empty() && subjects.size() != scores.size())
        throw std::invalid_argument("subjects must be empty or match the score count");
    if (!attack_types.empty() && attack_types.size() != scores.size())
        throw std::invalid_argument("attack_types must be empty or match the score count");
    ScoreSet s;
    s.records.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        ScoreRecord r;
        r.id = "r" + std::to_string(i);
        r.subject = subjects.empty() ? "s0" : subjects[i];
        r.genuine = genuine[i];
        r.attack_type = genuine[i] ? "" : (attack_types.empty() ? "attack" : attack_types[i]);
        r.score = scores[i];
        s.records.push_back(std::move(r));
    }
    return s;
}

SpectralFilter make_filter(const std::vector<double>& coefficients, bool rescale,
                           double lambda_max) {
    SpectralFilter f;
    f.coefficients = coefficients;
    f.rescale_spectrum = rescale;
    f.lambda_max = lambda_max;
    return f;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "hypergraph spectral learning toolkit (C++ core)";

    m.def("set_thread_count", &set_thread_count, py::arg("n"),
          "worker threads for batched operations");

    // --- hypergraph & spectral ------------------------------------------
    m.def(
        "normalized_laplacian",
        [](int n_vertices, std::vector<std::vector<int>> hyperedges,
           std::vector<double> weights) {
            const Hypergraph hg =
                make_hypergraph(n_vertices, std::move(hyperedges), std::move(weights));
            return normalized_laplacian(hg).matrix;
        },
        py::arg("n_vertices"), py::arg("hyperedges"), py::arg("weights") = std::vector<double>{},
        "normalized hypergraph Laplacian, spectrum in [0, 1]");

    m.def(
        "simple_complete_graph_laplacian",
        [](const Matrix& coords) {
            std::vector<Vector> pts(static_cast<std::size_t>(coords.rows()));
            for (long i = 0; i < coords.rows(); ++i) pts[i] = coords.row(i).transpose();
            return simple_complete_graph_laplacian(pts).matrix;
        },
        py::arg("coords"),
        "normalized Laplacian of the complete graph with Gaussian edge weights");

    m.def(
        "symmetric_eigendecomposition",
        [](const Matrix& m_in) {
            const Eigendecomposition e = symmetric_eigendecomposition(m_in);
            return py::make_tuple(e.eigenvalues, e.eigenvectors);
        },
        py::arg("matrix"), "Jacobi eigendecomposition; ascending eigenvalues");

    m.def(
        "hgft",
        [](const Matrix& laplacian, const Matrix& x) {
            HypergraphLaplacian L;
            L.matrix = laplacian;
            ensure_eigendecomposition(L);
            return hgft(L, x);
        },
        py::arg("laplacian"), py::arg("x"), "hypergraph Fourier transform U^T x");

    m.def(
        "spectral_filter_exact",
        [](const Matrix& laplacian, const Matrix& x, const std::vector<double>& coefficients,
           bool rescale, double lambda_max) {
            HypergraphLaplacian L;
            L.matrix = laplacian;
            ensure_eigendecomposition(L);
            return spectral_filter_exact(L, x, make_filter(coefficients, rescale, lambda_max));
        },
        py::arg("laplacian"), py::arg("x"), py::arg("coefficients"), py::arg("rescale") = false,
        py::arg("lambda_max") = 0.0, "exact spectral filtering through the eigenbasis");

    m.def(
        "chebyshev_filter",
        [](const Matrix& laplacian, const Matrix& x, const std::vector<double>& coefficients,
           bool rescale, double lambda_max) {
            return chebyshev_filter(laplacian, x, make_filter(coefficients, rescale, lambda_max));
        },
        py::arg("laplacian"), py::arg("x"), py::arg("coefficients"), py::arg("rescale") = false,
        py::arg("lambda_max") = 0.0, "Chebyshev-recurrence spectral filtering");

    // --- landmarks -------------------------------------------------------
    m.def("canonical_face_template", &canonical_face_template,
          "68-point 2D face landmark template");

    m.def(
        "augment_landmarks",
        [](const Matrix& coords, const Matrix& channels, int k_interp, double dedup_tolerance) {
            const PointSet out =
                augment_landmarks(make_pointset(coords, channels), {k_interp, dedup_tolerance});
            return py::make_tuple(out.coords, out.channels);
        },
        py::arg("coords"), py::arg("channels"), py::arg("k_interp"),
        py::arg("dedup_tolerance") = 0.5,
        "k-NN midpoint augmentation; returns (coords, channels)");

    m.def(
        "build_knn_hyperedges",
        [](const Matrix& coords, int k_nn) {
            PointSet pts;
            pts.coords = coords;
            pts.channels = Matrix::Zero(coords.rows(), 0);
            return build_knn_hypergraph(pts, {k_nn}).hyperedges;
        },
        py::arg("coords"), py::arg("k_nn"),
        "one (k_nn+1)-uniform hyperedge per point: itself plus its neighbors");

    // --- dataset generation ----------------------------------------------
    m.def(
        "generate_dataset",
        [](const std::string& out_dir, std::uint64_t seed, int subjects, int samples_per_class) {
            GeneratorConfig cfg;
            cfg.seed = seed;
            cfg.n_subjects = subjects;
            cfg.samples_per_subject_per_class = samples_per_class;
            return generate(cfg, out_dir).dump();
        },
        py::arg("out_dir"), py::arg("seed") = 7, py::arg("subjects") = 10,
        py::arg("samples_per_class") = 6,
        "write samples.jsonl + manifest.json; returns the manifest as JSON text");

    // --- metrics -----------------------------------------------------------
    m.def(
        "eer",
        [](const std::vector<double>& scores, const std::vector<bool>& genuine) {
            const EerResult r = eer(make_scores(scores, genuine, {}, {}));
            return py::make_tuple(r.rate, r.threshold);
        },
        py::arg("scores"), py::arg("genuine"), "(equal error rate, crossing threshold)");

    m.def(
        "auc",
        [](const std::vector<double>& scores, const std::vector<bool>& genuine) {
            return auc(make_scores(scores, genuine, {}, {}));
        },
        py::arg("scores"), py::arg("genuine"), "area under the ROC curve");

    m.def(
        "metrics_report",
        [](const std::vector<double>& scores, const std::vector<bool>& genuine,
           const std::vector<std::string>& attack_types, double threshold,
           const std::string& provenance, const std::vector<double>& fdr_targets) {
            return metrics_report(make_scores(scores, genuine, {}, attack_types),
                                  Threshold{threshold, provenance}, fdr_targets)
                .dump();
        },
        py::arg("scores"), py::arg("genuine"), py::arg("attack_types") = std::vector<std::string>{},
        py::arg("threshold") = 0.5, py::arg("provenance") = "fixed",
        py::arg("fdr_targets") = std::vector<double>{0.01, 0.05, 0.10, 0.20},
        "full PAD metric report as JSON text");

    // --- training pipeline -------------------------------------------------
    m.def(
        "train",
        [](const std::string& data, const std::string& out, int model_id,
           const std::string& protocol, std::uint64_t seed, int epochs, int batch_size, double lr,
           int patience, const std::string& arch_json) {
            const ArchitectureConfig arch =
                arch_json.empty() ? make_model_config(model_id)
                                  : ArchitectureConfig::from_json(nlohmann::json::parse(arch_json));
            const LoadResult loaded = load_landmark_samples(data);
            if (loaded.samples.empty())
                throw std::invalid_argument("dataset '" + data + "' holds no usable samples");
            const std::vector<ModelSample> samples = prepare_samples(loaded.samples, arch);
            const SplitResult split = split_samples(samples, protocol);
            HgcnnModel model = make_model(arch, seed);
            TrainConfig tc;
            tc.seed = seed;
            tc.max_epochs = epochs;
            tc.batch_size = batch_size;
            tc.lr = lr;
            tc.patience = patience;
            const TrainResult result = train_model(model, samples, split, tc);
            save_checkpoint(out, model);
            return nlohmann::json{{"checkpoint", out},
                                  {"epochs_run", result.log.size()},
                                  {"best_epoch", result.best_epoch},
                                  {"best_dev_acer", result.best_dev_acer}}
                .dump();
        },
        py::arg("data"), py::arg("out"), py::arg("model_id") = 4,
        py::arg("protocol") = "subjects", py::arg("seed") = 7, py::arg("epochs") = 60,
        py::arg("batch_size") = 50, py::arg("lr") = 1e-3, py::arg("patience") = 10,
        py::arg("arch_json") = "",
        "train on a samples.jsonl file and write a checkpoint; returns a JSON summary");

    m.def(
        "evaluate",
        [](const std::string& data, const std::string& ckpt, const std::string& protocol,
           std::optional<double> threshold, const std::vector<double>& fdr_targets, bool cross) {
            HgcnnModel model = load_checkpoint(ckpt);
            const LoadResult loaded = load_landmark_samples(data);
            if (loaded.samples.empty())
                throw std::invalid_argument("dataset '" + data + "' holds no usable samples");
            const std::vector<ModelSample> samples = prepare_samples(loaded.samples, model.cfg);
            ScoreSet scores;
            Threshold th{threshold.value_or(0.5), "fixed"};
            if (cross) {
                scores = predict_all(model, samples);
            } else {
                const SplitResult split = split_samples(samples, protocol);
                if (!threshold) {
                    const ScoreSet dev = predict(model, samples, split.dev);
                    th = Threshold{eer(dev).threshold, "dev-EER"};
                }
                scores = predict(model, samples, split.test);
            }
            return metrics_report(scores, th, fdr_targets).dump();
        },
        py::arg("data"), py::arg("ckpt"), py::arg("protocol") = "subjects",
        py::arg("threshold") = std::nullopt,
        py::arg("fdr_targets") = std::vector<double>{0.01, 0.05, 0.10, 0.20},
        py::arg("cross") = false, "score a dataset with a checkpoint; returns the report JSON");

    m.def(
        "predict_scores",
        [](const std::string& ckpt, const std::string& data) {
            HgcnnModel model = load_checkpoint(ckpt);
            const LoadResult loaded = load_landmark_samples(data);
            if (loaded.samples.empty())
                throw std::invalid_argument("dataset '" + data + "' holds no usable samples");
            const ScoreSet s = predict_all(model, prepare_samples(loaded.samples, model.cfg));
            py::list out;
            for (const ScoreRecord& r : s.records)
                out.append(py::make_tuple(r.id, r.subject, r.genuine, r.attack_type, r.score));
            return out;
        },
        py::arg("ckpt"), py::arg("data"),
        "list of (id, subject, genuine, attack_type, score) for every sample");
}
