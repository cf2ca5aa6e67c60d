// Acceptance gate: one printed line per criterion, [PASS] or [FAIL].
// Exits 1 at the first failed criterion. argv[1] must name the CLI binary
// (used by the subprocess determinism criterion).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hgcnn/hypergraph.hpp"
#include "hgcnn/landmarks.hpp"
#include "hgcnn/metrics.hpp"
#include "hgcnn/model.hpp"
#include "hgcnn/nn.hpp"
#include "hgcnn/parallel.hpp"
#include "hgcnn/rng.hpp"
#include "hgcnn/spectral.hpp"
#include "hgcnn/synthdata.hpp"
#include "oracles.hpp"

#define REQUIRE(cond, msg)                                                       \
    do {                                                                         \
        if (!(cond)) {                                                           \
            std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << msg  \
                      << "\n";                                                   \
            std::exit(1);                                                        \
        }                                                                        \
    } while (0)

namespace {

using hgcnn::Matrix;
using hgcnn::Vector;

class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

std::string fmt_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", s);
    return buf;
}

// --- criterion 1: Laplacian property suite ----------------------------------

void criterion_laplacian_properties() {
    Stopwatch watch;
    hgcnn::Rng rng(1);
    for (int t = 0; t < 1000; ++t) {
        const hgcnn::Hypergraph hg = oracle::random_hypergraph(rng, 50);
        hgcnn::HypergraphLaplacian L = hgcnn::normalized_laplacian(hg);
        REQUIRE(hgcnn::symmetry_defect(L.matrix) <= 1e-12,
                "laplacian symmetry defect above 1e-12 at trial " << t);

        hgcnn::ensure_eigendecomposition(L);
        REQUIRE(L.eigenvalues->minCoeff() >= -1e-8,
                "negative eigenvalue " << L.eigenvalues->minCoeff() << " at trial " << t);
        REQUIRE(L.eigenvalues->maxCoeff() <= 1.0 + 1e-8,
                "eigenvalue above 1: " << L.eigenvalues->maxCoeff() << " at trial " << t);

        const hgcnn::DegreeDiagonals deg = hgcnn::compute_degrees(hg, hgcnn::build_incidence(hg));
        Vector null_vec = deg.vertex_degrees.cwiseSqrt();
        null_vec /= null_vec.norm();
        REQUIRE((L.matrix * null_vec).cwiseAbs().maxCoeff() <= 1e-10,
                "degree nullvector residual above 1e-10 at trial " << t);
    }
    const double secs = watch.seconds();
    REQUIRE(secs < 30.0, "laplacian suite took " << secs << " s, budget 30 s");
    std::cout << "[PASS] laplacian property suite: 1000 fuzzed hypergraphs (n <= 50), symmetry, "
                 "spectrum, nullvector ("
              << fmt_seconds(secs) << " s)\n";
}

// --- criterion 2: 2-uniform reduction ---------------------------------------

void criterion_two_uniform_reduction() {
    hgcnn::Rng rng(2);
    for (int t = 0; t < 200; ++t) {
        const int n = 3 + static_cast<int>(rng.uniform_index(10));
        std::vector<std::vector<int>> edges;
        std::vector<double> weights;
        for (int i = 1; i < n; ++i) {  // spanning path keeps every vertex covered
            edges.push_back({i - 1, i});
            weights.push_back(rng.uniform(0.1, 2.0));
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 2; j < n; ++j)
                if (rng.uniform() < 0.3) {
                    edges.push_back({i, j});
                    weights.push_back(rng.uniform(0.1, 2.0));
                }

        const Matrix L_hyper =
            hgcnn::normalized_laplacian(hgcnn::make_hypergraph(n, edges, weights)).matrix;

        Matrix adjacency = Matrix::Zero(n, n);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            adjacency(edges[e][0], edges[e][1]) += weights[e];
            adjacency(edges[e][1], edges[e][0]) += weights[e];
        }
        const Matrix L_simple = oracle::simple_laplacian_by_definition(adjacency);
        const double dev = (L_hyper - 0.5 * L_simple).cwiseAbs().maxCoeff();
        REQUIRE(dev <= 1e-10, "2-uniform reduction deviation " << dev << " at trial " << t);
    }
    std::cout << "[PASS] 2-uniform reduction: hypergraph laplacian is half the simple graph "
                 "laplacian on 200 weighted graphs\n";
}

// --- criterion 3: Chebyshev vs exact filtering -------------------------------

void criterion_chebyshev_vs_exact() {
    hgcnn::Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        hgcnn::HypergraphLaplacian L =
            hgcnn::normalized_laplacian(oracle::random_hypergraph(rng, 30));
        hgcnn::ensure_eigendecomposition(L);
        const int n = static_cast<int>(L.matrix.rows());
        Matrix x(n, 2);
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < 2; ++c) x(i, c) = rng.uniform(-1.0, 1.0);

        hgcnn::SpectralFilter f;
        const int K = 1 + static_cast<int>(rng.uniform_index(6));
        for (int k = 0; k < K; ++k) f.coefficients.push_back(rng.uniform(-1.0, 1.0));

        const double dev = (hgcnn::chebyshev_filter(L.matrix, x, f) -
                            hgcnn::spectral_filter_exact(L, x, f))
                               .cwiseAbs()
                               .maxCoeff();
        REQUIRE(dev <= 1e-8, "chebyshev deviation " << dev << " at trial " << t << " (K=" << K
                                                    << ", n=" << n << ")");
    }
    std::cout << "[PASS] chebyshev filtering matches exact spectral filtering: 200 trials, "
                 "K <= 6, n <= 30, max deviation <= 1e-8\n";
}

// --- criterion 4: gradient checks --------------------------------------------

double conv_objective(hgcnn::HyperConvLayer& layer, const std::vector<const Matrix*>& ls,
                      const std::vector<Matrix>& xs) {
    std::vector<Matrix> ys = hgcnn::hyperconv_forward_batch(layer, ls, xs, true, nullptr);
    double s = 0.0;
    for (const Matrix& y : ys) s += y.squaredNorm();
    return 0.5 * s;
}

void criterion_gradient_checks() {
    hgcnn::Rng rng(4);

    // hypergraph convolution layers, alternating batch norm on/off
    int done = 0;
    while (done < 50) {
        const bool with_bn = done % 2 == 0;
        const int f1 = 2 + static_cast<int>(rng.uniform_index(4));
        const int f2 = 2 + static_cast<int>(rng.uniform_index(4));
        const int K = 1 + static_cast<int>(rng.uniform_index(3));
        hgcnn::HyperConvLayer layer =
            hgcnn::make_hyperconv("g", f1, f2, K, false, 0.0, with_bn, rng);
        for (int f = 0; f < f2; ++f) layer.dense.bias(f) = rng.uniform(0.05, 0.3);

        const Matrix L1 = hgcnn::normalized_laplacian(oracle::random_hypergraph(rng, 8)).matrix;
        const Matrix L2 = hgcnn::normalized_laplacian(oracle::random_hypergraph(rng, 8)).matrix;
        std::vector<Matrix> xs = {Matrix(L1.rows(), f1), Matrix(L2.rows(), f1)};
        for (Matrix& x : xs)
            for (int i = 0; i < x.rows(); ++i)
                for (int j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(-1.0, 1.0);
        std::vector<const Matrix*> ls = {&L1, &L2};

        hgcnn::HyperConvCache cache;
        std::vector<Matrix> ys = hgcnn::hyperconv_forward_batch(layer, ls, xs, true, &cache);

        // skip configurations with a pre-activation too close to the ReLU kink
        // for finite differences to be meaningful
        double kink_margin = 1e9;
        for (const Matrix& pre : cache.pre_activation)
            kink_margin = std::min(kink_margin, pre.cwiseAbs().minCoeff());
        if (kink_margin < 5e-5) continue;

        layer.zero_grad();
        std::vector<Matrix> gx = hgcnn::hyperconv_backward_batch(layer, ls, xs, cache, ys);
        for (hgcnn::ParamRef& p : hgcnn::collect_params(layer)) {
            std::vector<double> analytic(p.grad, p.grad + p.size);
            const std::vector<double> numeric = oracle::central_differences(
                [&]() { return conv_objective(layer, ls, xs); }, p.value, p.size);
            const double err = oracle::max_relative_error(analytic, numeric, 1e-4);
            REQUIRE(err < 1e-4, "conv layer gradient " << p.name << " off by " << err
                                                       << " at trial " << done);
        }
        for (int s = 0; s < 2; ++s) {
            std::vector<double> analytic(gx[s].data(), gx[s].data() + gx[s].size());
            const std::vector<double> numeric = oracle::central_differences(
                [&]() { return conv_objective(layer, ls, xs); }, xs[s].data(),
                static_cast<std::size_t>(xs[s].size()));
            const double err = oracle::max_relative_error(analytic, numeric, 1e-4);
            REQUIRE(err < 1e-4, "conv layer input gradient off by " << err << " at trial " << done);
        }
        ++done;
    }

    // dense layers
    for (int t = 0; t < 50; ++t) {
        const int f1 = 1 + static_cast<int>(rng.uniform_index(5));
        const int f2 = 1 + static_cast<int>(rng.uniform_index(5));
        hgcnn::DenseParam p = hgcnn::make_dense(f1, f2, rng);
        Matrix x(3, f1);
        for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
        const auto objective = [&]() { return 0.5 * hgcnn::dense_forward(p, x).squaredNorm(); };
        p.zero_grad();
        const Matrix gx = hgcnn::dense_backward(p, x, hgcnn::dense_forward(p, x));
        for (hgcnn::ParamRef& ref : hgcnn::collect_params(p, "d")) {
            std::vector<double> analytic(ref.grad, ref.grad + ref.size);
            const double err = oracle::max_relative_error(
                analytic, oracle::central_differences(objective, ref.value, ref.size), 1e-4);
            REQUIRE(err < 1e-4, "dense gradient " << ref.name << " off by " << err);
        }
        std::vector<double> analytic(gx.data(), gx.data() + gx.size());
        const double err = oracle::max_relative_error(
            analytic,
            oracle::central_differences(objective, x.data(), static_cast<std::size_t>(x.size())),
            1e-4);
        REQUIRE(err < 1e-4, "dense input gradient off by " << err);
    }

    // cross-entropy loss
    for (int t = 0; t < 50; ++t) {
        const int B = 1 + static_cast<int>(rng.uniform_index(6));
        Matrix logits(B, 2);
        std::vector<int> labels;
        for (int i = 0; i < B; ++i) {
            logits(i, 0) = rng.uniform(-2.0, 2.0);
            logits(i, 1) = rng.uniform(-2.0, 2.0);
            labels.push_back(static_cast<int>(rng.uniform_index(2)));
        }
        const hgcnn::LossResult r = hgcnn::cross_entropy_loss(logits, labels);
        std::vector<double> analytic(r.grad.data(), r.grad.data() + r.grad.size());
        const std::vector<double> numeric = oracle::central_differences(
            [&]() { return hgcnn::cross_entropy_loss(logits, labels).loss; }, logits.data(),
            static_cast<std::size_t>(logits.size()), 1e-6);
        const double err = oracle::max_relative_error(analytic, numeric);
        REQUIRE(err < 1e-4, "loss gradient off by " << err << " at trial " << t);
    }

    std::cout << "[PASS] gradient checks: conv, dense and loss match central finite differences "
                 "within relative 1e-4, 50 trials each\n";
}

// --- criterion 5: rigid-motion invariance ------------------------------------

double knn_boundary_margin(const hgcnn::PointSet& ps, int k) {
    const int n = ps.n_points();
    double margin = 1e300;
    for (int i = 0; i < n; ++i) {
        std::vector<double> d2;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            d2.push_back((ps.coords.row(i) - ps.coords.row(j)).squaredNorm());
        }
        std::nth_element(d2.begin(), d2.begin() + k, d2.end());
        const double kth = *std::max_element(d2.begin(), d2.begin() + k);
        const double next = *std::min_element(d2.begin() + k, d2.end());
        margin = std::min(margin, next - kth);
    }
    return margin;
}

void criterion_rigid_motion_invariance() {
    hgcnn::Rng rng(5);

    struct Fixture {
        hgcnn::PointSet points;
        int k;
    };
    std::vector<Fixture> fixtures;

    // production fixture: the augmented face template with its calibrated k
    hgcnn::PointSet tmpl;
    tmpl.coords = hgcnn::canonical_face_template();
    tmpl.channels = Matrix::Zero(68, 1);
    tmpl.channel_layout = {"c0"};
    fixtures.push_back(
        {hgcnn::augment_landmarks(tmpl, hgcnn::AugmentationConfig{6, 0.5}), 13});

    // random clouds, rejection-sampled until the k-NN boundary has margin
    while (fixtures.size() < 5) {
        const int n = 20 + static_cast<int>(rng.uniform_index(41));
        hgcnn::PointSet ps;
        ps.coords = Matrix(n, 2);
        for (int i = 0; i < n; ++i) {
            ps.coords(i, 0) = rng.uniform(0.0, 100.0);
            ps.coords(i, 1) = rng.uniform(0.0, 100.0);
        }
        ps.channels = Matrix::Zero(n, 1);
        ps.channel_layout = {"c0"};
        const int k = 3 + static_cast<int>(rng.uniform_index(6));
        if (knn_boundary_margin(ps, k) <= 1e-6) continue;
        fixtures.push_back({std::move(ps), k});
    }

    int transforms = 0;
    for (const Fixture& fx : fixtures) {
        REQUIRE(knn_boundary_margin(fx.points, fx.k) > 1e-6,
                "fixture lost its tie margin; cannot certify invariance");
        const hgcnn::Hypergraph base =
            hgcnn::build_knn_hypergraph(fx.points, hgcnn::HypergraphConfig{fx.k});
        const double cx = fx.points.coords.col(0).mean();
        const double cy = fx.points.coords.col(1).mean();
        for (int t = 0; t < 20; ++t) {
            const double ang = rng.uniform(0.0, 2.0 * M_PI);
            const double tx = rng.uniform(-50.0, 50.0);
            const double ty = rng.uniform(-50.0, 50.0);
            hgcnn::PointSet moved = fx.points;
            for (int i = 0; i < moved.n_points(); ++i) {
                const double x = fx.points.coords(i, 0) - cx;
                const double y = fx.points.coords(i, 1) - cy;
                moved.coords(i, 0) = cx + x * std::cos(ang) - y * std::sin(ang) + tx;
                moved.coords(i, 1) = cy + x * std::sin(ang) + y * std::cos(ang) + ty;
            }
            const hgcnn::Hypergraph hg =
                hgcnn::build_knn_hypergraph(moved, hgcnn::HypergraphConfig{fx.k});
            REQUIRE(hg.hyperedges == base.hyperedges,
                    "incidence changed under rigid motion " << t << " of fixture with n="
                                                            << fx.points.n_points());
            ++transforms;
        }
    }
    REQUIRE(transforms == 100, "expected 100 transforms, ran " << transforms);
    std::cout << "[PASS] rigid-motion invariance: 100 rotations/translations of 5 fixtures "
                 "leave the hyperedge incidence exactly unchanged\n";
}

// --- criterion 6: metric oracle equivalence ----------------------------------

void criterion_metric_oracles() {
    hgcnn::Rng rng(6);
    for (int t = 0; t < 100; ++t) {
        const hgcnn::ScoreSet s = oracle::random_scores(rng, 200);

        const auto [orate, oth] = oracle::eer_by_sweep(s);
        const hgcnn::EerResult e = hgcnn::eer(s);
        REQUIRE(std::abs(e.rate - orate) <= 1e-10,
                "eer " << e.rate << " vs oracle " << orate << " at trial " << t);

        const double a = hgcnn::auc(s);
        const double oa = oracle::auc_pairwise(s);
        REQUIRE(std::abs(a - oa) <= 1e-10, "auc " << a << " vs oracle " << oa << " at trial " << t);

        // uninterpolated threshold metrics must be exact
        const double th = static_cast<double>(rng.uniform_index(21)) / 20.0;
        const oracle::Rates r = oracle::rates_at(s, th);
        const auto [far, frr] = hgcnn::far_frr(s, th);
        REQUIRE(far == r.far && frr == r.frr, "far/frr not exact at trial " << t);
        REQUIRE(hgcnn::hter(s, hgcnn::Threshold{th, "fixed"}) == 0.5 * (r.far + r.frr),
                "hter not exact at trial " << t);
        const hgcnn::AttackErrorReport rep =
            hgcnn::apcer_bpcer_acer(s, hgcnn::Threshold{th, "fixed"});
        REQUIRE(rep.apcer == r.far && rep.bpcer == r.frr, "apcer/bpcer not exact at trial " << t);
        REQUIRE(rep.acer == 0.5 * (r.far + r.frr), "acer not exact at trial " << t);
        for (const auto& [type, value] : rep.apcer_by_type) {
            long n = 0, accepted = 0;
            for (const hgcnn::ScoreRecord& rec : s.records) {
                if (rec.genuine || rec.attack_type != type) continue;
                ++n;
                if (rec.score >= th) ++accepted;
            }
            REQUIRE(value == static_cast<double>(accepted) / n,
                    "per-type apcer not exact for '" << type << "' at trial " << t);
        }

        const std::vector<double> targets = {0.0, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0};
        const std::vector<double> tdr = hgcnn::tdr_at_fdr(s, targets);
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const double ref = oracle::tdr_at_fdr_by_sweep(s, targets[i]);
            REQUIRE(std::abs(tdr[i] - ref) <= 1e-10, "tdr@fdr(" << targets[i] << ") " << tdr[i]
                                                                << " vs oracle " << ref
                                                                << " at trial " << t);
        }
    }
    std::cout << "[PASS] metric oracle equivalence: EER/HTER/APCER/BPCER/ACER/AUC/TDR@FDR match "
                 "direct threshold enumeration on 100 score sets\n";
}

// --- criterion 7: end-to-end synthetic benchmark ------------------------------

struct BenchmarkOutcome {
    hgcnn::HgcnnModel model4;
    std::vector<hgcnn::ModelSample> samples4;
    hgcnn::SplitResult split4;
};

BenchmarkOutcome criterion_end_to_end() {
    Stopwatch watch;

    hgcnn::GeneratorConfig gen;  // 10 subjects, 6 per class, seed 7
    const std::vector<hgcnn::LandmarkSample> raw = hgcnn::generate_samples(gen);

    hgcnn::TrainConfig tc;
    tc.max_epochs = 40;
    tc.batch_size = 25;
    tc.lr = 1e-3;
    tc.patience = 40;
    tc.seed = 7;

    double dev_auc[5] = {0, 0, 0, 0, 0};
    double model4_test_acer = 1.0;
    double mouth_ratio_raw = 0.0, mouth_ratio_deep = 0.0;
    BenchmarkOutcome out;

    for (int id = 1; id <= 4; ++id) {
        const hgcnn::ArchitectureConfig cfg = hgcnn::make_model_config(id);
        std::vector<hgcnn::ModelSample> samples = hgcnn::prepare_samples(raw, cfg);
        hgcnn::SplitResult split = hgcnn::split_samples(samples, "subjects");
        hgcnn::HgcnnModel model = hgcnn::make_model(cfg, 7);
        hgcnn::train_model(model, samples, split, tc);

        const hgcnn::ScoreSet dev_scores = hgcnn::predict(model, samples, split.dev);
        dev_auc[id] = hgcnn::auc(dev_scores);

        if (id == 4) {
            const hgcnn::EerResult dev_eer = hgcnn::eer(dev_scores);
            const hgcnn::Threshold th{dev_eer.threshold, "dev-EER"};
            const hgcnn::ScoreSet test_scores = hgcnn::predict(model, samples, split.test);
            model4_test_acer = hgcnn::apcer_bpcer_acer(test_scores, th).acer;

            // informational: deeper layers contract the annotated mouth region
            // (original landmarks 48-67) relative to the average feature spread
            const std::vector<Matrix> feats =
                hgcnn::layer_features(model, samples[split.test.front()]);
            auto region_ratio = [&](const Matrix& f) {
                const int n = samples[split.test.front()].n_original;
                double mouth = 0.0, all = 0.0;
                long mouth_n = 0, all_n = 0;
                for (int i = 0; i < n; ++i)
                    for (int j = i + 1; j < n; ++j) {
                        const double d = (f.row(i) - f.row(j)).norm();
                        all += d;
                        ++all_n;
                        if (i >= 48) {  // j > i, so both endpoints are mouth landmarks
                            mouth += d;
                            ++mouth_n;
                        }
                    }
                return (mouth / mouth_n) / (all / all_n);
            };
            mouth_ratio_raw = region_ratio(feats.front());
            mouth_ratio_deep = region_ratio(feats.back());

            out.model4 = std::move(model);
            out.samples4 = std::move(samples);
            out.split4 = std::move(split);
        }
    }

    const double secs = watch.seconds();
    REQUIRE(secs < 600.0, "end-to-end benchmark took " << secs << " s, budget 600 s");
    REQUIRE(model4_test_acer <= 0.02,
            "full model test ACER " << model4_test_acer << " above 0.02");
    REQUIRE(dev_auc[1] <= dev_auc[3] + 1e-12, "ablation ordering broken: graph-free dev AUC "
                                                  << dev_auc[1] << " > pairwise graph "
                                                  << dev_auc[3]);
    REQUIRE(dev_auc[3] <= dev_auc[4] + 1e-12, "ablation ordering broken: pairwise dev AUC "
                                                  << dev_auc[3] << " > full model " << dev_auc[4]);
    REQUIRE(dev_auc[2] <= dev_auc[4] + 1e-12, "ablation ordering broken: color-only dev AUC "
                                                  << dev_auc[2] << " > full model " << dev_auc[4]);

    std::cout << "[PASS] end-to-end benchmark: full-model test ACER "
              << model4_test_acer * 100.0 << "%, dev AUC " << dev_auc[1] << " (graph-free) <= "
              << dev_auc[3] << " (pairwise) <= " << dev_auc[4] << " (full), " << dev_auc[2]
              << " (color-only) <= full; mouth-region feature ratio " << mouth_ratio_raw
              << " -> " << mouth_ratio_deep << " (" << fmt_seconds(secs) << " s)\n";
    return out;
}

// --- criterion 8: CLI determinism ---------------------------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good(), "cannot read " << p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_cli_determinism(const std::string& cli) {
    Stopwatch watch;
    const std::filesystem::path base =
        std::filesystem::temp_directory_path() / "hgcnn_acceptance_cli";
    std::filesystem::remove_all(base);

    for (const char* run : {"one", "two"}) {
        const std::filesystem::path dir = base / run;
        std::filesystem::create_directories(dir);
        const std::string data = (dir / "data").string();
        const std::string train = (dir / "train").string();
        const std::string eval = (dir / "eval").string();

        std::vector<std::string> commands = {
            "\"" + cli + "\" generate --out \"" + data +
                "\" --seed 7 --subjects 4 --samples-per-class 4 --threads 1 > /dev/null",
            "\"" + cli + "\" train --data \"" + data + "\" --out \"" + train +
                "\" --model 4 --epochs 4 --batch-size 16 --protocol subjects --threads 1 "
                "> /dev/null",
            "\"" + cli + "\" eval --data \"" + data + "\" --ckpt \"" + train +
                "/checkpoint.hgc\" --out \"" + eval + "\" --protocol subjects --threads 1 "
                "> /dev/null",
        };
        for (const std::string& cmd : commands) {
            const int rc = std::system(cmd.c_str());
            REQUIRE(rc == 0, "command failed (exit " << rc << "): " << cmd);
        }
    }

    const std::string a = slurp(base / "one" / "eval" / "scores.csv");
    const std::string b = slurp(base / "two" / "eval" / "scores.csv");
    REQUIRE(!a.empty(), "first run produced an empty score CSV");
    REQUIRE(a == b, "score CSVs differ between identical single-threaded runs");
    std::filesystem::remove_all(base);
    std::cout << "[PASS] determinism: two generate -> train -> eval runs with --threads 1 "
                 "produce byte-identical score CSVs ("
              << fmt_seconds(watch.seconds()) << " s)\n";
}

// --- criterion 9: checkpoint round trip ---------------------------------------

void criterion_checkpoint_roundtrip(BenchmarkOutcome& bench) {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "hgcnn_acceptance_ckpt";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "model.hgc").string();

    hgcnn::save_checkpoint(path, bench.model4);
    hgcnn::HgcnnModel restored = hgcnn::load_checkpoint(path);

    std::vector<int> batch(bench.split4.test.begin(),
                           bench.split4.test.begin() +
                               std::min<std::size_t>(8, bench.split4.test.size()));
    const Matrix a = hgcnn::model_forward(bench.model4, bench.samples4, batch, false, nullptr);
    const Matrix b = hgcnn::model_forward(restored, bench.samples4, batch, false, nullptr);
    REQUIRE(a.rows() == b.rows() && a.cols() == b.cols(), "restored logits have a different shape");
    REQUIRE((a - b).cwiseAbs().maxCoeff() == 0.0, "restored logits are not bitwise identical");
    std::filesystem::remove_all(dir);
    std::cout << "[PASS] checkpoint round-trip: reloaded model reproduces bitwise-identical "
                 "logits on a pinned batch\n";
}

}  // namespace

int main(int argc, char** argv) {
    REQUIRE(argc >= 2, "usage: hgcnn_acceptance <path-to-cli-binary>");
    const std::string cli = argv[1];
    REQUIRE(std::filesystem::exists(cli), "CLI binary not found at " << cli);

    const unsigned hw = std::thread::hardware_concurrency();
    hgcnn::set_thread_count(static_cast<int>(hw == 0 ? 1 : std::min(hw, 8u)));

    criterion_laplacian_properties();
    criterion_two_uniform_reduction();
    criterion_chebyshev_vs_exact();
    criterion_gradient_checks();
    criterion_rigid_motion_invariance();
    criterion_metric_oracles();
    BenchmarkOutcome bench = criterion_end_to_end();
    criterion_cli_determinism(cli);
    criterion_checkpoint_roundtrip(bench);
    return 0;
}
