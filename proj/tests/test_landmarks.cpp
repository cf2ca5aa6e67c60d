#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hgcnn/landmarks.hpp"
#include "hgcnn/rng.hpp"
#include "hgcnn/synthdata.hpp"

using hgcnn::AugmentationConfig;
using hgcnn::Hypergraph;
using hgcnn::HypergraphConfig;
using hgcnn::Matrix;
using hgcnn::PointSet;

namespace {

PointSet make_points(std::initializer_list<std::pair<double, double>> xy) {
    PointSet ps;
    ps.coords = Matrix(static_cast<long>(xy.size()), 2);
    ps.channels = Matrix(static_cast<long>(xy.size()), 1);
    ps.channel_layout = {"c0"};
    long i = 0;
    for (const auto& [x, y] : xy) {
        ps.coords(i, 0) = x;
        ps.coords(i, 1) = y;
        ps.channels(i, 0) = static_cast<double>(i);
        ++i;
    }
    return ps;
}

PointSet template_points() {
    PointSet ps;
    ps.coords = hgcnn::canonical_face_template();
    ps.channels = Matrix::Zero(ps.coords.rows(), 1);
    ps.channel_layout = {"c0"};
    return ps;
}

}  // namespace

TEST_CASE("midpoint augmentation of two points appends their average") {
    const PointSet ps = make_points({{0.0, 0.0}, {2.0, 0.0}});
    const PointSet out = hgcnn::augment_landmarks(ps, AugmentationConfig{1, 0.5});
    REQUIRE(out.n_points() == 3);
    // originals first, in order
    CHECK(out.coords(0, 0) == 0.0);
    CHECK(out.coords(1, 0) == 2.0);
    CHECK(out.coords(2, 0) == 1.0);
    CHECK(out.coords(2, 1) == 0.0);
    // channels are the exact parent mean
    CHECK(out.channels(2, 0) == 0.5);
}

TEST_CASE("coincident points produce no midpoints after deduplication") {
    const PointSet ps = make_points({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}});
    const PointSet out = hgcnn::augment_landmarks(ps, AugmentationConfig{2, 0.5});
    CHECK(out.n_points() == 3);
}

TEST_CASE("augmentation channel averages are exact for random parents") {
    hgcnn::Rng rng(13579);
    PointSet ps;
    ps.coords = Matrix(6, 2);
    ps.channels = Matrix(6, 3);
    ps.channel_layout = {"a", "b", "c"};
    for (int i = 0; i < 6; ++i) {
        ps.coords(i, 0) = rng.uniform(0.0, 100.0);
        ps.coords(i, 1) = rng.uniform(0.0, 100.0);
        for (int c = 0; c < 3; ++c) ps.channels(i, c) = rng.uniform(-1.0, 1.0);
    }
    const PointSet out = hgcnn::augment_landmarks(ps, AugmentationConfig{2, 1e-9});
    REQUIRE(out.n_points() > 6);
    for (int m = 6; m < out.n_points(); ++m) {
        // find the generating pair by matching the midpoint coordinates
        bool matched = false;
        for (int i = 0; i < 6 && !matched; ++i) {
            for (int j = i + 1; j < 6 && !matched; ++j) {
                const double mx = 0.5 * (ps.coords(i, 0) + ps.coords(j, 0));
                const double my = 0.5 * (ps.coords(i, 1) + ps.coords(j, 1));
                if (mx == out.coords(m, 0) && my == out.coords(m, 1)) {
                    matched = true;
                    for (int c = 0; c < 3; ++c)
                        CHECK(out.channels(m, c) == 0.5 * (ps.channels(i, c) + ps.channels(j, c)));
                }
            }
        }
        CHECK(matched);
    }
}

TEST_CASE("interpolation calibration finds the smallest sufficient k") {
    const PointSet tmpl = template_points();

    // reaching just the original count needs only k = 1
    const hgcnn::CalibrationResult tiny = hgcnn::calibrate_k_interp(tmpl, 68);
    CHECK(tiny.k_interp == 1);
    CHECK(tiny.achieved_count >= 68);

    // unreachable targets throw, carrying the best achievable count
    CHECK_THROWS_AS(hgcnn::calibrate_k_interp(tmpl, 100000), hgcnn::CalibrationError);
    try {
        hgcnn::calibrate_k_interp(tmpl, 100000);
    } catch (const hgcnn::CalibrationError& e) {
        CHECK(e.best_count > 68);
        CHECK(e.best_count < 100000);
    }
}

TEST_CASE("face template calibrates to 318 points with k = 6") {
    const PointSet tmpl = template_points();
    REQUIRE(tmpl.n_points() == 68);
    const hgcnn::CalibrationResult res = hgcnn::calibrate_k_interp(tmpl, 318);
    CHECK(res.k_interp == 6);
    CHECK(res.achieved_count == 318);
    const PointSet augmented = hgcnn::augment_landmarks(tmpl, AugmentationConfig{6, 0.5});
    CHECK(augmented.n_points() == 318);
}

TEST_CASE("nearest-neighbor hyperedges break distance ties toward lower indices") {
    // three collinear points: the middle one is equidistant from both ends
    const PointSet line = make_points({{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}});
    const Hypergraph hg = hgcnn::build_knn_hypergraph(line, HypergraphConfig{1});
    REQUIRE(hg.n_edges() == 3);
    CHECK(hg.hyperedges[0] == std::vector<int>{0, 1});
    CHECK(hg.hyperedges[1] == std::vector<int>{0, 1});
    CHECK(hg.hyperedges[2] == std::vector<int>{1, 2});
    CHECK(hg.is_uniform(2));
    for (double w : hg.edge_weights) CHECK(w == 1.0);

    // a right isosceles triangle realizes an exact tie at vertex 0
    const PointSet tri = make_points({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}});
    const Hypergraph hg2 = hgcnn::build_knn_hypergraph(tri, HypergraphConfig{1});
    CHECK(hg2.hyperedges[0] == std::vector<int>{0, 1});
    CHECK(hg2.hyperedges[1] == std::vector<int>{0, 1});
    CHECK(hg2.hyperedges[2] == std::vector<int>{0, 2});
}

TEST_CASE("k equal to n-1 produces the complete hyperedge at every vertex") {
    const PointSet ps = make_points({{0.0, 0.0}, {3.0, 1.0}, {1.0, 4.0}, {7.0, 2.0}});
    const Hypergraph hg = hgcnn::build_knn_hypergraph(ps, HypergraphConfig{3});
    REQUIRE(hg.n_edges() == 4);
    for (const auto& e : hg.hyperedges) CHECK(e == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("hyperedge construction rejects out-of-range neighborhood sizes") {
    const PointSet ps = make_points({{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}});
    CHECK_THROWS_AS(hgcnn::build_knn_hypergraph(ps, HypergraphConfig{0}), std::invalid_argument);
    CHECK_THROWS_AS(hgcnn::build_knn_hypergraph(ps, HypergraphConfig{3}), std::invalid_argument);
}

TEST_CASE("hyperedges from the augmented face template survive posture changes") {
    const PointSet augmented =
        hgcnn::augment_landmarks(template_points(), AugmentationConfig{6, 0.5});
    const Hypergraph base = hgcnn::build_knn_hypergraph(augmented, HypergraphConfig{13});
    CHECK(base.is_uniform(14));

    hgcnn::Rng rng(24680);
    const double cx = augmented.coords.col(0).mean();
    const double cy = augmented.coords.col(1).mean();
    for (int t = 0; t < 20; ++t) {
        const double ang = rng.uniform(-1.0, 1.0) * 15.0 * M_PI / 180.0;
        const double tx = rng.uniform(-8.0, 8.0);
        const double ty = rng.uniform(-8.0, 8.0);
        const double s = rng.uniform(0.95, 1.05);
        PointSet moved = augmented;
        for (int i = 0; i < moved.n_points(); ++i) {
            const double x = augmented.coords(i, 0) - cx;
            const double y = augmented.coords(i, 1) - cy;
            moved.coords(i, 0) = cx + s * (x * std::cos(ang) - y * std::sin(ang)) + tx;
            moved.coords(i, 1) = cy + s * (x * std::sin(ang) + y * std::cos(ang)) + ty;
        }
        const Hypergraph hg = hgcnn::build_knn_hypergraph(moved, HypergraphConfig{13});
        CHECK(hg.hyperedges == base.hyperedges);
    }
}

TEST_CASE("rgb to hsv conversion matches hand values") {
    PointSet ps;
    ps.coords = Matrix::Zero(4, 2);
    ps.channels = Matrix(4, 4);
    ps.channel_layout = {"r", "g", "b", "depth"};
    ps.channels << 1.0, 0.0, 0.0, 0.3,   // pure red
        0.5, 0.5, 0.5, 0.3,              // gray
        0.0, 1.0, 0.0, 0.3,              // pure green
        0.0, 0.0, 1.0, 0.3;              // pure blue
    const PointSet out = hgcnn::rgb_to_hsv_channels(ps);
    REQUIRE(out.channels.cols() == 7);
    const int h = out.channel_index("h");
    const int s = out.channel_index("s");
    const int v = out.channel_index("v");
    REQUIRE(h >= 0);
    REQUIRE(s >= 0);
    REQUIRE(v >= 0);

    CHECK(out.channels(0, h) == doctest::Approx(0.0));
    CHECK(out.channels(0, s) == doctest::Approx(1.0));
    CHECK(out.channels(0, v) == doctest::Approx(1.0));

    CHECK(out.channels(1, h) == doctest::Approx(0.0));
    CHECK(out.channels(1, s) == doctest::Approx(0.0));
    CHECK(out.channels(1, v) == doctest::Approx(0.5));

    CHECK(out.channels(2, h) == doctest::Approx(1.0 / 3.0));
    CHECK(out.channels(2, s) == doctest::Approx(1.0));
    CHECK(out.channels(2, v) == doctest::Approx(1.0));

    CHECK(out.channels(3, h) == doctest::Approx(2.0 / 3.0));
    CHECK(out.channels(3, s) == doctest::Approx(1.0));
    CHECK(out.channels(3, v) == doctest::Approx(1.0));

    // the original channels are preserved in front
    CHECK(out.channels(0, 0) == 1.0);
    CHECK(out.channel_index("depth") == 3);
}

TEST_CASE("sample ids expose the subject prefix") {
    hgcnn::LandmarkSample s;
    s.id = "s03_mask_002";
    s.label = "mask";
    CHECK(s.subject() == "s03");
    CHECK_FALSE(s.is_genuine());
    s.label = "genuine";
    CHECK(s.is_genuine());
}

TEST_CASE("landmark samples round-trip through the JSON-lines format") {
    const auto dir = std::filesystem::temp_directory_path() / "hgcnn_test_landmarks";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "samples.jsonl").string();

    hgcnn::GeneratorConfig cfg;
    cfg.n_subjects = 2;
    cfg.samples_per_subject_per_class = 1;
    const std::vector<hgcnn::LandmarkSample> samples = hgcnn::generate_samples(cfg);
    REQUIRE(samples.size() == 8);

    hgcnn::save_landmark_samples(path, samples);
    const hgcnn::LoadResult loaded = hgcnn::load_landmark_samples(path);
    CHECK(loaded.rejected == 0);
    REQUIRE(loaded.samples.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(loaded.samples[i].id == samples[i].id);
        CHECK(loaded.samples[i].label == samples[i].label);
        CHECK((loaded.samples[i].points.coords - samples[i].points.coords).cwiseAbs().maxCoeff() <
              1e-12);
        CHECK(
            (loaded.samples[i].points.channels - samples[i].points.channels).cwiseAbs().maxCoeff() <
            1e-12);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("malformed JSON lines are rejected and counted, not fatal") {
    const auto dir = std::filesystem::temp_directory_path() / "hgcnn_test_badlines";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "samples.jsonl").string();

    hgcnn::GeneratorConfig cfg;
    cfg.n_subjects = 1;
    cfg.samples_per_subject_per_class = 1;
    const std::vector<hgcnn::LandmarkSample> samples = hgcnn::generate_samples(cfg);
    hgcnn::save_landmark_samples(path, samples);
    {
        std::ofstream out(path, std::ios::app);
        out << "this is not json\n";
        out << R"({"id":"x_y_z","label":"martian","points":[]})" << "\n";
    }
    const hgcnn::LoadResult loaded = hgcnn::load_landmark_samples(path);
    CHECK(loaded.samples.size() == samples.size());
    CHECK(loaded.rejected == 2);
    std::filesystem::remove_all(dir);
}
