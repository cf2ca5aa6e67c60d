#include "hgcnn/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <utility>

#include <json.hpp>

namespace hgcnn {

using nlohmann::json;

void PointSet::validate() const {
    if (coords.rows() != channels.rows())
        throw std::invalid_argument("point set: coords and channels disagree on point count");
    if (static_cast<int>(channel_layout.size()) != channels.cols())
        throw std::invalid_argument("point set: channel layout does not match channel count");
    if (coords.cols() != 2 && coords.cols() != 3)
        throw std::invalid_argument("point set: coordinates must be 2D or 3D");
    if (!coords.allFinite() || !channels.allFinite())
        throw std::invalid_argument("point set: non-finite coordinate or channel value");
}

int PointSet::channel_index(const std::string& name) const {
    for (std::size_t i = 0; i < channel_layout.size(); ++i)
        if (channel_layout[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

/// Indices of the k nearest neighbors of point i (squared Euclidean metric),
/// ties broken toward the smaller index. Self is excluded.
std::vector<int> k_nearest(const Matrix& coords, int i, int k) {
    const int n = static_cast<int>(coords.rows());
    std::vector<std::pair<double, int>> dist;
    dist.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        dist.emplace_back((coords.row(i) - coords.row(j)).squaredNorm(), j);
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    std::vector<int> out(k);
    for (int t = 0; t < k; ++t) out[t] = dist[t].second;
    return out;
}

}  // namespace

PointSet augment_landmarks(const PointSet& pts, const AugmentationConfig& cfg) {
    pts.validate();
    const int n = pts.n_points();
    if (n < 2) throw std::invalid_argument("augment_landmarks: need at least 2 points");
    if (cfg.k_interp < 1) throw std::invalid_argument("augment_landmarks: k_interp must be >= 1");
    if (cfg.dedup_tolerance < 0.0)
        throw std::invalid_argument("augment_landmarks: dedup_tolerance must be >= 0");
    const int k = std::min(cfg.k_interp, n - 1);

    std::set<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j : k_nearest(pts.coords, i, k))
            pairs.insert({std::min(i, j), std::max(i, j)});

    const double tol2 = cfg.dedup_tolerance * cfg.dedup_tolerance;
    std::vector<Eigen::RowVectorXd> mid_coords;
    std::vector<Eigen::RowVectorXd> mid_channels;
    for (const auto& [i, j] : pairs) {
        Eigen::RowVectorXd c = 0.5 * (pts.coords.row(i) + pts.coords.row(j));
        bool dup = false;
        for (int p = 0; p < n && !dup; ++p)
            dup = (c - pts.coords.row(p)).squaredNorm() < tol2;
        for (const auto& m : mid_coords) {
            if (dup) break;
            dup = (c - m).squaredNorm() < tol2;
        }
        if (dup) continue;
        mid_coords.push_back(std::move(c));
        mid_channels.push_back(0.5 * (pts.channels.row(i) + pts.channels.row(j)));
    }

    PointSet out;
    out.channel_layout = pts.channel_layout;
    const int total = n + static_cast<int>(mid_coords.size());
    out.coords = Matrix(total, pts.coords.cols());
    out.channels = Matrix(total, pts.channels.cols());
    out.coords.topRows(n) = pts.coords;
    out.channels.topRows(n) = pts.channels;
    for (std::size_t m = 0; m < mid_coords.size(); ++m) {
        out.coords.row(n + m) = mid_coords[m];
        out.channels.row(n + m) = mid_channels[m];
    }
    return out;
}

CalibrationResult calibrate_k_interp(const PointSet& tmpl, int target_total,
                                     double dedup_tolerance) {
    int best = 0;
    for (int k = 1; k <= 10; ++k) {
        AugmentationConfig cfg;
        cfg.k_interp = k;
        cfg.dedup_tolerance = dedup_tolerance;
        const int count = augment_landmarks(tmpl, cfg).n_points();
        best = std::max(best, count);
        if (count >= target_total) return {k, count};
    }
    throw CalibrationError("calibrate_k_interp: no k in [1,10] reaches " +
                               std::to_string(target_total) + " points (best " +
                               std::to_string(best) + ")",
                           best);
}

Hypergraph build_knn_hypergraph(const PointSet& pts, const HypergraphConfig& cfg) {
    pts.validate();
    const int n = pts.n_points();
    if (cfg.k_nn < 1) throw std::invalid_argument("build_knn_hypergraph: k_nn must be >= 1");
    if (n <= cfg.k_nn)
        throw std::invalid_argument("build_knn_hypergraph: need more points than k_nn");

    std::vector<std::vector<int>> edges;
    edges.reserve(n);
    for (int i = 0; i < n; ++i) {
        std::vector<int> edge = k_nearest(pts.coords, i, cfg.k_nn);
        edge.push_back(i);
        edges.push_back(std::move(edge));
    }
    return make_hypergraph(n, std::move(edges));
}

PointSet rgb_to_hsv_channels(const PointSet& pts) {
    pts.validate();
    const int ir = pts.channel_index("r");
    const int ig = pts.channel_index("g");
    const int ib = pts.channel_index("b");
    if (ir < 0 || ig < 0 || ib < 0)
        throw std::invalid_argument("rgb_to_hsv_channels: point set lacks r,g,b channels");

    PointSet out = pts;
    const int n = pts.n_points();
    const int c0 = static_cast<int>(pts.channel_layout.size());
    out.channel_layout.insert(out.channel_layout.end(), {"h", "s", "v"});
    out.channels.conservativeResize(n, c0 + 3);
    for (int i = 0; i < n; ++i) {
        const double r = pts.channels(i, ir);
        const double g = pts.channels(i, ig);
        const double b = pts.channels(i, ib);
        const double v = std::max({r, g, b});
        const double delta = v - std::min({r, g, b});
        double h = 0.0;
        if (delta > 0.0) {
            if (v == r)
                h = (g - b) / delta;
            else if (v == g)
                h = (b - r) / delta + 2.0;
            else
                h = (r - g) / delta + 4.0;
            h /= 6.0;
            if (h < 0.0) h += 1.0;
        }
        out.channels(i, c0 + 0) = h;
        out.channels(i, c0 + 1) = v > 0.0 ? delta / v : 0.0;
        out.channels(i, c0 + 2) = v;
    }
    return out;
}

std::string LandmarkSample::subject() const {
    const auto pos = id.find('_');
    return pos == std::string::npos ? id : id.substr(0, pos);
}

namespace {

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

bool parse_sample(const json& j, int min_points, LandmarkSample& out) {
    if (!j.is_object() || !j.contains("id") || !j.contains("label") || !j.contains("points"))
        return false;
    if (!j["id"].is_string() || !j["label"].is_string() || !j["points"].is_array()) return false;
    out.id = j["id"].get<std::string>();
    out.label = j["label"].get<std::string>();
    if (out.label != "genuine" && out.label != "print" && out.label != "replay" &&
        out.label != "mask")
        return false;
    const auto& points = j["points"];
    const int n = static_cast<int>(points.size());
    if (n < min_points) return false;

    out.points.channel_layout = {"r", "g", "b", "depth"};
    out.points.coords = Matrix(n, 2);
    out.points.channels = Matrix(n, 4);
    for (int i = 0; i < n; ++i) {
        const auto& p = points[i];
        if (!p.is_object() || !p.contains("xy") || !p.contains("rgb") || !p.contains("depth"))
            return false;
        const auto& xy = p["xy"];
        const auto& rgb = p["rgb"];
        if (!xy.is_array() || xy.size() != 2 || !rgb.is_array() || rgb.size() != 3) return false;
        for (int d = 0; d < 2; ++d) {
            const double v = xy[d].get<double>();
            if (!std::isfinite(v)) return false;
            out.points.coords(i, d) = v;
        }
        for (int c = 0; c < 3; ++c) {
            const double v = rgb[c].get<double>();
            if (!in_unit(v)) return false;
            out.points.channels(i, c) = v;
        }
        const double depth = p["depth"].get<double>();
        if (!in_unit(depth)) return false;
        out.points.channels(i, 3) = depth;
    }
    return true;
}

}  // namespace

LoadResult load_landmark_samples(const std::string& path, int min_points) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    LoadResult result;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        LandmarkSample sample;
        bool ok = false;
        try {
            ok = parse_sample(json::parse(line), min_points, sample);
        } catch (const json::exception&) {
            ok = false;
        }
        if (!ok) {
            ++result.rejected;
            std::cerr << "warning: rejecting malformed sample at " << path << ":" << lineno
                      << "\n";
            continue;
        }
        result.samples.push_back(std::move(sample));
    }
    return result;
}

void save_landmark_samples(const std::string& path, const std::vector<LandmarkSample>& samples) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char buf[64];
    const auto num = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& s : samples) {
        out << "{\"id\":" << json(s.id) << ",\"label\":\"" << s.label << "\",\"points\":[";
        for (int i = 0; i < s.points.n_points(); ++i) {
            if (i) out << ',';
            out << "{\"xy\":[" << num(s.points.coords(i, 0)) << ',' << num(s.points.coords(i, 1))
                << "],\"rgb\":[" << num(s.points.channels(i, 0)) << ','
                << num(s.points.channels(i, 1)) << ',' << num(s.points.channels(i, 2))
                << "],\"depth\":" << num(s.points.channels(i, 3)) << '}';
        }
        out << "]}\n";
    }
}

}  // namespace hgcnn
