#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "hgcnn/hypergraph.hpp"
#include "hgcnn/linalg.hpp"

namespace hgcnn {

/// A set of landmark points: one row per point in both matrices. Coordinates
/// are 2D pixel positions (3D allowed for generic use); channels hold the
/// per-point signals named by channel_layout (e.g. "r","g","b","depth").
struct PointSet {
    Matrix coords;                            // n x dim
    Matrix channels;                          // n x C
    std::vector<std::string> channel_layout;  // size C

    int n_points() const { return static_cast<int>(coords.rows()); }

    void validate() const;

    /// Index of a named channel, -1 when absent.
    int channel_index(const std::string& name) const;
};

struct AugmentationConfig {
    int k_interp = 1;
    double dedup_tolerance = 0.5;  // pixels; midpoints of adjacent integer-pixel
                                   // landmarks collide below this scale
};

struct HypergraphConfig {
    int k_nn = 13;  // hyperedge cardinality is k_nn + 1; calibrated jointly
                    // with the face template so no neighbor rank near the
                    // cutoff is a tie (midpoint augmentation makes both
                    // parents of a midpoint exactly equidistant from it,
                    // so an unlucky cutoff would flip under rotation)
};

/// Midpoint augmentation: for every point and each of its k_interp nearest
/// neighbors (squared Euclidean metric on coordinates), the pair midpoint is
/// appended with channels averaged from the parents. Originals keep their
/// order and come first; midpoints follow sorted by generating pair (i,j),
/// i<j, skipping any midpoint strictly within dedup_tolerance of an earlier
/// kept point.
PointSet augment_landmarks(const PointSet& pts, const AugmentationConfig& cfg);

struct CalibrationResult {
    int k_interp = 0;
    int achieved_count = 0;
};

struct CalibrationError : std::runtime_error {
    CalibrationError(const std::string& msg, int best) : std::runtime_error(msg), best_count(best) {}
    int best_count;
};

/// Smallest k_interp in [1,10] whose augmented point count reaches
/// target_total, together with the count it achieves. Throws CalibrationError
/// (carrying the best achieved count) when no k in range reaches the target.
CalibrationResult calibrate_k_interp(const PointSet& tmpl, int target_total,
                                     double dedup_tolerance = 0.5);

/// One hyperedge per point: {i} + the k_nn nearest neighbors of i under
/// squared Euclidean distance, ties broken toward the smaller vertex index.
/// All weights 1; the result is (k_nn+1)-uniform.
Hypergraph build_knn_hypergraph(const PointSet& pts, const HypergraphConfig& cfg);

/// Appends H,S,V channels in [0,1] derived from the R,G,B channels by the
/// hexagonal max/min conversion (hue scaled from degrees to [0,1)).
/// Achromatic points get H=0, S=0.
PointSet rgb_to_hsv_channels(const PointSet& pts);

/// One landmark sample of the JSON-lines dataset format.
struct LandmarkSample {
    std::string id;
    std::string label;  // genuine | print | replay | mask
    PointSet points;    // layout r,g,b,depth

    /// Subject tag: the id prefix up to the first '_'.
    std::string subject() const;
    bool is_genuine() const { return label == "genuine"; }
};

struct LoadResult {
    std::vector<LandmarkSample> samples;
    int rejected = 0;  // malformed lines skipped with a warning
};

/// Reads JSON-lines samples: one object per line with fields id, label and
/// points [{"xy":[x,y],"rgb":[r,g,b],"depth":d}, ...]. Lines that fail
/// validation (unknown label, short point list, out-of-range values) are
/// rejected and counted, not fatal.
LoadResult load_landmark_samples(const std::string& path, int min_points = 68);

void save_landmark_samples(const std::string& path, const std::vector<LandmarkSample>& samples);

}  // namespace hgcnn
