#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgcnn/landmarks.hpp"
#include "hgcnn/linalg.hpp"

namespace hgcnn {

/// Synthetic RGB-D benchmark generator. Classes are constructed so that the
/// depth channel separates {genuine, mask} from {print, replay} (attacks on
/// flat media are planar) while the mask class matches genuine depth and
/// differs from genuine skin only in the spatial statistics of its texture.
struct GeneratorConfig {
    int n_subjects = 10;
    int samples_per_subject_per_class = 6;
    std::uint64_t seed = 7;

    // Per-sample capture posture: an in-plane rotation (yaw analogue),
    // translation and uniform scale applied to the canonical layout.
    double yaw_max_deg = 15.0;
    double translation_max = 8.0;
    double scale_min = 0.95;
    double scale_max = 1.05;

    // Per-class signal levels. Print attacks reproduce the subject's colors
    // at genuine noise level (a photo is a faithful color copy), replay adds
    // strong high-frequency color noise, masks swap the subject texture for
    // a shared mask texture whose per-point marginals match genuine skin.
    double depth_noise = 0.01;
    double genuine_color_noise = 0.02;
    double replay_color_noise = 0.12;
    double mask_color_noise = 0.056;
    double mask_color_amp = 0.02;
    double print_tilt_max = 5e-6;  // planar depth tilt of flat attack media

    void validate() const;  // throws std::invalid_argument on bad fields
};

/// The fixed 68-point face layout every sample is a similarity transform of.
/// Coordinates are pixels in a ~128x128 box; the layout is deliberately
/// asymmetric at the sub-pixel level so nearest-neighbor ranks and midpoint
/// dedup decisions have stable margins under the posture transforms above.
Matrix canonical_face_template();

/// All samples for one config, in generation order (subjects outer, classes
/// genuine/print/replay/mask, then sample index). Single RNG stream, fixed
/// draw order:
///   1. per subject: 8 geometry draws (dome base, amplitude, center x/y,
///      radius x/y, nose bump amplitude/radius), then 11 color-field draws
///      (base r/g/b, amplitude r/g/b, frequency, direction, phase r/g/b);
///   2. per sample: 4 posture draws (rotation, translation x/y, scale), then
///      class draws (print/replay: plane base + 2 tilts; mask: 3 base colors
///      + 3 phases), then per point: depth noise (genuine/mask only) followed
///      by r/g/b noise.
std::vector<LandmarkSample> generate_samples(const GeneratorConfig& cfg);

/// Manifest describing a generated dataset (subjects, classes, counts, seed).
nlohmann::json dataset_manifest(const GeneratorConfig& cfg);

/// Writes samples.jsonl + manifest.json into out_dir (created if missing);
/// returns the manifest. Byte-identical output for identical configs.
nlohmann::json generate(const GeneratorConfig& cfg, const std::string& out_dir);

}  // namespace hgcnn
