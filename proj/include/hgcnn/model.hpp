#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgcnn/landmarks.hpp"
#include "hgcnn/metrics.hpp"
#include "hgcnn/nn.hpp"

namespace hgcnn {

/// Shape of the two-branch network and of the landmark-to-graph pipeline.
struct ArchitectureConfig {
    std::vector<int> color_widths = {64, 128};
    std::vector<int> depth_widths = {64, 128};
    bool use_depth_branch = true;
    std::string concat_scheme = "all";  // "all" | "duplicate"
    std::vector<int> mlp_widths = {256, 64, 2};
    std::string graph_mode = "hypergraph";  // "hypergraph" | "simple_complete" | "none"
    int chebyshev_K = 2;
    // Channels fed to the network: "rgb" or "rgb+hsv" for the color branch,
    // with "+depth" appended iff the depth branch is enabled.
    std::string input_channels = "rgb+depth";
    bool use_batchnorm = true;
    int k_interp = 6;  // midpoint-augmentation depth; 6 takes the 68-point
                       // face template to exactly 318 points
    int k_nn = 13;     // hyperedge = point + its 13 nearest neighbors

    void validate() const;
    bool wants_hsv() const;
    int color_input_dim() const;  // 3, or 6 with HSV appended
    int concat_dim() const;       // width of the pooled feature vector

    nlohmann::json to_json() const;
    static ArchitectureConfig from_json(const nlohmann::json& j);
};

/// Ablation variants: 1 = no graph structure (per-point MLP), 2 = color
/// branch only, 3 = pairwise complete graph instead of the hypergraph,
/// 4 = the full model.
ArchitectureConfig make_model_config(int model_id);

/// One network-ready sample: augmented per-vertex features plus a Laplacian
/// shared (via the pointer) with every sample of identical graph structure.
struct ModelSample {
    std::string id;
    std::string subject;
    std::string attack_type;  // empty for genuine samples
    int label = 0;            // 1 = genuine, 0 = attack
    Matrix color;             // n x C color-branch input
    Matrix depth;             // n x 1 depth-branch input
    std::shared_ptr<const Matrix> laplacian;  // null when graph_mode == "none"
    int n_original = 0;       // leading rows that are original landmarks

    bool is_genuine() const { return label == 1; }
};

/// Runs the landmark pipeline for every raw sample: midpoint augmentation,
/// channel selection (optionally appending HSV), and Laplacian construction
/// per graph_mode. Samples whose graphs coincide share one matrix.
std::vector<ModelSample> prepare_samples(const std::vector<LandmarkSample>& raw,
                                         const ArchitectureConfig& cfg);

struct SplitResult {
    std::vector<int> train, dev, test;  // indices into the sample vector
    nlohmann::json manifest;
};

/// Deterministic dataset splits (samples are ordered by id internally):
///  - "subjects":     subject-disjoint 50/20/30 block split over sorted
///                    subject ids
///  - "attack-types": mask attacks train-side, print+replay test-side,
///                    genuine samples alternating sides by series position;
///                    every 5th train-side sample is held out as dev
///  - "posture":      per-(subject,class) series position 50/20/30, so the
///                    same faces appear on both sides under different postures
SplitResult split_samples(const std::vector<ModelSample>& samples, const std::string& protocol);

struct HgcnnModel {
    ArchitectureConfig cfg;
    std::vector<HyperConvLayer> color_layers;
    std::vector<HyperConvLayer> depth_layers;
    std::vector<DenseParam> mlp;
};

/// Builds a model with Xavier-initialized dense maps (draw order: color
/// branch, depth branch, MLP head) and unit filter coefficients.
HgcnnModel make_model(const ArchitectureConfig& cfg, std::uint64_t seed);

void zero_grad(HgcnnModel& model);

/// Learnable parameters in fixed order (color, depth, MLP). Running BN
/// statistics are excluded: they are state, not optimized parameters.
std::vector<ParamRef> collect_params(HgcnnModel& model);

/// Every tensor that must survive serialization, including BN running stats.
struct TensorRef {
    std::string name;
    double* data = nullptr;
    long rows = 0, cols = 0;

    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

std::vector<TensorRef> collect_tensors(HgcnnModel& model);

/// Forward state kept for the backward pass of the same batch.
struct ForwardCache {
    bool valid = false;
    // [branch][layer][sample]: inputs fed to that conv layer
    std::vector<std::vector<std::vector<Matrix>>> branch_inputs;
    std::vector<std::vector<HyperConvCache>> branch_caches;
    Matrix pooled;                // batch x concat_dim
    std::vector<Matrix> mlp_in;   // input of each dense layer
    std::vector<Matrix> mlp_pre;  // pre-activation of each dense layer
};

/// Batch forward: per branch conv1 -> conv2, concatenation of all conv
/// outputs across layers and branches, mean-pooling over vertices, MLP head
/// (ReLU on hidden layers, linear final layer). Returns batch x 2 logits.
Matrix model_forward(HgcnnModel& model, const std::vector<ModelSample>& samples,
                     const std::vector<int>& batch, bool training, ForwardCache* cache);

/// Accumulates parameter gradients for the batch of the matching forward.
void model_backward(HgcnnModel& model, const std::vector<ModelSample>& samples,
                    const std::vector<int>& batch, const ForwardCache& cache,
                    const Matrix& upstream);

/// Per-layer vertex features of one sample in inference mode: entry 0 is the
/// raw input (color columns, then depth), entry i > 0 concatenates the branch
/// outputs of conv layer i. Feeds the feature-distance export.
std::vector<Matrix> layer_features(HgcnnModel& model, const ModelSample& sample);

struct TrainConfig {
    int max_epochs = 60;
    int batch_size = 50;
    double lr = 1e-3;
    double lr_decay = 0.1;  // multiplier applied from the halfway epoch on
    double clip_norm = 5.0;
    int patience = 10;           // early-stop epochs without dev-ACER improvement
    double dev_threshold = 0.5;  // fixed accept threshold for the dev metrics
    std::uint64_t seed = 7;

    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double dev_acc = 0.0;
    double dev_acer = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_dev_acer = 1.0;
};

/// Adam training with per-epoch shuffling, step lr decay, global-norm
/// clipping, and early stopping on dev ACER; the model is left holding the
/// parameters of its best dev epoch (the most recent one when several tie,
/// since longer training sharpens the scores at equal dev error).
TrainResult train_model(HgcnnModel& model, const std::vector<ModelSample>& samples,
                        const SplitResult& split, const TrainConfig& tc);

/// CSV rendering of the log: "epoch,train_loss,dev_acc,dev_acer".
std::string train_log_csv(const std::vector<EpochLog>& log);

/// Inference scores: softmax probability of the genuine class, with sample
/// identity carried through for the metric suite.
ScoreSet predict(HgcnnModel& model, const std::vector<ModelSample>& samples,
                 const std::vector<int>& indices);
ScoreSet predict_all(HgcnnModel& model, const std::vector<ModelSample>& samples);

/// Versioned checkpoint container "hgcnn-ckpt v1": architecture JSON, tensor
/// manifest (name/shape/offset), raw little-endian float64 payload. The
/// round trip restores bitwise-identical behavior.
void save_checkpoint(const std::string& path, HgcnnModel& model);
HgcnnModel load_checkpoint(const std::string& path);

}  // namespace hgcnn
