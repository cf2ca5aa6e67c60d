#include "hgcnn/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hgcnn/parallel.hpp"

namespace hgcnn {

namespace {

const std::vector<std::string> kGraphModes = {"hypergraph", "simple_complete", "none"};
const std::vector<std::string> kConcatSchemes = {"all", "duplicate"};
const std::vector<std::string> kInputChannels = {"rgb", "rgb+hsv", "rgb+depth", "rgb+hsv+depth"};

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

void require_positive(const std::vector<int>& widths, const char* what) {
    if (widths.empty()) throw std::invalid_argument(std::string(what) + " must not be empty");
    for (int w : widths)
        if (w < 1) throw std::invalid_argument(std::string(what) + " must be positive");
}

}  // namespace

void ArchitectureConfig::validate() const {
    require_positive(color_widths, "architecture config: color_widths");
    require_positive(depth_widths, "architecture config: depth_widths");
    require_positive(mlp_widths, "architecture config: mlp_widths");
    if (mlp_widths.back() != 2)
        throw std::invalid_argument("architecture config: the final MLP width must be 2");
    if (use_depth_branch && color_widths.size() != depth_widths.size())
        throw std::invalid_argument(
            "architecture config: the branches must have the same number of conv layers");
    if (!contains(kConcatSchemes, concat_scheme))
        throw std::invalid_argument("architecture config: unknown concat_scheme '" + concat_scheme +
                                    "'");
    if (!contains(kGraphModes, graph_mode))
        throw std::invalid_argument("architecture config: unknown graph_mode '" + graph_mode + "'");
    if (chebyshev_K < 1)
        throw std::invalid_argument("architecture config: chebyshev_K must be >= 1");
    if (graph_mode == "none" && chebyshev_K != 1)
        throw std::invalid_argument("architecture config: graph_mode 'none' requires chebyshev_K = 1");
    if (!contains(kInputChannels, input_channels))
        throw std::invalid_argument("architecture config: unknown input_channels '" +
                                    input_channels + "'");
    const bool wants_depth = input_channels.find("+depth") != std::string::npos;
    if (wants_depth != use_depth_branch)
        throw std::invalid_argument(
            "architecture config: input_channels and use_depth_branch disagree");
    if (k_interp < 1 || k_interp > 10)
        throw std::invalid_argument("architecture config: k_interp must lie in [1, 10]");
    if (k_nn < 1) throw std::invalid_argument("architecture config: k_nn must be >= 1");
}

bool ArchitectureConfig::wants_hsv() const {
    return input_channels.rfind("rgb+hsv", 0) == 0;
}

int ArchitectureConfig::color_input_dim() const { return wants_hsv() ? 6 : 3; }

int ArchitectureConfig::concat_dim() const {
    int d = 0;
    for (int w : color_widths) d += w;
    if (use_depth_branch)
        for (int w : depth_widths) d += w;
    return concat_scheme == "duplicate" ? 2 * d : d;
}

nlohmann::json ArchitectureConfig::to_json() const {
    return nlohmann::json{{"color_widths", color_widths},
                          {"depth_widths", depth_widths},
                          {"use_depth_branch", use_depth_branch},
                          {"concat_scheme", concat_scheme},
                          {"mlp_widths", mlp_widths},
                          {"graph_mode", graph_mode},
                          {"chebyshev_K", chebyshev_K},
                          {"input_channels", input_channels},
                          {"use_batchnorm", use_batchnorm},
                          {"k_interp", k_interp},
                          {"k_nn", k_nn}};
}

ArchitectureConfig ArchitectureConfig::from_json(const nlohmann::json& j) {
    ArchitectureConfig cfg;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "color_widths") cfg.color_widths = value.get<std::vector<int>>();
            else if (key == "depth_widths") cfg.depth_widths = value.get<std::vector<int>>();
            else if (key == "use_depth_branch") cfg.use_depth_branch = value.get<bool>();
            else if (key == "concat_scheme") cfg.concat_scheme = value.get<std::string>();
            else if (key == "mlp_widths") cfg.mlp_widths = value.get<std::vector<int>>();
            else if (key == "graph_mode") cfg.graph_mode = value.get<std::string>();
            else if (key == "chebyshev_K") cfg.chebyshev_K = value.get<int>();
            else if (key == "input_channels") cfg.input_channels = value.get<std::string>();
            else if (key == "use_batchnorm") cfg.use_batchnorm = value.get<bool>();
            else if (key == "k_interp") cfg.k_interp = value.get<int>();
            else if (key == "k_nn") cfg.k_nn = value.get<int>();
            else
                throw std::invalid_argument("architecture config: unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("architecture config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ArchitectureConfig make_model_config(int model_id) {
    ArchitectureConfig cfg;
    switch (model_id) {
        case 1:  // no graph structure: per-point network
            cfg.graph_mode = "none";
            cfg.chebyshev_K = 1;
            break;
        case 2:  // color branch only
            cfg.use_depth_branch = false;
            cfg.input_channels = "rgb";
            break;
        case 3:  // pairwise complete graph instead of the hypergraph
            cfg.graph_mode = "simple_complete";
            break;
        case 4:  // full model
            break;
        default:
            throw std::invalid_argument("model id must be 1..4");
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// sample preparation

namespace {

std::string incidence_key(const Hypergraph& hg) {
    std::string key = std::to_string(hg.n_vertices);
    for (const auto& edge : hg.hyperedges) {
        key += ';';
        for (int v : edge) {
            key += std::to_string(v);
            key += ',';
        }
    }
    return key;
}

std::string coords_key(const Matrix& coords) {
    return std::string(reinterpret_cast<const char*>(coords.data()),
                       sizeof(double) * static_cast<std::size_t>(coords.size()));
}

}  // namespace

std::vector<ModelSample> prepare_samples(const std::vector<LandmarkSample>& raw,
                                         const ArchitectureConfig& cfg) {
    cfg.validate();
    const AugmentationConfig aug{cfg.k_interp, 0.5};
    const HypergraphConfig hgc{cfg.k_nn};
    std::map<std::string, std::shared_ptr<const Matrix>> shared;

    std::vector<ModelSample> out;
    out.reserve(raw.size());
    for (const LandmarkSample& lm : raw) {
        PointSet pts = augment_landmarks(lm.points, aug);
        if (cfg.wants_hsv()) pts = rgb_to_hsv_channels(pts);

        std::vector<std::string> color_names = {"r", "g", "b"};
        if (cfg.wants_hsv()) color_names.insert(color_names.end(), {"h", "s", "v"});
        const int n = pts.n_points();

        ModelSample ms;
        ms.id = lm.id;
        ms.subject = lm.subject();
        ms.label = lm.is_genuine() ? 1 : 0;
        ms.attack_type = lm.is_genuine() ? "" : lm.label;
        ms.n_original = lm.points.n_points();
        ms.color = Matrix(n, static_cast<int>(color_names.size()));
        for (std::size_t c = 0; c < color_names.size(); ++c) {
            const int idx = pts.channel_index(color_names[c]);
            if (idx < 0)
                throw std::invalid_argument("prepare_samples: sample '" + lm.id +
                                            "' lacks channel '" + color_names[c] + "'");
            ms.color.col(static_cast<int>(c)) = pts.channels.col(idx);
        }
        const int didx = pts.channel_index("depth");
        if (didx < 0)
            throw std::invalid_argument("prepare_samples: sample '" + lm.id +
                                        "' lacks channel 'depth'");
        ms.depth = pts.channels.col(didx);

        // Per-sample mean centering of the native sensor channels: absolute
        // levels encode capture conditions and subject pigmentation, which a
        // subject-disjoint classifier must not key on; the class evidence is
        // in the spatial structure around each sample's own mean. Derived
        // HSV channels stay as computed from the raw RGB.
        for (int c = 0; c < 3; ++c) ms.color.col(c).array() -= ms.color.col(c).mean();
        ms.depth.array() -= ms.depth.mean();

        if (cfg.graph_mode == "hypergraph") {
            const Hypergraph hg = build_knn_hypergraph(pts, hgc);
            const std::string key = incidence_key(hg);
            auto it = shared.find(key);
            if (it == shared.end()) {
                auto lap = std::make_shared<Matrix>(normalized_laplacian(hg).matrix);
                it = shared.emplace(key, std::move(lap)).first;
            }
            ms.laplacian = it->second;
        } else if (cfg.graph_mode == "simple_complete") {
            const std::string key = coords_key(pts.coords);
            auto it = shared.find(key);
            if (it == shared.end()) {
                std::vector<Vector> coords(n);
                for (int i = 0; i < n; ++i) coords[i] = pts.coords.row(i).transpose();
                auto lap =
                    std::make_shared<Matrix>(simple_complete_graph_laplacian(coords).matrix);
                it = shared.emplace(key, std::move(lap)).first;
            }
            ms.laplacian = it->second;
        }
        out.push_back(std::move(ms));
    }
    return out;
}

// ---------------------------------------------------------------------------
// dataset splits

namespace {

struct SplitBuckets {
    std::vector<int> train, dev, test;
};

// 50/20/30 block rule shared by the subject and posture splits: item p of a
// sorted series of c falls in train/dev/test by the decimal band of p*10/c.
int band_of(int p, int c) {
    const int digit = static_cast<int>((static_cast<long>(p) * 10) / c);
    if (digit < 5) return 0;
    if (digit < 7) return 1;
    return 2;
}

nlohmann::json split_stats(const std::vector<ModelSample>& samples, const std::vector<int>& idx) {
    long genuine = 0;
    std::map<std::string, long> attacks;
    std::set<std::string> subjects;
    for (int i : idx) {
        if (samples[i].is_genuine())
            ++genuine;
        else
            ++attacks[samples[i].attack_type];
        subjects.insert(samples[i].subject);
    }
    return nlohmann::json{{"size", idx.size()},
                          {"genuine", genuine},
                          {"attacks", attacks},
                          {"subjects", subjects}};
}

void require_both_classes(const std::vector<ModelSample>& samples, const std::vector<int>& idx,
                          const char* which) {
    bool genuine = false, attack = false;
    for (int i : idx) (samples[i].is_genuine() ? genuine : attack) = true;
    if (!genuine || !attack)
        throw std::runtime_error(std::string("split: the ") + which +
                                 " split needs both genuine and attack samples");
}

}  // namespace

SplitResult split_samples(const std::vector<ModelSample>& samples, const std::string& protocol) {
    if (samples.empty()) throw std::invalid_argument("split: no samples");
    std::vector<int> order(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return samples[a].id < samples[b].id; });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (samples[order[i - 1]].id == samples[order[i]].id)
            throw std::invalid_argument("split: duplicate sample id '" + samples[order[i]].id +
                                        "'");

    auto series_tag = [&](int i) {
        return samples[i].subject + "|" +
               (samples[i].is_genuine() ? std::string("genuine") : samples[i].attack_type);
    };

    SplitBuckets b;
    if (protocol == "subjects") {
        std::set<std::string> subject_set;
        for (const ModelSample& s : samples) subject_set.insert(s.subject);
        const std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
        const int S = static_cast<int>(subjects.size());
        std::map<std::string, int> band;
        for (int s = 0; s < S; ++s) band[subjects[s]] = band_of(s, S);
        for (int i : order) {
            const int which = band[samples[i].subject];
            (which == 0 ? b.train : which == 1 ? b.dev : b.test).push_back(i);
        }
    } else if (protocol == "attack-types") {
        // mask attacks and alternating genuine samples on the training side;
        // print/replay and the remaining genuine samples form the test side
        std::map<std::string, int> genuine_pos;
        std::vector<int> train_side;
        for (int i : order) {
            const ModelSample& s = samples[i];
            if (s.is_genuine())
                (genuine_pos[s.subject]++ % 2 == 0 ? train_side : b.test).push_back(i);
            else if (s.attack_type == "mask")
                train_side.push_back(i);
            else
                b.test.push_back(i);
        }
        for (std::size_t i = 0; i < train_side.size(); ++i)
            (i % 5 == 0 ? b.dev : b.train).push_back(train_side[i]);
    } else if (protocol == "posture") {
        std::map<std::string, int> counts, pos;
        for (int i : order) ++counts[series_tag(i)];
        for (int i : order) {
            const std::string tag = series_tag(i);
            const int which = band_of(pos[tag]++, counts[tag]);
            (which == 0 ? b.train : which == 1 ? b.dev : b.test).push_back(i);
        }
    } else {
        throw std::invalid_argument("split: unknown protocol '" + protocol + "'");
    }

    for (const auto& [idx, name] :
         {std::pair{&b.train, "train"}, {&b.dev, "dev"}, {&b.test, "test"}})
        if (idx->empty())
            throw std::runtime_error("split: protocol '" + protocol + "' produced an empty " +
                                     name + " split");
    require_both_classes(samples, b.train, "train");
    require_both_classes(samples, b.dev, "dev");
    if (protocol == "subjects") {
        std::set<std::string> train_subj, other;
        for (int i : b.train) train_subj.insert(samples[i].subject);
        for (int i : b.dev) other.insert(samples[i].subject);
        for (int i : b.test) other.insert(samples[i].subject);
        for (const std::string& s : other)
            if (train_subj.count(s))
                throw std::runtime_error("split: overlapping subjects across splits");
    }

    SplitResult r;
    r.train = std::move(b.train);
    r.dev = std::move(b.dev);
    r.test = std::move(b.test);
    r.manifest = nlohmann::json{{"protocol", protocol},
                                {"train", split_stats(samples, r.train)},
                                {"dev", split_stats(samples, r.dev)},
                                {"test", split_stats(samples, r.test)}};
    return r;
}

// ---------------------------------------------------------------------------
// model assembly

HgcnnModel make_model(const ArchitectureConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    HgcnnModel m;
    m.cfg = cfg;
    int in = cfg.color_input_dim();
    for (std::size_t i = 0; i < cfg.color_widths.size(); ++i) {
        m.color_layers.push_back(make_hyperconv("color" + std::to_string(i + 1), in,
                                                cfg.color_widths[i], cfg.chebyshev_K,
                                                /*rescale=*/false, 0.0, cfg.use_batchnorm, rng));
        in = cfg.color_widths[i];
    }
    if (cfg.use_depth_branch) {
        in = 1;
        for (std::size_t i = 0; i < cfg.depth_widths.size(); ++i) {
            m.depth_layers.push_back(
                make_hyperconv("depth" + std::to_string(i + 1), in, cfg.depth_widths[i],
                               cfg.chebyshev_K, /*rescale=*/false, 0.0, cfg.use_batchnorm, rng));
            in = cfg.depth_widths[i];
        }
    }
    in = cfg.concat_dim();
    for (int w : cfg.mlp_widths) {
        m.mlp.push_back(make_dense(in, w, rng));
        in = w;
    }
    return m;
}

void zero_grad(HgcnnModel& model) {
    for (HyperConvLayer& l : model.color_layers) l.zero_grad();
    for (HyperConvLayer& l : model.depth_layers) l.zero_grad();
    for (DenseParam& d : model.mlp) d.zero_grad();
}

std::vector<ParamRef> collect_params(HgcnnModel& model) {
    std::vector<ParamRef> out;
    auto append = [&](std::vector<ParamRef> more) {
        out.insert(out.end(), more.begin(), more.end());
    };
    for (HyperConvLayer& l : model.color_layers) append(collect_params(l));
    for (HyperConvLayer& l : model.depth_layers) append(collect_params(l));
    for (std::size_t i = 0; i < model.mlp.size(); ++i)
        append(collect_params(model.mlp[i], "mlp" + std::to_string(i + 1)));
    return out;
}

std::vector<TensorRef> collect_tensors(HgcnnModel& model) {
    std::vector<TensorRef> out;
    auto add_conv = [&](HyperConvLayer& l) {
        out.push_back({l.name + ".theta", l.filter.coefficients.data(),
                       static_cast<long>(l.filter.coefficients.size()), 1});
        out.push_back({l.name + ".weights", l.dense.weights.data(), l.dense.weights.rows(),
                       l.dense.weights.cols()});
        out.push_back({l.name + ".bias", l.dense.bias.data(), l.dense.bias.size(), 1});
        if (l.use_batchnorm) {
            out.push_back({l.name + ".bn_gamma", l.bn.gamma.data(), l.bn.gamma.size(), 1});
            out.push_back({l.name + ".bn_beta", l.bn.beta.data(), l.bn.beta.size(), 1});
            out.push_back(
                {l.name + ".bn_running_mean", l.bn.running_mean.data(), l.bn.running_mean.size(), 1});
            out.push_back(
                {l.name + ".bn_running_var", l.bn.running_var.data(), l.bn.running_var.size(), 1});
        }
    };
    for (HyperConvLayer& l : model.color_layers) add_conv(l);
    for (HyperConvLayer& l : model.depth_layers) add_conv(l);
    for (std::size_t i = 0; i < model.mlp.size(); ++i) {
        const std::string name = "mlp" + std::to_string(i + 1);
        DenseParam& d = model.mlp[i];
        out.push_back({name + ".weights", d.weights.data(), d.weights.rows(), d.weights.cols()});
        out.push_back({name + ".bias", d.bias.data(), d.bias.size(), 1});
    }
    return out;
}

// ---------------------------------------------------------------------------
// forward / backward

namespace {

struct BatchView {
    std::vector<const Matrix*> laplacians;
    long n_vertices = 0;
};

BatchView gather_batch(const HgcnnModel& model, const std::vector<ModelSample>& samples,
                       const std::vector<int>& batch) {
    if (batch.empty()) throw std::invalid_argument("model_forward: empty batch");
    const bool graph_free = model.cfg.graph_mode == "none";
    BatchView v;
    v.laplacians.resize(batch.size());
    v.n_vertices = samples.at(batch[0]).color.rows();
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const ModelSample& s = samples.at(batch[i]);
        if (s.color.cols() != model.cfg.color_input_dim())
            throw std::invalid_argument("model_forward: sample '" + s.id + "' has " +
                                        std::to_string(s.color.cols()) +
                                        " color channels, the architecture expects " +
                                        std::to_string(model.cfg.color_input_dim()));
        if (model.cfg.use_depth_branch &&
            (s.depth.cols() != 1 || s.depth.rows() != s.color.rows()))
            throw std::invalid_argument("model_forward: sample '" + s.id +
                                        "' has a malformed depth channel");
        if (s.color.rows() != v.n_vertices)
            throw std::invalid_argument("model_forward: batch mixes vertex counts");
        if (!graph_free && !s.laplacian)
            throw std::invalid_argument("model_forward: sample '" + s.id + "' has no Laplacian");
        v.laplacians[i] = graph_free ? nullptr : s.laplacian.get();
    }
    return v;
}

std::vector<std::vector<HyperConvLayer>*> branch_list(HgcnnModel& model) {
    std::vector<std::vector<HyperConvLayer>*> branches = {&model.color_layers};
    if (model.cfg.use_depth_branch) branches.push_back(&model.depth_layers);
    return branches;
}

}  // namespace

Matrix model_forward(HgcnnModel& model, const std::vector<ModelSample>& samples,
                     const std::vector<int>& batch, bool training, ForwardCache* cache) {
    const BatchView view = gather_batch(model, samples, batch);
    const std::size_t B = batch.size();
    auto branches = branch_list(model);

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c = ForwardCache{};
    c.branch_inputs.resize(branches.size());
    c.branch_caches.resize(branches.size());

    // branch outputs per layer, kept for the cross-layer concatenation
    std::vector<std::vector<std::vector<Matrix>>> outs(branches.size());
    for (std::size_t bi = 0; bi < branches.size(); ++bi) {
        std::vector<HyperConvLayer>& layers = *branches[bi];
        c.branch_caches[bi].resize(layers.size());
        std::vector<Matrix> cur(B);
        for (std::size_t i = 0; i < B; ++i)
            cur[i] = bi == 0 ? samples[batch[i]].color : samples[batch[i]].depth;
        for (std::size_t li = 0; li < layers.size(); ++li) {
            c.branch_inputs[bi].push_back(std::move(cur));
            cur = hyperconv_forward_batch(layers[li], view.laplacians, c.branch_inputs[bi][li],
                                          training, cache ? &c.branch_caches[bi][li] : nullptr);
            outs[bi].push_back(cur);
        }
    }

    // concatenate every conv layer of every branch, then mean-pool vertices
    int base_dim = 0;
    for (auto* layers : branches)
        for (const HyperConvLayer& l : *layers) base_dim += l.dense.out_features();
    Matrix pooled(B, base_dim);
    for (std::size_t i = 0; i < B; ++i) {
        int off = 0;
        for (std::size_t bi = 0; bi < branches.size(); ++bi)
            for (const std::vector<Matrix>& layer_out : outs[bi]) {
                const Matrix& h = layer_out[i];
                pooled.row(i).segment(off, h.cols()) = h.colwise().mean();
                off += static_cast<int>(h.cols());
            }
    }
    if (model.cfg.concat_scheme == "duplicate") {
        Matrix doubled(B, 2 * base_dim);
        doubled << pooled, pooled;
        pooled.swap(doubled);
    }
    c.pooled = pooled;

    Matrix a = std::move(pooled);
    for (std::size_t li = 0; li < model.mlp.size(); ++li) {
        c.mlp_in.push_back(a);
        Matrix z = dense_forward(model.mlp[li], a);
        c.mlp_pre.push_back(z);
        a = li + 1 < model.mlp.size() ? z.cwiseMax(0.0) : std::move(z);
    }
    if (!is_finite(a)) throw std::runtime_error("numerical blow-up in the MLP head");
    c.valid = cache != nullptr;
    return a;
}

void model_backward(HgcnnModel& model, const std::vector<ModelSample>& samples,
                    const std::vector<int>& batch, const ForwardCache& cache,
                    const Matrix& upstream) {
    if (!cache.valid) throw std::logic_error("model_backward: missing forward cache");
    const BatchView view = gather_batch(model, samples, batch);
    const std::size_t B = batch.size();
    auto branches = branch_list(model);

    Matrix g = upstream;
    Matrix d_pooled;
    for (std::size_t li = model.mlp.size(); li-- > 0;) {
        Matrix d_in = dense_backward(model.mlp[li], cache.mlp_in[li], g);
        if (li > 0)
            g = (cache.mlp_pre[li - 1].array() > 0.0).select(d_in, 0.0);
        else
            d_pooled = std::move(d_in);
    }
    if (model.cfg.concat_scheme == "duplicate") {
        const long half = d_pooled.cols() / 2;
        d_pooled = d_pooled.leftCols(half) + d_pooled.rightCols(half);
    }

    // distribute pooled gradients back over vertices and de-concatenate
    int off = 0;
    for (std::size_t bi = 0; bi < branches.size(); ++bi) {
        std::vector<HyperConvLayer>& layers = *branches[bi];
        std::vector<std::vector<Matrix>> d_out(layers.size(), std::vector<Matrix>(B));
        for (std::size_t li = 0; li < layers.size(); ++li) {
            const int w = layers[li].dense.out_features();
            for (std::size_t i = 0; i < B; ++i) {
                const long n = cache.branch_inputs[bi][0][i].rows();
                d_out[li][i] = Vector::Ones(n) * (d_pooled.row(i).segment(off, w) /
                                                  static_cast<double>(n));
            }
            off += w;
        }
        for (std::size_t li = layers.size(); li-- > 0;) {
            std::vector<Matrix> d_in = hyperconv_backward_batch(
                layers[li], view.laplacians, cache.branch_inputs[bi][li],
                cache.branch_caches[bi][li], d_out[li]);
            if (li > 0)
                for (std::size_t i = 0; i < B; ++i) d_out[li - 1][i] += d_in[i];
        }
    }
}

std::vector<Matrix> layer_features(HgcnnModel& model, const ModelSample& sample) {
    const std::vector<ModelSample> one = {sample};
    const std::vector<int> batch = {0};
    const BatchView view = gather_batch(model, one, batch);
    auto branches = branch_list(model);

    std::vector<Matrix> features;
    const long n = sample.color.rows();
    Matrix raw(n, sample.color.cols() + (model.cfg.use_depth_branch ? 1 : 0));
    if (model.cfg.use_depth_branch)
        raw << sample.color, sample.depth;
    else
        raw = sample.color;
    features.push_back(std::move(raw));

    std::vector<std::vector<Matrix>> cur(branches.size());
    for (std::size_t bi = 0; bi < branches.size(); ++bi)
        cur[bi] = {bi == 0 ? sample.color : sample.depth};
    const std::size_t n_layers = model.color_layers.size();
    for (std::size_t li = 0; li < n_layers; ++li) {
        long width = 0;
        for (std::size_t bi = 0; bi < branches.size(); ++bi) {
            cur[bi] = hyperconv_forward_batch((*branches[bi])[li], view.laplacians, cur[bi],
                                              /*training=*/false, nullptr);
            width += cur[bi][0].cols();
        }
        Matrix layer(n, width);
        long off = 0;
        for (std::size_t bi = 0; bi < branches.size(); ++bi) {
            layer.middleCols(off, cur[bi][0].cols()) = cur[bi][0];
            off += cur[bi][0].cols();
        }
        features.push_back(std::move(layer));
    }
    return features;
}

// ---------------------------------------------------------------------------
// training and prediction

void TrainConfig::validate() const {
    if (max_epochs < 1) throw std::invalid_argument("train config: max_epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
    if (!(lr_decay > 0.0)) throw std::invalid_argument("train config: lr_decay must be positive");
    if (!(clip_norm > 0.0)) throw std::invalid_argument("train config: clip_norm must be positive");
    if (patience < 1) throw std::invalid_argument("train config: patience must be >= 1");
    if (!std::isfinite(dev_threshold))
        throw std::invalid_argument("train config: dev_threshold must be finite");
}

TrainResult train_model(HgcnnModel& model, const std::vector<ModelSample>& samples,
                        const SplitResult& split, const TrainConfig& tc) {
    tc.validate();
    if (split.train.empty() || split.dev.empty())
        throw std::invalid_argument("train: empty train or dev split");

    std::vector<ParamRef> params = collect_params(model);
    AdamState adam = make_adam(params, tc.lr);
    Rng shuffle_rng(tc.seed);
    std::vector<TensorRef> tensors = collect_tensors(model);
    std::vector<std::vector<double>> best_state;
    auto snapshot = [&] {
        best_state.clear();
        for (const TensorRef& t : tensors) best_state.emplace_back(t.data, t.data + t.size());
    };
    auto restore = [&] {
        for (std::size_t i = 0; i < tensors.size(); ++i)
            std::copy(best_state[i].begin(), best_state[i].end(), tensors[i].data);
    };

    TrainResult result;
    const Threshold dev_th{tc.dev_threshold, "fixed"};
    int stale_epochs = 0;
    result.best_dev_acer = std::numeric_limits<double>::infinity();
    for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
        adam.lr = epoch > tc.max_epochs / 2 ? tc.lr * tc.lr_decay : tc.lr;
        std::vector<int> order = split.train;
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            const std::size_t stop = std::min(order.size(), start + tc.batch_size);
            const std::vector<int> batch(order.begin() + start, order.begin() + stop);
            zero_grad(model);
            ForwardCache cache;
            const Matrix logits = model_forward(model, samples, batch, /*training=*/true, &cache);
            std::vector<int> labels(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = samples[batch[i]].label;
            const LossResult loss = cross_entropy_loss(logits, labels);
            model_backward(model, samples, batch, cache, loss.grad);
            clip_global_norm(params, tc.clip_norm);
            adam_step(adam, params);
            loss_sum += loss.loss * static_cast<double>(batch.size());
        }

        const ScoreSet dev_scores = predict(model, samples, split.dev);
        EpochLog row;
        row.epoch = epoch;
        row.train_loss = loss_sum / static_cast<double>(order.size());
        row.dev_acc = accuracy(dev_scores, dev_th);
        row.dev_acer = apcer_bpcer_acer(dev_scores, dev_th).acer;
        result.log.push_back(row);

        // Snapshot on ties as well: among epochs with equal dev ACER the most
        // recent one has the best-calibrated scores. Patience still demands
        // strict improvement, so a saturated dev set cannot stall the stop.
        if (row.dev_acer <= result.best_dev_acer + 1e-12) {
            if (row.dev_acer < result.best_dev_acer - 1e-12)
                stale_epochs = 0;
            else
                ++stale_epochs;
            result.best_dev_acer = std::min(result.best_dev_acer, row.dev_acer);
            result.best_epoch = epoch;
            snapshot();
        } else {
            ++stale_epochs;
        }
        if (stale_epochs >= tc.patience) break;
    }
    if (!best_state.empty()) restore();
    return result;
}

std::string train_log_csv(const std::vector<EpochLog>& log) {
    std::string out = "epoch,train_loss,dev_acc,dev_acer\n";
    char buf[128];
    for (const EpochLog& row : log) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", row.epoch, row.train_loss,
                      row.dev_acc, row.dev_acer);
        out += buf;
    }
    return out;
}

ScoreSet predict(HgcnnModel& model, const std::vector<ModelSample>& samples,
                 const std::vector<int>& indices) {
    ScoreSet out;
    out.records.reserve(indices.size());
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < indices.size(); start += kChunk) {
        const std::size_t stop = std::min(indices.size(), start + kChunk);
        const std::vector<int> batch(indices.begin() + start, indices.begin() + stop);
        const Matrix logits = model_forward(model, samples, batch, /*training=*/false, nullptr);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const ModelSample& s = samples[batch[i]];
            const double m = std::max(logits(i, 0), logits(i, 1));
            const double e0 = std::exp(logits(i, 0) - m), e1 = std::exp(logits(i, 1) - m);
            out.records.push_back(
                {s.id, s.subject, s.is_genuine(), s.attack_type, e1 / (e0 + e1)});
        }
    }
    return out;
}

ScoreSet predict_all(HgcnnModel& model, const std::vector<ModelSample>& samples) {
    std::vector<int> idx(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) idx[i] = static_cast<int>(i);
    return predict(model, samples, idx);
}

// ---------------------------------------------------------------------------
// checkpoints

static_assert(std::endian::native == std::endian::little,
              "the checkpoint payload is little-endian");

namespace {

constexpr const char* kCheckpointMagic = "hgcnn-ckpt v1";

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in.good()) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

std::string read_block(std::istream& in, std::uint64_t size, const char* what) {
    if (size > (1ull << 32)) throw std::runtime_error(std::string("checkpoint: oversized ") + what);
    std::string s(size, '\0');
    in.read(s.data(), static_cast<std::streamsize>(size));
    if (!in.good()) throw std::runtime_error(std::string("checkpoint: truncated ") + what);
    return s;
}

}  // namespace

void save_checkpoint(const std::string& path, HgcnnModel& model) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open '" + path + "'");
    f << kCheckpointMagic << '\n';

    const std::string cfg = model.cfg.to_json().dump();
    std::vector<TensorRef> tensors = collect_tensors(model);
    nlohmann::json manifest = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const TensorRef& t : tensors) {
        manifest.push_back(
            {{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", offset}});
        offset += t.size();
    }
    const std::string man = manifest.dump();

    write_u64(f, cfg.size());
    f.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    write_u64(f, man.size());
    f.write(man.data(), static_cast<std::streamsize>(man.size()));
    write_u64(f, offset);
    for (const TensorRef& t : tensors)
        f.write(reinterpret_cast<const char*>(t.data),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!f.good()) throw std::runtime_error("save_checkpoint: write failed on '" + path + "'");
}

HgcnnModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
    std::string magic;
    std::getline(f, magic);
    if (magic != kCheckpointMagic)
        throw std::runtime_error("load_checkpoint: '" + path + "' is not an hgcnn-ckpt v1 file");

    const std::string cfg_text = read_block(f, read_u64(f), "config");
    const std::string man_text = read_block(f, read_u64(f), "manifest");
    const std::uint64_t n_doubles = read_u64(f);
    if (n_doubles > (1ull << 31)) throw std::runtime_error("checkpoint: oversized payload");
    std::vector<double> blob(n_doubles);
    f.read(reinterpret_cast<char*>(blob.data()),
           static_cast<std::streamsize>(n_doubles * sizeof(double)));
    if (!f.good()) throw std::runtime_error("checkpoint: truncated payload");

    nlohmann::json cfg_json, manifest;
    try {
        cfg_json = nlohmann::json::parse(cfg_text);
        manifest = nlohmann::json::parse(man_text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("checkpoint: malformed JSON header: ") + e.what());
    }
    HgcnnModel model = make_model(ArchitectureConfig::from_json(cfg_json), /*seed=*/0);

    std::map<std::string, TensorRef> by_name;
    for (const TensorRef& t : collect_tensors(model)) by_name[t.name] = t;
    std::set<std::string> seen;
    for (const nlohmann::json& entry : manifest) {
        const std::string name = entry.at("name").get<std::string>();
        const auto it = by_name.find(name);
        if (it == by_name.end())
            throw std::runtime_error("checkpoint: unknown tensor '" + name + "'");
        const TensorRef& t = it->second;
        if (entry.at("rows").get<long>() != t.rows || entry.at("cols").get<long>() != t.cols)
            throw std::runtime_error("checkpoint: tensor '" + name +
                                     "' does not match the architecture shape");
        const std::uint64_t off = entry.at("offset").get<std::uint64_t>();
        if (off + t.size() > blob.size())
            throw std::runtime_error("checkpoint: tensor '" + name + "' overruns the payload");
        std::memcpy(t.data, blob.data() + off, t.size() * sizeof(double));
        seen.insert(name);
    }
    if (seen.size() != by_name.size())
        throw std::runtime_error("checkpoint: manifest is missing model tensors");
    return model;
}

}  // namespace hgcnn
