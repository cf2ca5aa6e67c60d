#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hgcnn/model.hpp"
#include "hgcnn/parallel.hpp"
#include "hgcnn/synthdata.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file '" + path + "'");
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw std::invalid_argument("config file '" + path + "' is not valid JSON: " +
                                    std::string(e.what()));
    }
}

/// Fills `value` from the config file unless the flag was given explicitly;
/// command-line flags always win over config-file entries.
template <typename T>
void cfg_override(const json& cfg, const char* key, const CLI::Option* opt, T& value) {
    if (!cfg.contains(key) || (opt && opt->count() > 0)) return;
    try {
        value = cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw std::invalid_argument("config file key '" + std::string(key) +
                                    "': " + std::string(e.what()));
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << text;
    if (!f.good()) throw std::runtime_error("write failed on '" + path.string() + "'");
}

/// Accepts either a dataset directory (containing samples.jsonl) or a direct
/// path to the JSON-lines file.
std::string resolve_data_path(const std::string& data) {
    if (fs::is_directory(data)) return (fs::path(data) / "samples.jsonl").string();
    return data;
}

std::vector<hgcnn::LandmarkSample> load_dataset(const std::string& data) {
    const std::string path = resolve_data_path(data);
    if (!fs::exists(path)) throw std::invalid_argument("dataset '" + path + "' does not exist");
    hgcnn::LoadResult loaded = hgcnn::load_landmark_samples(path);
    if (loaded.rejected > 0)
        std::fprintf(stderr, "warning: rejected %d malformed sample lines in %s\n",
                     loaded.rejected, path.c_str());
    if (loaded.samples.empty())
        throw std::invalid_argument("dataset '" + path + "' holds no usable samples");
    return loaded.samples;
}

struct GenerateArgs {
    std::string out, config;
    hgcnn::GeneratorConfig gc;
    CLI::Option *seed_opt, *subjects_opt, *per_class_opt;
};

struct TrainArgs {
    std::string data, out, arch_path, protocol = "subjects", config;
    int model_id = 4;
    hgcnn::TrainConfig tc;
    long seed = 7;
    CLI::Option *data_opt, *out_opt, *model_opt, *arch_opt, *protocol_opt, *seed_opt, *epochs_opt,
        *batch_opt, *lr_opt, *patience_opt;
};

struct EvalArgs {
    std::string data, ckpt, out, protocol = "subjects", config;
    std::vector<double> tdr_at = {0.01, 0.05, 0.10, 0.20};
    double threshold = 0.5;
    bool cross = false;
    CLI::Option *data_opt, *ckpt_opt, *out_opt, *protocol_opt, *tdr_opt, *threshold_opt,
        *cross_opt;
};

struct DistanceArgs {
    std::string data, ckpt, out, config;
    int index = 0;
    CLI::Option *data_opt, *ckpt_opt, *out_opt, *index_opt;
};

int cmd_generate(GenerateArgs& a) {
    if (!a.config.empty()) {
        const json cfg = load_json_file(a.config);
        cfg_override(cfg, "seed", a.seed_opt, a.gc.seed);
        cfg_override(cfg, "subjects", a.subjects_opt, a.gc.n_subjects);
        cfg_override(cfg, "samples-per-class", a.per_class_opt,
                     a.gc.samples_per_subject_per_class);
    }
    const json manifest = hgcnn::generate(a.gc, a.out);
    std::cout << manifest.dump(2) << "\n";
    return 0;
}

int cmd_train(TrainArgs& a) {
    if (!a.config.empty()) {
        const json cfg = load_json_file(a.config);
        cfg_override(cfg, "data", a.data_opt, a.data);
        cfg_override(cfg, "out", a.out_opt, a.out);
        cfg_override(cfg, "model", a.model_opt, a.model_id);
        cfg_override(cfg, "arch", a.arch_opt, a.arch_path);
        cfg_override(cfg, "protocol", a.protocol_opt, a.protocol);
        cfg_override(cfg, "seed", a.seed_opt, a.seed);
        cfg_override(cfg, "epochs", a.epochs_opt, a.tc.max_epochs);
        cfg_override(cfg, "batch-size", a.batch_opt, a.tc.batch_size);
        cfg_override(cfg, "lr", a.lr_opt, a.tc.lr);
        cfg_override(cfg, "patience", a.patience_opt, a.tc.patience);
    }
    if (a.data.empty() || a.out.empty())
        throw std::invalid_argument("train: --data and --out are required");
    a.tc.seed = static_cast<std::uint64_t>(a.seed);

    const hgcnn::ArchitectureConfig arch =
        a.arch_path.empty() ? hgcnn::make_model_config(a.model_id)
                            : hgcnn::ArchitectureConfig::from_json(load_json_file(a.arch_path));
    const std::vector<hgcnn::ModelSample> samples =
        hgcnn::prepare_samples(load_dataset(a.data), arch);
    const hgcnn::SplitResult split = hgcnn::split_samples(samples, a.protocol);

    hgcnn::HgcnnModel model = hgcnn::make_model(arch, a.tc.seed);
    const hgcnn::TrainResult result = hgcnn::train_model(model, samples, split, a.tc);

    fs::create_directories(a.out);
    const fs::path out(a.out);
    hgcnn::save_checkpoint((out / "checkpoint.hgc").string(), model);
    write_text_file(out / "train_log.csv", hgcnn::train_log_csv(result.log));
    write_text_file(out / "split.json", split.manifest.dump(2) + "\n");

    const json summary{{"checkpoint", (out / "checkpoint.hgc").string()},
                       {"epochs_run", result.log.size()},
                       {"best_epoch", result.best_epoch},
                       {"best_dev_acer", result.best_dev_acer},
                       {"protocol", a.protocol}};
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_eval(EvalArgs& a) {
    if (!a.config.empty()) {
        const json cfg = load_json_file(a.config);
        cfg_override(cfg, "data", a.data_opt, a.data);
        cfg_override(cfg, "ckpt", a.ckpt_opt, a.ckpt);
        cfg_override(cfg, "out", a.out_opt, a.out);
        cfg_override(cfg, "protocol", a.protocol_opt, a.protocol);
        cfg_override(cfg, "tdr-at", a.tdr_opt, a.tdr_at);
        cfg_override(cfg, "threshold", a.threshold_opt, a.threshold);
        cfg_override(cfg, "cross", a.cross_opt, a.cross);
    }
    if (a.data.empty() || a.ckpt.empty() || a.out.empty())
        throw std::invalid_argument("eval: --data, --ckpt and --out are required");

    hgcnn::HgcnnModel model = hgcnn::load_checkpoint(a.ckpt);
    const std::vector<hgcnn::ModelSample> samples =
        hgcnn::prepare_samples(load_dataset(a.data), model.cfg);

    hgcnn::ScoreSet scores;
    hgcnn::Threshold th{a.threshold, "fixed"};
    std::string split_name;
    if (a.cross) {
        // cross-dataset evaluation: score everything; the threshold must come
        // from the caller (the dev set of the training data is not available)
        scores = hgcnn::predict_all(model, samples);
        split_name = "all";
    } else {
        const hgcnn::SplitResult split = hgcnn::split_samples(samples, a.protocol);
        if (!(a.threshold_opt && a.threshold_opt->count() > 0)) {
            const hgcnn::ScoreSet dev_scores = hgcnn::predict(model, samples, split.dev);
            th = hgcnn::Threshold{hgcnn::eer(dev_scores).threshold, "dev-EER"};
        }
        scores = hgcnn::predict(model, samples, split.test);
        split_name = "test";
    }

    json report = hgcnn::metrics_report(scores, th, a.tdr_at);
    report["dataset"] = a.data;
    report["checkpoint"] = a.ckpt;
    report["split"] = split_name;
    report["protocol"] = a.cross ? "cross" : a.protocol;

    fs::create_directories(a.out);
    const fs::path out(a.out);
    hgcnn::save_scores_file((out / "scores.csv").string(), scores);
    write_text_file(out / "report.json", report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_distances(DistanceArgs& a) {
    if (!a.config.empty()) {
        const json cfg = load_json_file(a.config);
        cfg_override(cfg, "data", a.data_opt, a.data);
        cfg_override(cfg, "ckpt", a.ckpt_opt, a.ckpt);
        cfg_override(cfg, "out", a.out_opt, a.out);
        cfg_override(cfg, "index", a.index_opt, a.index);
    }
    if (a.data.empty() || a.ckpt.empty() || a.out.empty())
        throw std::invalid_argument("distances: --data, --ckpt and --out are required");

    hgcnn::HgcnnModel model = hgcnn::load_checkpoint(a.ckpt);
    const std::vector<hgcnn::ModelSample> samples =
        hgcnn::prepare_samples(load_dataset(a.data), model.cfg);
    if (a.index < 0 || a.index >= static_cast<int>(samples.size()))
        throw std::invalid_argument("distances: --index out of range, dataset holds " +
                                    std::to_string(samples.size()) + " samples");

    const hgcnn::ModelSample& sample = samples[a.index];
    const std::vector<hgcnn::Matrix> features = hgcnn::layer_features(model, sample);
    const int n = sample.n_original;

    fs::create_directories(a.out);
    char buf[32];
    for (std::size_t li = 0; li < features.size(); ++li) {
        const hgcnn::Matrix& f = features[li];
        std::string csv;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", (f.row(i) - f.row(j)).norm());
                csv += buf;
                csv += j + 1 < n ? ',' : '\n';
            }
        }
        write_text_file(fs::path(a.out) / ("layer" + std::to_string(li) + ".csv"), csv);
    }

    const json summary{{"sample", sample.id},
                       {"points", n},
                       {"layers", features.size()},
                       {"out", a.out}};
    std::cout << summary.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hypergraph spectral learning toolkit for face presentation-attack detection"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads,
                   "worker thread count; 0 resolves HGCNN_THREADS, defaulting to 1");

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate", "emit a synthetic RGB-D landmark dataset");
    generate->fallthrough();
    generate->add_option("--out", gen.out, "output directory")->required();
    gen.seed_opt = generate->add_option("--seed", gen.gc.seed, "generator seed");
    gen.subjects_opt = generate->add_option("--subjects", gen.gc.n_subjects, "subject count");
    gen.per_class_opt = generate->add_option("--samples-per-class",
                                             gen.gc.samples_per_subject_per_class,
                                             "samples per subject per class");
    generate->add_option("--config", gen.config, "JSON config file; flags win");

    TrainArgs tr;
    CLI::App* train = app.add_subcommand("train", "train a model on a dataset");
    train->fallthrough();
    tr.data_opt = train->add_option("--data", tr.data, "dataset directory or samples.jsonl");
    tr.out_opt = train->add_option("--out", tr.out, "output directory");
    tr.model_opt = train->add_option("--model", tr.model_id, "ablation variant 1..4")
                       ->check(CLI::Range(1, 4));
    tr.arch_opt = train->add_option("--arch", tr.arch_path,
                                    "architecture config JSON (overrides --model)");
    tr.protocol_opt = train->add_option("--protocol", tr.protocol,
                                        "split protocol: subjects | attack-types | posture");
    tr.seed_opt = train->add_option("--seed", tr.seed, "training and init seed");
    tr.epochs_opt = train->add_option("--epochs", tr.tc.max_epochs, "epoch cap");
    tr.batch_opt = train->add_option("--batch-size", tr.tc.batch_size, "minibatch size");
    tr.lr_opt = train->add_option("--lr", tr.tc.lr, "Adam learning rate");
    tr.patience_opt = train->add_option("--patience", tr.tc.patience,
                                        "early-stop patience on dev ACER");
    train->add_option("--config", tr.config, "JSON config file; flags win");

    EvalArgs ev;
    CLI::App* eval = app.add_subcommand("eval", "score a dataset and report PAD metrics");
    eval->fallthrough();
    ev.data_opt = eval->add_option("--data", ev.data, "dataset directory or samples.jsonl");
    ev.ckpt_opt = eval->add_option("--ckpt", ev.ckpt, "checkpoint file");
    ev.out_opt = eval->add_option("--out", ev.out, "output directory");
    ev.protocol_opt = eval->add_option("--protocol", ev.protocol,
                                       "split protocol used to carve dev/test");
    ev.tdr_opt = eval->add_option("--tdr-at", ev.tdr_at, "FDR targets for TDR reporting")
                     ->delimiter(',');
    ev.threshold_opt = eval->add_option("--threshold", ev.threshold,
                                        "fixed accept threshold (default: dev-set EER)");
    ev.cross_opt = eval->add_flag("--cross", ev.cross,
                                  "score the whole dataset (cross-dataset evaluation)");
    eval->add_option("--config", ev.config, "JSON config file; flags win");

    DistanceArgs di;
    CLI::App* distances = app.add_subcommand(
        "distances", "export per-layer landmark feature distance matrices");
    distances->fallthrough();
    di.data_opt = distances->add_option("--data", di.data, "dataset directory or samples.jsonl");
    di.ckpt_opt = distances->add_option("--ckpt", di.ckpt, "checkpoint file");
    di.out_opt = distances->add_option("--out", di.out, "output directory");
    di.index_opt = distances->add_option("--index", di.index, "sample index (file order)");
    distances->add_option("--config", di.config, "JSON config file; flags win");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (threads > 0) hgcnn::set_thread_count(threads);
        if (generate->parsed()) return cmd_generate(gen);
        if (train->parsed()) return cmd_train(tr);
        if (eval->parsed()) return cmd_eval(ev);
        return cmd_distances(di);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
