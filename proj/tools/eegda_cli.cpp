#include "eegda/config.hpp"
#include "eegda/dataio.hpp"
#include "eegda/evalkit.hpp"
#include "eegda/pctta.hpp"
#include "eegda/pipeline.hpp"
#include "eegda/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace eegda;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kError = 1, kConfig = 2, kIo = 3, kNumerical = 4 };

struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::string out = ".";
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "key = value config file");
    app->add_option("--set", c.sets, "override a config key (key=value), repeatable");
    app->add_option("--seed", c.seed, "root random seed");
    app->add_option("--mode", c.mode, "inference mode: pc_tta, full_tta or no_tta");
    app->add_option("--out", c.out, "output directory");
}

KeyValues gather_keys(const Common& c) {
    KeyValues kv;
    if (!c.config_path.empty()) kv = load_key_values(c.config_path);
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
        kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    return kv;
}

PipelineConfig load_config(const Common& c, dataio::SynthSpec* spec = nullptr) {
    KeyValues kv = gather_keys(c);
    PipelineConfig config;
    config.apply(kv);
    if (spec) spec->apply(kv);
    reject_unknown(kv);
    if (c.seed) {
        config.seed = *c.seed;
        if (spec) spec->seed = *c.seed;
    }
    if (!c.mode.empty()) config.mode = parse_inference_mode(c.mode);
    config.validate();
    if (spec) spec->validate();
    return config;
}

fs::path out_dir(const Common& c) {
    fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

Labels read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open label file " + path);
    Labels out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            std::size_t used = 0;
            const int v = std::stoi(line, &used);
            if (line.find_first_not_of(" \t\r", used) != std::string::npos || v < 0) throw std::invalid_argument("");
            out.push_back(v);
        } catch (const std::exception&) {
            throw IoError(path + ": line " + std::to_string(lineno) + ": expected a non-negative integer label");
        }
    }
    return out;
}

void write_labels(const fs::path& path, const Labels& labels) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (int l : labels) out << l << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

// Match the domain's band subset to the configured one.
dataio::DomainSet with_bands(dataio::DomainSet set, const PipelineConfig& config) {
    const auto bands = sigproc::parse_band_subset(config.bands);
    if (sigproc::band_mask(bands) == sigproc::band_mask(set.bands)) return set;
    return dataio::refeaturize(set, bands);
}

dataio::DomainSet load_set(const std::string& path, const PipelineConfig& config) {
    return with_bands(dataio::load_domain(path), config);
}

int classes_for(const Labels& a, const Labels& b, int at_least = 0) {
    int k = at_least;
    for (int l : a) k = std::max(k, l + 1);
    for (int l : b) k = std::max(k, l + 1);
    return std::max(k, 2);
}

dataio::Checkpoint to_checkpoint(const pipeline::TrainState& state, const clusterstats::ClusterStats& stats) {
    return {state.params, state.optimizer, state.dro.q, stats};
}

pipeline::TrainState from_checkpoint(const dataio::Checkpoint& ck, const dataio::DomainSet& source,
                                     const PipelineConfig& config) {
    pipeline::TrainState s = pipeline::init_state(source, config);
    if (s.params.arch.input != ck.params.arch.input || s.classes() != ck.params.arch.classes)
        throw ConfigError("checkpoint architecture does not match the source features");
    s.params = ck.params;
    s.optimizer = ck.optimizer;
    if (ck.group_weights.size() == s.classes()) s.dro.q = ck.group_weights;
    return s;
}

struct Manifest {
    json j = json::object();
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void finish(const fs::path& dir, const std::string& command, const PipelineConfig& config,
                const std::vector<std::string>& artifacts) {
        j["command"] = command;
        j["seed"] = config.seed;
        j["config"] = config.to_key_values();
        j["timings"]["total_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json hashes = json::object();
        for (const auto& a : artifacts)
            if (fs::exists(dir / a)) hashes[a] = dataio::hex64(dataio::file_hash((dir / a).string()));
        j["artifacts"] = hashes;
        write_text(dir / "manifest.json", j.dump(2) + "\n");
    }
};

void print_metrics(const std::string& variant, const evalkit::MetricsReport& r) {
    std::cout << variant << ": accuracy " << r.accuracy;
    for (std::size_t k = 0; k < r.per_class.size(); ++k)
        std::cout << " | class " << k << " se " << r.per_class[k].sensitivity << " ppv " << r.per_class[k].ppv
                  << " f1 " << r.per_class[k].f1;
    if (r.cost) std::cout << " | gated " << r.cost->gated << "/" << r.cost->total;
    std::cout << '\n';
}

int cmd_synth(const Common& c) {
    dataio::SynthSpec spec;
    const PipelineConfig config = load_config(c, &spec);
    const fs::path dir = out_dir(c);
    const auto b = dataio::synth_benchmark(spec);
    dataio::save_domain(b.source, (dir / "source.eegf").string());
    dataio::save_domain(b.target, (dir / "target.eegf").string());
    write_labels(dir / "target_labels.txt", b.target_truth);
    KeyValues snapshot = spec.to_key_values();
    for (const auto& [k, v] : config.to_key_values()) snapshot[k] = v;
    write_text(dir / "synth.cfg", format_key_values(snapshot));
    std::cout << "wrote " << b.source.size() << " source and " << b.target.size() << " target samples to "
              << dir.string() << '\n';
    return kOk;
}

int cmd_featurize(const Common& c, const std::vector<std::string>& inputs, const std::string& domain,
                  const std::string& normalizer_from, const std::string& name) {
    const PipelineConfig config = load_config(c);
    if (domain != "source" && domain != "target") throw ConfigError("--domain must be source or target");
    const fs::path dir = out_dir(c);
    const auto bands = sigproc::parse_band_subset(config.bands);
    std::vector<sigproc::SignalSegment> segments;
    Labels labels;
    bool all_labeled = true;
    for (const auto& path : inputs) {
        dataio::RawRecord rec = dataio::load_record(path);
        sigproc::SignalSegment signal = rec.signal;
        if (config.filter_enabled) signal = sigproc::bandpass(signal, config.filter_low, config.filter_high);
        auto windows = sigproc::segment(signal, config.window_s, config.step_s);
        for (auto& w : windows) {
            segments.push_back(std::move(w));
            labels.push_back(rec.label);
        }
        all_labeled = all_labeled && rec.label >= 0;
    }
    if (segments.empty()) throw Error("no segments produced from the inputs");
    std::optional<sigproc::NormalizationTransform> normalizer;
    const bool share = config.share_source_normalization || !normalizer_from.empty();
    if (domain == "target" && share) {
        if (normalizer_from.empty())
            throw ConfigError("sharing source normalization requires --normalizer-from <source.eegf>");
        normalizer = dataio::load_features(normalizer_from).normalizer;
        if (!normalizer) throw IoError(normalizer_from + " carries no normalizer");
    }
    const bool is_source = domain == "source";
    if (is_source && !all_labeled) throw Error("every source record needs a label");
    std::optional<Labels> stored;
    if (is_source) stored = labels;
    const auto set = dataio::build_domain(std::move(segments), stored, bands,
                                          is_source ? dataio::Domain::Source : dataio::Domain::Target, normalizer);
    const std::string file = name.empty() ? domain + ".eegf" : name;
    dataio::save_domain(set, (dir / file).string());
    if (!is_source && all_labeled) write_labels(dir / (domain + "_labels.txt"), labels);
    std::cout << "wrote " << set.size() << " samples x " << set.features.cols() << " features to "
              << (dir / file).string() << '\n';
    return kOk;
}

int cmd_pretrain(const Common& c, const std::string& source_path) {
    const PipelineConfig config = load_config(c);
    const fs::path dir = out_dir(c);
    Manifest manifest;
    const auto source = load_set(source_path, config);
    pipeline::TrainState state = pipeline::init_state(source, config);
    pipeline::RunResult r;
    r.pretrain_losses = pipeline::pretrain(state, source, config);
    dataio::save_checkpoint(to_checkpoint(state, {}), (dir / "checkpoint.eegc").string());
    auto lines = report::trace_lines(r);
    lines.resize(1);
    report::write_lines((dir / "trace.jsonl").string(), lines);
    manifest.finish(dir, "pretrain", config, {"checkpoint.eegc", "trace.jsonl"});
    std::cout << "pretrained " << config.max_epoch_1 << " epochs; final loss "
              << (r.pretrain_losses.empty() ? 0.0 : r.pretrain_losses.back().total) << '\n';
    return kOk;
}

// Inference, predictions, decisions and optional metrics for a trained model.
void infer_and_report(const fs::path& dir, const dataio::DomainSet& target, const net::ModelParams& params,
                      const clusterstats::ClusterStats& stats, const PipelineConfig& config,
                      const std::string& truth_path, std::vector<std::string>& artifacts, Manifest& manifest) {
    const auto res = pctta::batch_infer(target, pctta::Model{params, stats}, config, config.mode);
    write_labels(dir / "predictions.txt", res.labels);
    report::write_lines((dir / "decisions.jsonl").string(), report::decision_lines(res.decisions));
    artifacts.insert(artifacts.end(), {"predictions.txt", "decisions.jsonl"});
    manifest.j["timings"]["inference_seconds"] = res.cost.wall_seconds;
    manifest.j["tta"] = json::parse(report::cost_line(to_string(config.mode), res.cost, true));
    std::cout << "inference " << to_string(config.mode) << ": gated " << res.cost.gated << "/" << res.cost.total
              << ", augmented passes " << res.cost.augmented_passes << '\n';
    if (truth_path.empty()) return;
    const Labels truth = read_labels(truth_path);
    auto m = evalkit::metrics(truth, res.labels, classes_for(truth, res.labels, params.arch.classes));
    m.cost = res.cost;
    report::write_lines((dir / "metrics.jsonl").string(), {report::metrics_line(to_string(config.mode), m)});
    artifacts.push_back("metrics.jsonl");
    print_metrics(to_string(config.mode), m);
}

int cmd_adapt(const Common& c, const std::string& checkpoint_path, const std::string& source_path,
              const std::string& target_path, const std::string& truth_path) {
    const PipelineConfig config = load_config(c);
    const fs::path dir = out_dir(c);
    Manifest manifest;
    const auto source = load_set(source_path, config);
    const auto target = load_set(target_path, config);
    pipeline::RunResult r;
    r.state = from_checkpoint(dataio::load_checkpoint(checkpoint_path), source, config);
    r.stats = pipeline::cluster_stage(r.state, source, target, config, &r.cluster_losses);
    r.trace = pipeline::adapt(r.state, r.stats, source, target, config);
    dataio::save_checkpoint(to_checkpoint(r.state, r.stats), (dir / "checkpoint.eegc").string());
    auto lines = report::trace_lines(r);
    lines.erase(lines.begin());
    report::write_lines((dir / "trace.jsonl").string(), lines);
    std::vector<std::string> artifacts = {"checkpoint.eegc", "trace.jsonl"};
    infer_and_report(dir, target, r.state.params, r.stats, config, truth_path, artifacts, manifest);
    manifest.finish(dir, "adapt", config, artifacts);
    return kOk;
}

int cmd_run(const Common& c, const std::string& source_path, const std::string& target_path,
            const std::string& truth_path) {
    const PipelineConfig config = load_config(c);
    const fs::path dir = out_dir(c);
    Manifest manifest;
    const auto source = load_set(source_path, config);
    const auto target = load_set(target_path, config);
    const auto t0 = std::chrono::steady_clock::now();
    const pipeline::RunResult r = pipeline::run(source, target, config);
    manifest.j["timings"]["training_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    dataio::save_checkpoint(to_checkpoint(r.state, r.stats), (dir / "checkpoint.eegc").string());
    report::write_lines((dir / "trace.jsonl").string(), report::trace_lines(r));
    std::vector<std::string> artifacts = {"checkpoint.eegc", "trace.jsonl"};
    std::cout << "adaptation selected " << r.trace.total_selected() << " of " << target.size()
              << " target samples in " << r.trace.iterations.size() << " iterations\n";
    infer_and_report(dir, target, r.state.params, r.stats, config, truth_path, artifacts, manifest);
    write_text(dir / "config.snapshot", format_key_values(config.to_key_values()));
    artifacts.push_back("config.snapshot");
    manifest.finish(dir, "run", config, artifacts);
    return kOk;
}

int cmd_infer(const Common& c, const std::string& checkpoint_path, const std::string& target_path,
              const std::string& truth_path) {
    const PipelineConfig config = load_config(c);
    const fs::path dir = out_dir(c);
    Manifest manifest;
    const auto ck = dataio::load_checkpoint(checkpoint_path);
    const auto target = load_set(target_path, config);
    if (target.features.cols() != ck.params.arch.input)
        throw ConfigError("checkpoint expects " + std::to_string(ck.params.arch.input) + " features, target has " +
                          std::to_string(target.features.cols()));
    std::vector<std::string> artifacts;
    infer_and_report(dir, target, ck.params, ck.stats, config, truth_path, artifacts, manifest);
    manifest.finish(dir, "infer", config, artifacts);
    return kOk;
}

int cmd_ablate(const Common& c, const std::string& source_path, const std::string& target_path,
               const std::string& truth_path, bool bands) {
    const PipelineConfig config = load_config(c);
    const fs::path dir = out_dir(c);
    Manifest manifest;
    const auto source = load_set(source_path, config);
    const auto target = load_set(target_path, config);
    const Labels truth = read_labels(truth_path);
    std::vector<std::string> lines;
    if (bands) {
        for (const auto& r : evalkit::band_ablation(source, target, truth, config)) {
            json j = json::parse(report::metrics_line(r.bands, r.report));
            j["input_width"] = r.input_width;
            lines.push_back(j.dump());
            print_metrics(r.bands, r.report);
        }
    } else {
        for (const auto& v : evalkit::ablate(source, target, truth, config)) {
            json j = json::parse(report::metrics_line(v.name, v.report));
            j["adapted"] = v.adapted;
            j["adapt_iterations"] = v.adapt_iterations;
            j["selected"] = v.selected;
            lines.push_back(j.dump());
            print_metrics(v.name, v.report);
        }
    }
    report::write_lines((dir / "ablation.jsonl").string(), lines);
    manifest.finish(dir, bands ? "ablate --bands" : "ablate", config, {"ablation.jsonl"});
    return kOk;
}

int cmd_eval(const Common& c, const std::string& truth_path, const std::string& pred_path, int classes) {
    const Labels truth = read_labels(truth_path);
    const Labels pred = read_labels(pred_path);
    const auto m = evalkit::metrics(truth, pred, classes > 0 ? classes : classes_for(truth, pred));
    const std::string line = report::metrics_line("eval", m);
    std::cout << line << '\n';
    if (c.out != ".") report::write_lines((out_dir(c) / "metrics.jsonl").string(), {line});
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EEG cross-domain classification: pre-training, gradual target selection and PC-TTA"};
    app.require_subcommand(1);

    Common common;
    std::string source, target, truth, checkpoint, pred, domain = "source", normalizer_from, name;
    std::vector<std::string> inputs;
    bool bands = false;
    int classes = 0;

    auto* synth = app.add_subcommand("synth", "generate the synthetic two-domain benchmark");
    add_common(synth, common);

    auto* featurize = app.add_subcommand("featurize", "segment and featurize raw records into a domain file");
    add_common(featurize, common);
    featurize->add_option("inputs", inputs, "raw records (.eegr or .csv)")->required();
    featurize->add_option("--domain", domain, "source or target");
    featurize->add_option("--normalizer-from", normalizer_from, "reuse this feature file's normalizer");
    featurize->add_option("--name", name, "output file name inside --out");

    auto* pretrain = app.add_subcommand("pretrain", "pre-train on the labeled source domain");
    add_common(pretrain, common);
    pretrain->add_option("--source", source, "source feature file")->required();

    auto* adapt = app.add_subcommand("adapt", "cluster shaping and target adaptation from a checkpoint");
    add_common(adapt, common);
    adapt->add_option("--checkpoint", checkpoint, "pre-trained checkpoint")->required();
    adapt->add_option("--source", source, "source feature file")->required();
    adapt->add_option("--target", target, "target feature file")->required();
    adapt->add_option("--truth", truth, "target labels for scoring");

    auto* run = app.add_subcommand("run", "the full pipeline: train, adapt, infer");
    add_common(run, common);
    run->add_option("--source", source, "source feature file")->required();
    run->add_option("--target", target, "target feature file")->required();
    run->add_option("--truth", truth, "target labels for scoring");

    auto* infer = app.add_subcommand("infer", "predict target labels with a trained checkpoint");
    add_common(infer, common);
    infer->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    infer->add_option("--target", target, "target feature file")->required();
    infer->add_option("--truth", truth, "target labels for scoring");

    auto* ablate = app.add_subcommand("ablate", "model A/C/D/full ablation, or per-band with --bands");
    add_common(ablate, common);
    ablate->add_option("--source", source, "source feature file")->required();
    ablate->add_option("--target", target, "target feature file")->required();
    ablate->add_option("--truth", truth, "target labels")->required();
    ablate->add_flag("--bands", bands, "ablate frequency bands instead of model components");

    auto* eval = app.add_subcommand("eval", "score predictions against true labels");
    add_common(eval, common);
    eval->add_option("--truth", truth, "true labels, one per line")->required();
    eval->add_option("--pred", pred, "predicted labels, one per line")->required();
    eval->add_option("--classes", classes, "number of classes (default: inferred)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*synth) return cmd_synth(common);
        if (*featurize) return cmd_featurize(common, inputs, domain, normalizer_from, name);
        if (*pretrain) return cmd_pretrain(common, source);
        if (*adapt) return cmd_adapt(common, checkpoint, source, target, truth);
        if (*run) return cmd_run(common, source, target, truth);
        if (*infer) return cmd_infer(common, checkpoint, target, truth);
        if (*ablate) return cmd_ablate(common, source, target, truth, bands);
        if (*eval) return cmd_eval(common, truth, pred, classes);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    }
    return kError;
}
