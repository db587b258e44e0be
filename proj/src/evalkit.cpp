#include "eegda/evalkit.hpp"

namespace eegda::evalkit {

ConfusionMatrix confusion(const Labels& truth, const Labels& predicted, int classes) {
    if (truth.size() != predicted.size())
        throw Error("metrics: " + std::to_string(truth.size()) + " true labels vs " + std::to_string(predicted.size()) +
                    " predictions");
    ConfusionMatrix m = ConfusionMatrix::Zero(classes, classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= classes || predicted[i] < 0 || predicted[i] >= classes)
            throw Error("metrics: label out of range at position " + std::to_string(i));
        ++m(truth[i], predicted[i]);
    }
    return m;
}

MetricsReport metrics(const Labels& truth, const Labels& predicted, int classes) {
    MetricsReport r;
    r.confusion = confusion(truth, predicted, classes);
    const std::int64_t total = r.confusion.sum();
    r.accuracy = total > 0 ? static_cast<double>(r.confusion.trace()) / static_cast<double>(total) : 0.0;
    for (int k = 0; k < classes; ++k) {
        ClassMetrics c;
        const auto tp = r.confusion(k, k);
        const auto actual = r.confusion.row(k).sum();
        const auto called = r.confusion.col(k).sum();
        if (actual > 0) c.sensitivity = static_cast<double>(tp) / static_cast<double>(actual);
        else c.sensitivity_undefined = true;
        if (called > 0) c.ppv = static_cast<double>(tp) / static_cast<double>(called);
        else c.ppv_undefined = true;
        if (!c.sensitivity_undefined && !c.ppv_undefined && c.sensitivity + c.ppv > 0.0)
            c.f1 = 2.0 * c.sensitivity * c.ppv / (c.sensitivity + c.ppv);
        else
            c.f1_undefined = true;
        r.per_class.push_back(c);
    }
    return r;
}

namespace {

VariantResult score(const std::string& name, const dataio::DomainSet& target, const Labels& truth,
                    const pipeline::TrainState& state, const clusterstats::ClusterStats& stats,
                    const PipelineConfig& config, InferenceMode mode, const pipeline::AdaptationTrace* trace) {
    const pctta::Model model{state.params, stats};
    const pctta::BatchResult res = pctta::batch_infer(target, model, config, mode);
    VariantResult v;
    v.name = name;
    v.report = metrics(truth, res.labels, state.classes());
    v.report.cost = res.cost;
    v.cost = res.cost;
    if (trace) {
        v.adapted = true;
        v.adapt_iterations = trace->iterations.size();
        v.selected = trace->total_selected();
    }
    return v;
}

}  // namespace

std::vector<VariantResult> ablate(const dataio::DomainSet& source, const dataio::DomainSet& target,
                                  const Labels& target_truth, const PipelineConfig& config) {
    pipeline::TrainState base = pipeline::init_state(source, config);
    pipeline::pretrain(base, source, config);

    std::vector<VariantResult> out;
    out.push_back(score("A", target, target_truth, base, clusterstats::ClusterStats{}, config, InferenceMode::NoTta, nullptr));

    const clusterstats::ClusterStats shaped_stats = pipeline::cluster_stage(base, source, target, config);

    PipelineConfig single = config;
    single.max_itr = 1;
    pipeline::TrainState c_state = base;
    clusterstats::ClusterStats c_stats = shaped_stats;
    const auto c_trace = pipeline::adapt(c_state, c_stats, source, target, single);

    pipeline::TrainState full_state = base;
    clusterstats::ClusterStats full_stats = shaped_stats;
    const auto full_trace = pipeline::adapt(full_state, full_stats, source, target, config);

    out.push_back(score("C", target, target_truth, c_state, c_stats, config, InferenceMode::PcTta, &c_trace));
    out.push_back(score("D", target, target_truth, full_state, full_stats, config, InferenceMode::NoTta, &full_trace));
    out.push_back(score("full", target, target_truth, full_state, full_stats, config, InferenceMode::PcTta, &full_trace));
    return out;
}

std::vector<BandResult> band_ablation(const dataio::DomainSet& source, const dataio::DomainSet& target,
                                      const Labels& target_truth, const PipelineConfig& config) {
    std::vector<std::vector<sigproc::BandSpec>> subsets;
    for (const auto& b : sigproc::default_bands()) subsets.push_back({b});
    subsets.push_back(sigproc::default_bands());

    std::vector<BandResult> out;
    for (const auto& bands : subsets) {
        const dataio::DomainSet src = dataio::refeaturize(source, bands);
        const dataio::DomainSet tgt = dataio::refeaturize(target, bands);
        PipelineConfig cfg = config;
        cfg.bands = sigproc::band_subset_name(bands);
        const pipeline::RunResult run = pipeline::run(src, tgt, cfg);
        const pctta::BatchResult res =
            pctta::batch_infer(tgt, pctta::Model{run.state.params, run.stats}, cfg, cfg.mode);
        BandResult b;
        b.bands = cfg.bands;
        b.input_width = static_cast<int>(src.features.cols());
        b.report = metrics(target_truth, res.labels, run.state.classes());
        b.report.cost = res.cost;
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace eegda::evalkit
