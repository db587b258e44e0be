#include "eegda/pctta.hpp"

#include <chrono>

namespace eegda::pctta {

double entropy(const Eigen::Ref<const RowVector>& probs) { return clusterstats::entropy_bits(probs); }

bool gate(double entropy_bits, double discrepancy, double tau, double m_dis) {
    return entropy_bits >= tau && discrepancy > m_dis;
}

int majority_vote(const std::vector<Vote>& votes, int classes) {
    if (votes.empty()) throw Error("majority_vote: no votes");
    std::vector<int> count(static_cast<std::size_t>(classes), 0);
    for (const auto& v : votes) ++count.at(static_cast<std::size_t>(v.label));
    const int top = *std::max_element(count.begin(), count.end());
    int original = -1;
    for (const auto& v : votes)
        if (v.source == VoteSource::Original) original = v.label;
    if (original >= 0 && count[static_cast<std::size_t>(original)] == top) return original;
    for (int k = 0; k < classes; ++k)
        if (count[static_cast<std::size_t>(k)] == top) return k;
    return 0;
}

std::vector<Transform> transforms(const PipelineConfig& config) {
    std::vector<Transform> out;
    for (double s : config.noise_levels) out.push_back({Transform::Kind::Noise, s});
    for (double f : config.resample_factors) out.push_back({Transform::Kind::Resample, f});
    return out;
}

Matrix augmented_features(const dataio::DomainSet& set, std::size_t index, const std::vector<Transform>& fan_out,
                          std::uint64_t seed) {
    if (!set.normalizer) throw Error("TTA requires the domain's normalization transform");
    const sigproc::SignalSegment& seg = set.segments.at(index);
    std::vector<sigproc::SignalSegment> variants;
    variants.reserve(fan_out.size());
    for (std::size_t j = 0; j < fan_out.size(); ++j) {
        const auto& t = fan_out[j];
        if (t.kind == Transform::Kind::Noise)
            variants.push_back(sigproc::augment_noise(seg, t.amount, substream_seed(seed, "tta.noise", index * fan_out.size() + j)));
        else
            variants.push_back(sigproc::augment_resample(seg, t.amount));
    }
    return dataio::model_features(*set.normalizer, sigproc::featurize(variants, set.bands));
}

namespace {

TtaDecision decide(const dataio::DomainSet& set, std::size_t index, int original, double entropy_bits,
                   double discrepancy, const Model& model, const PipelineConfig& config, bool force,
                   const std::vector<Transform>& fan_out) {
    TtaDecision d;
    d.entropy_bits = entropy_bits;
    d.discrepancy = discrepancy;
    d.gated = force || gate(entropy_bits, discrepancy, config.tau, model.stats.m_dis);
    d.votes.push_back({original, VoteSource::Original});
    if (d.gated) {
        const Matrix x = augmented_features(set, index, fan_out, config.seed);
        const net::ForwardOutput out = net::forward(model.params, x);
        for (Eigen::Index j = 0; j < out.probs_avg.rows(); ++j)
            d.votes.push_back({argmax(out.probs_avg.row(j)), VoteSource::Augmented});
        d.final_label = majority_vote(d.votes, model.params.arch.classes);
    } else {
        d.final_label = original;
    }
    return d;
}

}  // namespace

TtaDecision pc_tta_predict(const dataio::DomainSet& set, std::size_t index, const Model& model,
                           const PipelineConfig& config, bool force) {
    if (config.tta_count() < 1) throw Error("PC-TTA needs at least one transform");
    const net::ForwardOutput out = net::forward(model.params, set.features.row(static_cast<Eigen::Index>(index)));
    const int original = argmax(out.probs_avg.row(0));
    return decide(set, index, original, entropy(out.probs_avg.row(0)), distance(out.probs1.row(0), out.probs2.row(0)),
                  model, config, force, transforms(config));
}

BatchResult batch_infer(const dataio::DomainSet& set, const Model& model, const PipelineConfig& config,
                        InferenceMode mode) {
    const auto start = std::chrono::steady_clock::now();
    BatchResult r;
    const clusterstats::Predictions pred = clusterstats::predict(model.params, set.features);
    const auto fan_out = transforms(config);
    r.cost.total = set.size();
    r.labels.resize(set.size());
    r.decisions.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        TtaDecision d;
        if (mode == InferenceMode::NoTta) {
            d.entropy_bits = pred.entropy_bits(row);
            d.discrepancy = pred.discrepancy(row);
            d.votes.push_back({pred.label[i], VoteSource::Original});
            d.final_label = pred.label[i];
        } else {
            d = decide(set, i, pred.label[i], pred.entropy_bits(row), pred.discrepancy(row), model, config,
                       mode == InferenceMode::FullTta, fan_out);
        }
        if (d.gated) {
            ++r.cost.gated;
            r.cost.augmented_passes += d.votes.size() - 1;
        }
        r.labels[i] = d.final_label;
        r.decisions.push_back(std::move(d));
    }
    r.cost.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace eegda::pctta
