#pragma once

// Prediction-confidence-aware test-time augmentation.

#include "eegda/clusterstats.hpp"
#include "eegda/config.hpp"
#include "eegda/dataio.hpp"
#include "eegda/net.hpp"

#include <cstdint>
#include <vector>

namespace eegda::pctta {

enum class VoteSource { Original, Augmented };

struct Vote {
    int label;
    VoteSource source;
};

struct TtaDecision {
    bool gated = false;
    double entropy_bits = 0.0;
    double discrepancy = 0.0;
    std::vector<Vote> votes;
    int final_label = 0;
};

struct TtaCostReport {
    std::size_t total = 0;
    std::size_t gated = 0;
    std::size_t augmented_passes = 0;
    double wall_seconds = 0.0;
};

/// Entropy of a probability vector in bits.
double entropy(const Eigen::Ref<const RowVector>& probs);

/// True iff entropy >= tau and discrepancy > m_dis.
bool gate(double entropy_bits, double discrepancy, double tau, double m_dis);

/// Most frequent label. Ties go to the original prediction when it is among
/// the tied labels, otherwise to the lowest tied class index.
int majority_vote(const std::vector<Vote>& votes, int classes);

/// One augmentation of the test-time fan-out.
struct Transform {
    enum class Kind { Noise, Resample } kind;
    double amount;  // noise std fraction or resample factor
};

std::vector<Transform> transforms(const PipelineConfig& config);

/// Everything inference needs from the trained pipeline.
struct Model {
    const net::ModelParams& params;
    const clusterstats::ClusterStats& stats;
};

/// Features for augmented copies of a stored segment, through the same
/// band-power path and normalizer as the domain's features.
Matrix augmented_features(const dataio::DomainSet& set, std::size_t index, const std::vector<Transform>& fan_out,
                          std::uint64_t seed);

/// PC-TTA for one sample. When force is true the gate is bypassed (full TTA).
TtaDecision pc_tta_predict(const dataio::DomainSet& set, std::size_t index, const Model& model,
                           const PipelineConfig& config, bool force = false);

struct BatchResult {
    Labels labels;
    std::vector<TtaDecision> decisions;
    TtaCostReport cost;
};

BatchResult batch_infer(const dataio::DomainSet& set, const Model& model, const PipelineConfig& config,
                        InferenceMode mode);

}  // namespace eegda::pctta
