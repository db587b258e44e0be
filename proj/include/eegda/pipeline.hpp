#pragma once

// The training schedule: pre-training under group DRO, cluster shaping, and
// the gradual proximity-guided target selection loop.

#include "eegda/clusterstats.hpp"
#include "eegda/config.hpp"
#include "eegda/dataio.hpp"
#include "eegda/losses.hpp"
#include "eegda/net.hpp"

#include <cstdint>
#include <vector>

namespace eegda::pipeline {

/// Everything the training loop mutates.
struct TrainState {
    net::ModelParams params;
    net::OptimizerState optimizer;
    losses::GroupDroState dro;
    Vector class_weights;

    int classes() const { return params.arch.classes; }
};

struct EpochLoss {
    int epoch = 0;
    double total = 0.0;  // mean over batches
    losses::StageTerms terms;
};

struct SelectionResult {
    std::vector<clusterstats::Selection> selected;  // indices into the target set
    std::vector<std::size_t> remaining;
};

struct IterationRecord {
    int iteration = 0;
    std::vector<clusterstats::Selection> selected;
    std::vector<int> per_class;
    std::size_t pool_before = 0;
    std::size_t pool_after = 0;
    std::vector<EpochLoss> epochs;
    clusterstats::ClusterStats stats;  // snapshot used for this selection
    net::ModelParams params;           // parameters used for this selection
};

struct AdaptationTrace {
    std::vector<IterationRecord> iterations;
    std::size_t total_selected() const;
};

/// Number of classes implied by the labels (max label + 1).
int class_count(const Labels& labels);

/// Fresh model and optimizer for a labeled source set.
TrainState init_state(const dataio::DomainSet& source, const PipelineConfig& config);

/// max_epoch_1 epochs of L_cls + alpha L_dis over shuffled source batches.
std::vector<EpochLoss> pretrain(TrainState& state, const dataio::DomainSet& source, const PipelineConfig& config);

/// Cluster shaping around the pre-stage source centroids, then source statistics
/// and target centroids from confident target predictions.
clusterstats::ClusterStats cluster_stage(TrainState& state, const dataio::DomainSet& source,
                                         const dataio::DomainSet& target, const PipelineConfig& config,
                                         std::vector<EpochLoss>* losses_out = nullptr);

/// Proximity candidates (distance below m_ctr + sigma/2 of the predicted class),
/// narrowed to confident predictions; selected rows leave the pool.
SelectionResult gptds_select(const Matrix& target_features, const std::vector<std::size_t>& pool,
                             const net::ModelParams& params, const clusterstats::ClusterStats& stats,
                             double softmax_threshold);

/// The selection/training loop. Selected target samples keep the pseudo-label
/// assigned at selection time and remain in later epochs.
AdaptationTrace adapt(TrainState& state, clusterstats::ClusterStats& stats, const dataio::DomainSet& source,
                      const dataio::DomainSet& target, const PipelineConfig& config);

struct RunResult {
    TrainState state;
    clusterstats::ClusterStats stats;
    std::vector<EpochLoss> pretrain_losses;
    std::vector<EpochLoss> cluster_losses;
    AdaptationTrace trace;
};

/// Pre-training, cluster shaping and adaptation in sequence.
RunResult run(const dataio::DomainSet& source, const dataio::DomainSet& target, const PipelineConfig& config);

}  // namespace eegda::pipeline
