#pragma once

// Classification metrics and the ablation harness.

#include "eegda/config.hpp"
#include "eegda/dataio.hpp"
#include "eegda/pctta.hpp"
#include "eegda/pipeline.hpp"

#include <optional>
#include <string>
#include <vector>

namespace eegda::evalkit {

/// counts(true, predicted)
using ConfusionMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

ConfusionMatrix confusion(const Labels& truth, const Labels& predicted, int classes);

struct ClassMetrics {
    double sensitivity = 0.0;
    double ppv = 0.0;
    double f1 = 0.0;
    bool sensitivity_undefined = false;
    bool ppv_undefined = false;
    bool f1_undefined = false;
};

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    ConfusionMatrix confusion;
    std::optional<pctta::TtaCostReport> cost;
};

/// Undefined ratios (zero denominators) are reported as 0 and flagged.
MetricsReport metrics(const Labels& truth, const Labels& predicted, int classes);

struct VariantResult {
    std::string name;
    MetricsReport report;
    pctta::TtaCostReport cost;
    bool adapted = false;
    std::size_t adapt_iterations = 0;
    std::size_t selected = 0;
};

/// Model A (pre-training only, no TTA), C (single selection round, PC-TTA),
/// D (full adaptation, no TTA) and the full pipeline, sharing one pre-trained model.
std::vector<VariantResult> ablate(const dataio::DomainSet& source, const dataio::DomainSet& target,
                                  const Labels& target_truth, const PipelineConfig& config);

struct BandResult {
    std::string bands;
    int input_width = 0;
    MetricsReport report;
};

/// The full pipeline once per single band and once with every band.
std::vector<BandResult> band_ablation(const dataio::DomainSet& source, const dataio::DomainSet& target,
                                      const Labels& target_truth, const PipelineConfig& config);

}  // namespace eegda::evalkit
