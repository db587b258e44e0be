#pragma once

// Run configuration: every hyperparameter, addressable through flat dotted
// keys ("loss.alpha = 0.5") in a plain-text config file.

#include "eegda/common.hpp"
#include "eegda/losses.hpp"
#include "eegda/net.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace eegda {

enum class InferenceMode { PcTta, FullTta, NoTta };

InferenceMode parse_inference_mode(const std::string& text);
std::string to_string(InferenceMode mode);

/// Ordered key/value pairs as read from a config file or the command line.
using KeyValues = std::map<std::string, std::string>;

/// Parse "key = value" lines; '#' starts a comment. Throws ConfigError with the line number.
KeyValues parse_key_values(const std::string& text);
KeyValues load_key_values(const std::string& path);

struct PipelineConfig {
    losses::LossWeights weights;
    double dro_eta = 0.01;

    int max_epoch_1 = 30;
    int max_epoch_2 = 10;
    int max_epoch_3 = 5;
    int max_itr = 10;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double weight_decay = 5e-4;
    // Batch-norm running statistics are frozen after pre-training, so the
    // cluster terms see the same features as the eval-mode centroids.
    bool freeze_norm_after_pretrain = true;

    double softmax_threshold = 0.99;
    bool recompute_m_dis = false;

    double tau = 0.9;  // entropy threshold in bits
    std::vector<double> noise_levels = {0.05, 0.1};
    std::vector<double> resample_factors = {0.9, 1.1};
    InferenceMode mode = InferenceMode::PcTta;

    std::array<int, 2> extractor = {138, 60};
    std::array<int, 2> classifier = {21, 16};

    std::string bands = "all";
    double window_s = 2.0;
    double step_s = 1.0;
    bool filter_enabled = false;
    double filter_low = 0.3;
    double filter_high = 50.0;
    bool share_source_normalization = false;

    std::uint64_t seed = 42;

    /// Number of test-time transforms N.
    int tta_count() const { return static_cast<int>(noise_levels.size() + resample_factors.size()); }

    net::Architecture architecture(int input, int classes) const;

    /// Consume every key this config understands; unknown keys are left in place.
    void apply(KeyValues& keys);
    /// Every field as dotted keys, sorted.
    KeyValues to_key_values() const;
    void validate() const;
};

std::string format_key_values(const KeyValues& keys);

/// Throws ConfigError listing any leftover keys.
void reject_unknown(const KeyValues& keys);

}  // namespace eegda
