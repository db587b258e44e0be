#pragma once

// Feature extractor F (two dense layers with batch normalization) followed by
// two parallel three-layer classifiers, with hand-derived reverse-mode
// gradients and an Adam optimizer.

#include "eegda/common.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace eegda::net {

struct Architecture {
    int input = 160;
    std::array<int, 2> extractor = {138, 60};
    std::array<int, 2> classifier = {21, 16};
    int classes = 2;

    int feature_width() const { return extractor[1]; }
    void validate() const;
    bool operator==(const Architecture&) const = default;
};

/// Trainable scalars implied by the widths (weights, biases, batch-norm scale and shift).
std::int64_t parameter_count(const Architecture& arch);

struct DenseLayer {
    Matrix weight;  // in x out
    Matrix bias;    // 1 x out
};

struct BatchNorm {
    Matrix scale;  // 1 x width
    Matrix shift;
    Matrix running_mean;
    Matrix running_var;
};

struct ModelParams {
    Architecture arch;
    std::array<DenseLayer, 2> extractor;
    std::array<BatchNorm, 2> norm;
    std::array<DenseLayer, 3> head1;
    std::array<DenseLayer, 3> head2;

    /// Zero-initialised parameters with unit batch-norm scale and running variance.
    static ModelParams zeros(const Architecture& arch);
    /// Uniform fan-in (He) initialisation of the weights; biases start at zero.
    static ModelParams init(const Architecture& arch, std::uint64_t seed);

    /// Trainable tensors in a fixed order. Running statistics are excluded.
    std::vector<Matrix*> trainable();
    std::vector<const Matrix*> trainable() const;
};

std::int64_t parameter_count(const ModelParams& params);

constexpr double kBatchNormEps = 1e-5;
constexpr double kBatchNormMomentum = 0.1;

enum class Mode { Train, Eval };

struct ForwardOutput {
    Matrix features;  // F(x), one row per sample
    Matrix logits1, logits2;
    Matrix probs1, probs2;
    Matrix probs_avg;
};

/// Intermediate activations retained for the backward pass.
struct ForwardCache {
    Mode mode = Mode::Eval;
    Matrix input;
    struct ExtractorLayer {
        Matrix input;     // activation entering the layer
        Matrix xhat;      // normalized pre-activation
        Matrix pre_relu;  // scale * xhat + shift
        RowVector batch_mean, batch_var;
    };
    std::array<ExtractorLayer, 2> ext;
    struct Head {
        std::array<Matrix, 3> inputs;  // activation entering each dense layer
        std::array<Matrix, 2> pre_relu;
    };
    std::array<Head, 2> heads;
    ForwardOutput out;
};

/// Forward pass without touching running statistics.
ForwardCache forward_cached(const ModelParams& params, const Matrix& batch, Mode mode);

/// Fold the batch statistics of a train-mode pass into the running estimates.
void commit_batch_stats(ModelParams& params, const ForwardCache& cache);

/// Train mode uses batch statistics and updates the running estimates; eval
/// mode uses running statistics and leaves params untouched.
ForwardOutput forward(ModelParams& params, const Matrix& batch, Mode mode);
ForwardOutput forward(const ModelParams& params, const Matrix& batch);

/// Upstream gradients of a scalar objective with respect to the network outputs.
/// Empty matrices mean "no dependence".
struct OutputGrads {
    Matrix probs1;
    Matrix probs2;
    Matrix features;
};

/// Gradients laid out like ModelParams (running statistics stay zero).
ModelParams backward(const ModelParams& params, const ForwardCache& cache, const OutputGrads& upstream);

struct OptimizerState {
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::int64_t step = 0;
    double learning_rate = 1e-3;
    double weight_decay = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState for_params(const ModelParams& params, double learning_rate, double weight_decay);
};

/// Adam with bias correction and decoupled weight decay.
void adam_step(ModelParams& params, const ModelParams& grads, OptimizerState& state);

}  // namespace eegda::net
