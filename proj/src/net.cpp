#include "eegda/net.hpp"

#include <cmath>
#include <string>

namespace eegda::net {

void Architecture::validate() const {
    if (input < 1 || classes < 1) throw ConfigError("architecture needs input >= 1 and classes >= 1");
    for (int w : extractor)
        if (w < 1) throw ConfigError("extractor widths must be positive");
    for (int w : classifier)
        if (w < 1) throw ConfigError("classifier widths must be positive");
}

std::int64_t parameter_count(const Architecture& a) {
    auto dense = [](std::int64_t in, std::int64_t out) { return in * out + out; };
    const std::int64_t ext = dense(a.input, a.extractor[0]) + 2 * a.extractor[0] +
                             dense(a.extractor[0], a.extractor[1]) + 2 * a.extractor[1];
    const std::int64_t head = dense(a.extractor[1], a.classifier[0]) + dense(a.classifier[0], a.classifier[1]) +
                              dense(a.classifier[1], a.classes);
    return ext + 2 * head;
}

namespace {

DenseLayer zero_dense(int in, int out) { return {Matrix::Zero(in, out), Matrix::Zero(1, out)}; }

BatchNorm fresh_norm(int width) {
    return {Matrix::Ones(1, width), Matrix::Zero(1, width), Matrix::Zero(1, width), Matrix::Ones(1, width)};
}

std::array<DenseLayer, 3> zero_head(const Architecture& a) {
    return {zero_dense(a.extractor[1], a.classifier[0]), zero_dense(a.classifier[0], a.classifier[1]),
            zero_dense(a.classifier[1], a.classes)};
}

void he_uniform(Matrix& w, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_grad(const Matrix& upstream, const Matrix& pre) {
    return (pre.array() > 0.0).select(upstream, 0.0);
}

Matrix affine(const Matrix& x, const DenseLayer& layer) {
    Matrix y = x * layer.weight;
    y.rowwise() += layer.bias.row(0);
    return y;
}

// Vector-Jacobian product of a row-wise softmax.
Matrix softmax_backward(const Matrix& probs, const Matrix& upstream) {
    const Vector dot = (probs.array() * upstream.array()).rowwise().sum();
    return (probs.array() * (upstream.colwise() - dot).array()).matrix();
}

}  // namespace

ModelParams ModelParams::zeros(const Architecture& arch) {
    arch.validate();
    ModelParams p;
    p.arch = arch;
    p.extractor = {zero_dense(arch.input, arch.extractor[0]), zero_dense(arch.extractor[0], arch.extractor[1])};
    p.norm = {fresh_norm(arch.extractor[0]), fresh_norm(arch.extractor[1])};
    p.head1 = zero_head(arch);
    p.head2 = zero_head(arch);
    return p;
}

ModelParams ModelParams::init(const Architecture& arch, std::uint64_t seed) {
    ModelParams p = zeros(arch);
    Rng rng(seed);
    for (auto& layer : p.extractor) he_uniform(layer.weight, rng);
    for (auto& layer : p.head1) he_uniform(layer.weight, rng);
    for (auto& layer : p.head2) he_uniform(layer.weight, rng);
    return p;
}

std::vector<Matrix*> ModelParams::trainable() {
    std::vector<Matrix*> out;
    for (int i = 0; i < 2; ++i) {
        out.push_back(&extractor[i].weight);
        out.push_back(&extractor[i].bias);
        out.push_back(&norm[i].scale);
        out.push_back(&norm[i].shift);
    }
    for (auto* head : {&head1, &head2})
        for (auto& layer : *head) {
            out.push_back(&layer.weight);
            out.push_back(&layer.bias);
        }
    return out;
}

std::vector<const Matrix*> ModelParams::trainable() const {
    std::vector<const Matrix*> out;
    for (Matrix* m : const_cast<ModelParams*>(this)->trainable()) out.push_back(m);
    return out;
}

std::int64_t parameter_count(const ModelParams& params) {
    std::int64_t total = 0;
    for (const Matrix* m : params.trainable()) total += m->size();
    return total;
}

ForwardCache forward_cached(const ModelParams& params, const Matrix& batch, Mode mode) {
    if (batch.cols() != params.arch.input)
        throw Error("forward: batch has " + std::to_string(batch.cols()) + " columns, expected " +
                    std::to_string(params.arch.input));
    if (mode == Mode::Train && batch.rows() < 2) throw Error("forward: train mode needs a batch of at least 2");

    ForwardCache cache;
    cache.mode = mode;
    cache.input = batch;

    Matrix act = batch;
    for (int i = 0; i < 2; ++i) {
        auto& layer = cache.ext[i];
        const auto& bn = params.norm[i];
        layer.input = act;
        Matrix z = affine(act, params.extractor[i]);
        RowVector mean, var;
        if (mode == Mode::Train) {
            mean = z.colwise().mean();
            var = (z.rowwise() - mean).array().square().colwise().mean();
        } else {
            mean = bn.running_mean.row(0);
            var = bn.running_var.row(0);
        }
        layer.batch_mean = mean;
        layer.batch_var = var;
        const RowVector inv_std = (var.array() + kBatchNormEps).rsqrt();
        layer.xhat = ((z.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
        layer.pre_relu = (layer.xhat.array().rowwise() * bn.scale.row(0).array()).matrix();
        layer.pre_relu.rowwise() += bn.shift.row(0);
        act = relu(layer.pre_relu);
    }
    cache.out.features = act;

    auto run_head = [&](const std::array<DenseLayer, 3>& head, ForwardCache::Head& hc) {
        Matrix h = act;
        for (int j = 0; j < 2; ++j) {
            hc.inputs[j] = h;
            hc.pre_relu[j] = affine(h, head[j]);
            h = relu(hc.pre_relu[j]);
        }
        hc.inputs[2] = h;
        return affine(h, head[2]);
    };
    cache.out.logits1 = run_head(params.head1, cache.heads[0]);
    cache.out.logits2 = run_head(params.head2, cache.heads[1]);
    cache.out.probs1 = softmax_rows(cache.out.logits1);
    cache.out.probs2 = softmax_rows(cache.out.logits2);
    cache.out.probs_avg = 0.5 * (cache.out.probs1 + cache.out.probs2);
    return cache;
}

void commit_batch_stats(ModelParams& params, const ForwardCache& cache) {
    if (cache.mode != Mode::Train) return;
    const auto m = static_cast<double>(cache.input.rows());
    for (int i = 0; i < 2; ++i) {
        auto& bn = params.norm[i];
        const RowVector unbiased = cache.ext[i].batch_var * (m / (m - 1.0));
        bn.running_mean = (1.0 - kBatchNormMomentum) * bn.running_mean + kBatchNormMomentum * cache.ext[i].batch_mean;
        bn.running_var = (1.0 - kBatchNormMomentum) * bn.running_var + kBatchNormMomentum * unbiased;
    }
}

ForwardOutput forward(ModelParams& params, const Matrix& batch, Mode mode) {
    ForwardCache cache = forward_cached(params, batch, mode);
    commit_batch_stats(params, cache);
    return std::move(cache.out);
}

ForwardOutput forward(const ModelParams& params, const Matrix& batch) {
    return std::move(forward_cached(params, batch, Mode::Eval).out);
}

ModelParams backward(const ModelParams& params, const ForwardCache& cache, const OutputGrads& upstream) {
    ModelParams grads = ModelParams::zeros(params.arch);
    grads.norm[0].running_var.setZero();
    grads.norm[1].running_var.setZero();

    const auto rows = cache.input.rows();
    Matrix d_features = Matrix::Zero(rows, params.arch.feature_width());
    if (upstream.features.size()) d_features += upstream.features;

    const Matrix* dprobs[2] = {&upstream.probs1, &upstream.probs2};
    const std::array<DenseLayer, 3>* heads[2] = {&params.head1, &params.head2};
    std::array<DenseLayer, 3>* head_grads[2] = {&grads.head1, &grads.head2};
    const Matrix* probs[2] = {&cache.out.probs1, &cache.out.probs2};

    for (int h = 0; h < 2; ++h) {
        if (dprobs[h]->size() == 0) continue;
        const auto& hc = cache.heads[h];
        Matrix delta = softmax_backward(*probs[h], *dprobs[h]);
        for (int j = 2; j >= 0; --j) {
            (*head_grads[h])[j].weight = hc.inputs[j].transpose() * delta;
            (*head_grads[h])[j].bias = delta.colwise().sum();
            Matrix d_in = delta * (*heads[h])[j].weight.transpose();
            if (j > 0)
                delta = relu_grad(d_in, hc.pre_relu[j - 1]);
            else
                d_features += d_in;
        }
    }

    Matrix delta = d_features;
    for (int i = 1; i >= 0; --i) {
        const auto& layer = cache.ext[i];
        const auto& bn = params.norm[i];
        const Matrix d_pre = relu_grad(delta, layer.pre_relu);
        grads.norm[i].scale = (d_pre.array() * layer.xhat.array()).colwise().sum();
        grads.norm[i].shift = d_pre.colwise().sum();

        const Matrix d_xhat = (d_pre.array().rowwise() * bn.scale.row(0).array()).matrix();
        const RowVector inv_std = (layer.batch_var.array() + kBatchNormEps).rsqrt();
        Matrix d_z;
        if (cache.mode == Mode::Train) {
            const double m = static_cast<double>(rows);
            const RowVector sum_d = d_xhat.colwise().sum();
            const RowVector sum_dx = (d_xhat.array() * layer.xhat.array()).colwise().sum();
            Matrix t = m * d_xhat;
            t.rowwise() -= sum_d;
            t -= (layer.xhat.array().rowwise() * sum_dx.array()).matrix();
            d_z = ((t.array().rowwise() * inv_std.array()) / m).matrix();
        } else {
            d_z = (d_xhat.array().rowwise() * inv_std.array()).matrix();
        }
        grads.extractor[i].weight = layer.input.transpose() * d_z;
        grads.extractor[i].bias = d_z.colwise().sum();
        if (i > 0) delta = d_z * params.extractor[i].weight.transpose();
    }
    return grads;
}

OptimizerState OptimizerState::for_params(const ModelParams& params, double learning_rate, double weight_decay) {
    OptimizerState s;
    s.learning_rate = learning_rate;
    s.weight_decay = weight_decay;
    for (const Matrix* m : params.trainable()) {
        s.first_moment.push_back(Matrix::Zero(m->rows(), m->cols()));
        s.second_moment.push_back(Matrix::Zero(m->rows(), m->cols()));
    }
    return s;
}

void adam_step(ModelParams& params, const ModelParams& grads, OptimizerState& state) {
    auto p = params.trainable();
    auto g = grads.trainable();
    if (state.first_moment.size() != p.size()) throw Error("optimizer state does not match parameters");

    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i]->rows() != g[i]->rows() || p[i]->cols() != g[i]->cols())
            throw Error("adam_step: gradient shape mismatch");
        Matrix& m = state.first_moment[i];
        Matrix& v = state.second_moment[i];
        m = state.beta1 * m + (1.0 - state.beta1) * *g[i];
        v = state.beta2 * v + (1.0 - state.beta2) * g[i]->cwiseProduct(*g[i]);
        const Matrix update = (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
        *p[i] -= state.learning_rate * (update + state.weight_decay * *p[i]);
    }
}

}  // namespace eegda::net
