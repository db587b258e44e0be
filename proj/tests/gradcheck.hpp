#pragma once

// Finite-difference checks of the three stage objectives on small random
// networks (input 8, hidden 4, two classes, batch of 6).

#include "oracles.hpp"

#include "eegda/losses.hpp"
#include "eegda/net.hpp"

namespace gradcheck {

using namespace eegda;

inline net::Architecture small_arch() {
    net::Architecture a;
    a.input = 8;
    a.extractor = {4, 4};
    a.classifier = {4, 4};
    a.classes = 2;
    return a;
}

struct Case {
    net::ModelParams params;
    Matrix x;
    Labels labels;
    std::vector<bool> is_target;
    Vector class_weights;
    Vector q;
    losses::Centroids anchors;
    losses::AdaptAnchors adapt_anchors;
    losses::LossWeights weights;
};

inline Case make_case(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Case c;
    c.params = net::ModelParams::init(small_arch(), seed);
    // Nontrivial batch-norm parameters and running statistics.
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (auto& bn : c.params.norm) {
        for (Eigen::Index j = 0; j < bn.scale.size(); ++j) {
            bn.scale(j) = u(rng);
            bn.shift(j) = u(rng) - 1.0;
            bn.running_mean(j) = u(rng) - 1.0;
            bn.running_var(j) = u(rng);
        }
    }
    // Nonzero biases keep every ReLU input away from the kink at zero.
    for (auto& layer : c.params.extractor) layer.bias = oracle::random_matrix(1, layer.bias.cols(), rng, 0.3);
    for (auto* head : {&c.params.head1, &c.params.head2})
        for (auto& layer : *head) layer.bias = oracle::random_matrix(1, layer.bias.cols(), rng, 0.3);
    c.x = oracle::random_matrix(6, 8, rng);
    c.labels = {0, 1, 0, 1, 1, 0};
    c.is_target = {false, false, false, true, true, true};
    c.class_weights = Vector(2);
    c.class_weights << 0.8, 1.2;
    c.q = Vector(2);
    c.q << 0.4, 0.6;
    c.anchors = losses::Centroids::all_present(oracle::random_matrix(2, 4, rng));
    c.adapt_anchors.source = losses::Centroids::all_present(oracle::random_matrix(2, 4, rng));
    c.adapt_anchors.target = losses::Centroids::all_present(oracle::random_matrix(2, 4, rng));
    c.adapt_anchors.combined = losses::Centroids::all_present(oracle::random_matrix(2, 4, rng));
    return c;
}

inline losses::StageResult evaluate(const Case& c, losses::Stage stage, const net::ForwardOutput& out) {
    switch (stage) {
    case losses::Stage::Pretrain:
        return losses::pretrain_objective(out, c.labels, c.class_weights, c.q, c.weights);
    case losses::Stage::Cluster:
        return losses::cluster_objective(out, c.labels, c.class_weights, c.q, c.anchors, c.weights);
    case losses::Stage::Adapt:
        break;
    }
    return losses::adapt_objective(out, c.labels, c.is_target, c.class_weights, c.q, c.adapt_anchors, c.weights);
}

/// Largest relative error between the analytic and numeric gradient.
inline double stage_error(losses::Stage stage, std::uint64_t seed, net::Mode mode = net::Mode::Train) {
    const Case c = make_case(seed);
    const net::ForwardCache cache = net::forward_cached(c.params, c.x, mode);
    const losses::StageResult r = evaluate(c, stage, cache.out);
    const net::ModelParams analytic = net::backward(c.params, cache, r.grads);
    return oracle::gradient_check(c.params, analytic, [&](const net::ModelParams& p) {
        return evaluate(c, stage, net::forward_cached(p, c.x, mode).out).total;
    });
}

}  // namespace gradcheck
