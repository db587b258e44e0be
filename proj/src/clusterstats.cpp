#include "eegda/clusterstats.hpp"

#include <cmath>
#include <string>

namespace eegda::clusterstats {

losses::AdaptAnchors ClusterStats::anchors() const {
    return {losses::Centroids::all_present(cc_s), losses::Centroids::all_present(cc_t),
            losses::Centroids::all_present(cc_m)};
}

Predictions predict(const net::ModelParams& params, const Matrix& features) {
    Predictions p;
    const auto n = features.rows();
    const int k = params.arch.classes;
    p.probs_avg.resize(n, k);
    p.features.resize(n, params.arch.feature_width());
    p.label.resize(static_cast<std::size_t>(n));
    p.max_prob.resize(n);
    p.entropy_bits.resize(n);
    p.discrepancy.resize(n);

    constexpr Eigen::Index chunk = 1024;
    for (Eigen::Index start = 0; start < n; start += chunk) {
        const Eigen::Index len = std::min(chunk, n - start);
        const net::ForwardOutput out = net::forward(params, features.middleRows(start, len));
        p.probs_avg.middleRows(start, len) = out.probs_avg;
        p.features.middleRows(start, len) = out.features;
        for (Eigen::Index i = 0; i < len; ++i) {
            const Eigen::Index r = start + i;
            const int y = argmax(out.probs_avg.row(i));
            p.label[static_cast<std::size_t>(r)] = y;
            p.max_prob(r) = out.probs_avg(i, y);
            p.entropy_bits(r) = entropy_bits(out.probs_avg.row(i));
            p.discrepancy(r) = distance(out.probs1.row(i), out.probs2.row(i));
        }
    }
    return p;
}

Matrix centroids(const Matrix& features, const Labels& labels, int classes) {
    const losses::Centroids c = losses::batch_centroids(features, labels, classes);
    for (int k = 0; k < classes; ++k)
        if (!c.present[static_cast<std::size_t>(k)]) throw Error("centroids: class " + std::to_string(k) + " is empty");
    return c.values;
}

std::pair<Vector, Vector> intra_stats(const Matrix& features, const Labels& labels, const Matrix& centroids) {
    const auto k = centroids.rows();
    Vector sum = Vector::Zero(k), count = Vector::Zero(k);
    std::vector<double> dist(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        dist[i] = distance(features.row(static_cast<Eigen::Index>(i)), centroids.row(y));
        sum(y) += dist[i];
        count(y) += 1.0;
    }
    Vector mean = Vector::Zero(k), sq = Vector::Zero(k);
    for (Eigen::Index c = 0; c < k; ++c)
        if (count(c) > 0) mean(c) = sum(c) / count(c);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double d = dist[i] - mean(labels[i]);
        sq(labels[i]) += d * d;
    }
    Vector sigma = Vector::Zero(k);
    for (Eigen::Index c = 0; c < k; ++c)
        if (count(c) > 0) sigma(c) = std::sqrt(sq(c) / count(c));
    return {mean, sigma};
}

double mean_discrepancy(const Predictions& predictions) {
    if (predictions.size() == 0) throw Error("mean_discrepancy: no samples");
    return predictions.discrepancy.mean();
}

std::vector<Selection> confident_subset(const Predictions& predictions, const ClusterStats& stats,
                                        double softmax_threshold) {
    std::vector<Selection> out;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const int y = predictions.label[i];
        if (!(predictions.max_prob(r) > softmax_threshold)) continue;
        if (!(distance(predictions.features.row(r), stats.cc_s.row(y)) < stats.m_ctr(y))) continue;
        if (!(predictions.discrepancy(r) < stats.m_dis)) continue;
        out.push_back({i, y});
    }
    return out;
}

std::pair<Matrix, Matrix> target_centroids(const Matrix& confident_features, const Labels& confident_labels,
                                           const Matrix& cc_s) {
    const int k = static_cast<int>(cc_s.rows());
    const losses::Centroids found = losses::batch_centroids(confident_features, confident_labels, k);
    Matrix cc_t = cc_s;
    for (int c = 0; c < k; ++c)
        if (found.present[static_cast<std::size_t>(c)]) cc_t.row(c) = found.values.row(c);
    Matrix cc_m = 0.5 * (cc_s + cc_t);
    return {cc_t, cc_m};
}

ClusterStats source_stats(const net::ModelParams& params, const Matrix& features, const Labels& labels) {
    const Predictions p = predict(params, features);
    ClusterStats s;
    s.cc_s = centroids(p.features, labels, params.arch.classes);
    std::tie(s.m_ctr, s.sigma) = intra_stats(p.features, labels, s.cc_s);
    s.m_dis = mean_discrepancy(p);
    s.cc_t = s.cc_s;
    s.cc_m = s.cc_s;
    return s;
}

void update_target(ClusterStats& stats, const Predictions& target, double softmax_threshold) {
    const auto chosen = confident_subset(target, stats, softmax_threshold);
    Matrix feats(static_cast<Eigen::Index>(chosen.size()), target.features.cols());
    Labels labels;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        feats.row(static_cast<Eigen::Index>(i)) = target.features.row(static_cast<Eigen::Index>(chosen[i].index));
        labels.push_back(chosen[i].label);
    }
    std::tie(stats.cc_t, stats.cc_m) = target_centroids(feats, labels, stats.cc_s);
}

}  // namespace eegda::clusterstats
