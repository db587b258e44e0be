#pragma once

// Latent-space cluster statistics of the source domain and the
// confident-prediction filter applied to unlabeled target samples.

#include "eegda/common.hpp"
#include "eegda/losses.hpp"
#include "eegda/net.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace eegda::clusterstats {

struct ClusterStats {
    Matrix cc_s;    // K x d source centroids
    Vector m_ctr;   // mean distance to the class centroid
    Vector sigma;   // population std of those distances
    double m_dis = 0.0;
    Matrix cc_t;    // target centroids (fall back to cc_s per class)
    Matrix cc_m;    // (cc_s + cc_t) / 2

    int classes() const { return static_cast<int>(cc_s.rows()); }
    losses::AdaptAnchors anchors() const;
};

/// Eval-mode predictions for a set of samples, one entry per row.
struct Predictions {
    Matrix probs_avg;
    Matrix features;
    Labels label;
    Vector max_prob;
    Vector entropy_bits;
    Vector discrepancy;  // ||p1 - p2||

    std::size_t size() const { return label.size(); }
};

/// Shannon entropy in bits with 0 log 0 = 0.
template <typename Derived>
double entropy_bits(const Eigen::MatrixBase<Derived>& probs) {
    double h = 0.0;
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
        const double p = probs(k);
        if (p > 0.0) h -= p * std::log2(p);
    }
    return h;
}

Predictions predict(const net::ModelParams& params, const Matrix& features);

/// Per-class mean of the rows. Throws if a class in [0, classes) has no row.
Matrix centroids(const Matrix& features, const Labels& labels, int classes);

/// Mean and population standard deviation of the per-class distances to the centroid.
std::pair<Vector, Vector> intra_stats(const Matrix& features, const Labels& labels, const Matrix& centroids);

double mean_discrepancy(const Predictions& predictions);

struct Selection {
    std::size_t index;
    int label;
};

/// Rows with max_prob > threshold, distance to cc_s of the predicted class
/// below m_ctr of that class, and discrepancy below m_dis (all strict).
std::vector<Selection> confident_subset(const Predictions& predictions, const ClusterStats& stats,
                                        double softmax_threshold);

/// Target centroids from confident rows, falling back to cc_s for classes with
/// none, and the combined midpoint centroids.
std::pair<Matrix, Matrix> target_centroids(const Matrix& confident_features, const Labels& confident_labels,
                                           const Matrix& cc_s);

/// cc_s, m_ctr, sigma and m_dis over the labeled source set (eval mode).
ClusterStats source_stats(const net::ModelParams& params, const Matrix& features, const Labels& labels);

/// Fill cc_t and cc_m from the confident subset of the target predictions.
void update_target(ClusterStats& stats, const Predictions& target, double softmax_threshold);

}  // namespace eegda::clusterstats
