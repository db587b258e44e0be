#pragma once

// Objective terms of the three training stages and their gradients with
// respect to the network outputs.

#include "eegda/common.hpp"
#include "eegda/net.hpp"

#include <optional>
#include <utility>

namespace eegda::losses {

struct LossWeights {
    double alpha = 0.5;
    double gamma1 = 0.1;
    double gamma2 = 0.1;
    double beta1 = 0.1;
    double beta2 = 0.1;
    double beta3 = 0.5;
    double beta4 = 0.1;
    double t_m = 10.0;  // separation margin in latent units

    void validate() const;
};

/// Per-class centroids with a presence flag; absent classes carry no value.
struct Centroids {
    Matrix values;  // K x d
    std::vector<bool> present;

    int classes() const { return static_cast<int>(values.rows()); }
    static Centroids all_present(Matrix values);
};

constexpr double kProbFloor = 1e-12;

struct WeightedCe {
    double overall = 0.0;     // mean over samples of -w_y log p(y)
    Vector per_group;         // mean within each class
    std::vector<int> counts;  // samples per class
};

/// Groups are the classes. Probabilities below 1e-12 are clamped.
WeightedCe weighted_ce(const Matrix& probs, const Labels& labels, const Vector& class_weights);

/// Inverse class frequency, rescaled to mean 1 over the classes that occur.
Vector inverse_frequency_weights(const Labels& labels, int classes);

struct GroupDroState {
    Vector q;
    double eta = 0.01;

    static GroupDroState uniform(int groups, double eta);
};

/// Exponentiated-gradient update of q, then the q-weighted loss.
std::pair<double, GroupDroState> group_dro(const Vector& per_group_losses, GroupDroState state);

/// Mean over rows of ||p1_i - p2_i||.
double l_dis(const Matrix& probs1, const Matrix& probs2, Matrix* grad1 = nullptr, Matrix* grad2 = nullptr);

/// Sum over samples of the distance from F(x_i) to its class centroid.
double l_comp(const Matrix& features, const Labels& labels, const Centroids& centroids, Matrix* grad_features = nullptr);

/// Sum over ordered pairs (k, l), k != l, of max(t_m - D(c_l, c_k), 0).
double l_sep(const Centroids& centroids, double t_m, Matrix* grad_centroids = nullptr);

/// Sum over classes of D(source_k, target_k). Classes present in only one set are skipped with a warning.
double l_cd(const Centroids& source, const Centroids& target, Matrix* grad_source = nullptr,
            Matrix* grad_target = nullptr, bool warn_on_skip = true);

/// Sum over classes present in the batch of D(batch_k, global_k).
double l_cmb(const Centroids& batch_combined, const Centroids& global_combined, Matrix* grad_batch = nullptr);

/// Per-class mean of the selected rows. Rows with a negative label are ignored.
Centroids batch_centroids(const Matrix& features, const Labels& labels, int classes);

/// Push a centroid gradient back onto the rows that formed each centroid.
void scatter_centroid_grad(const Matrix& grad_centroids, const Labels& labels, const Centroids& centroids,
                           Matrix& grad_features);

enum class Stage { Pretrain, Cluster, Adapt };

struct StageTerms {
    std::optional<double> cls;
    std::optional<double> dis;
    std::optional<double> comp;
    std::optional<double> sep;
    std::optional<double> comp_s, comp_t;
    std::optional<double> sep_s, sep_t;
    std::optional<double> cd;
    std::optional<double> cmb;
};

/// Weighted combination of the stage's terms. Missing terms throw.
double stage_total(Stage stage, const StageTerms& terms, const LossWeights& weights);

struct StageResult {
    double total = 0.0;
    StageTerms terms;
    net::OutputGrads grads;
};

/// Pre-training objective L_cls + alpha L_dis, with group weights q held fixed.
StageResult pretrain_objective(const net::ForwardOutput& out, const Labels& labels, const Vector& class_weights,
                               const Vector& q, const LossWeights& weights);

/// Cluster-shaping objective L_cls + gamma1 L_comp + gamma2 L_sep. anchors are the pre-stage source centroids.
StageResult cluster_objective(const net::ForwardOutput& out, const Labels& labels, const Vector& class_weights,
                              const Vector& q, const Centroids& anchors, const LossWeights& weights);

/// Fixed centroids used by the adaptation objective.
struct AdaptAnchors {
    Centroids source;
    Centroids target;
    Centroids combined;
};

/// Adaptation objective on a mixed batch. Rows flagged as target carry pseudo-labels
/// and are excluded from L_cls.
StageResult adapt_objective(const net::ForwardOutput& out, const Labels& labels, const std::vector<bool>& is_target,
                            const Vector& class_weights, const Vector& q, const AdaptAnchors& anchors,
                            const LossWeights& weights);

/// Throws NumericalError naming the first non-finite term.
void check_finite(const StageTerms& terms, double total);

}  // namespace eegda::losses
