#include "eegda/losses.hpp"

#include <cmath>
#include <string>

namespace eegda::losses {

void LossWeights::validate() const {
    for (double w : {alpha, gamma1, gamma2, beta1, beta2, beta3, beta4, t_m})
        if (!(w >= 0.0)) throw ConfigError("loss weights and t_m must be non-negative");
}

Centroids Centroids::all_present(Matrix values) {
    Centroids c;
    c.present.assign(static_cast<std::size_t>(values.rows()), true);
    c.values = std::move(values);
    return c;
}

namespace {

// Unit direction of (a - b), or zero when the points coincide.
RowVector unit_diff(const RowVector& a, const RowVector& b) {
    RowVector d = a - b;
    const double n = d.norm();
    if (n > 0.0) d /= n;
    else d.setZero();
    return d;
}

void check_labels(const Labels& labels, Eigen::Index rows, int classes) {
    if (static_cast<Eigen::Index>(labels.size()) != rows) throw Error("label count does not match row count");
    for (int y : labels)
        if (y >= classes) throw Error("label " + std::to_string(y) + " out of range");
}

// Gradient of sum_g q_g * per_group_g with respect to the probabilities.
Matrix dro_ce_grad(const Matrix& probs, const Labels& labels, const Vector& class_weights, const Vector& q,
                   const std::vector<int>& counts) {
    Matrix g = Matrix::Zero(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0) continue;
        const double p = probs(i, y);
        if (p <= kProbFloor) continue;
        g(i, y) = -q(y) * class_weights(y) / (static_cast<double>(counts[static_cast<std::size_t>(y)]) * p);
    }
    return g;
}

double dro_value(const WeightedCe& ce, const Vector& q) { return q.dot(ce.per_group); }

}  // namespace

WeightedCe weighted_ce(const Matrix& probs, const Labels& labels, const Vector& class_weights) {
    const int k = static_cast<int>(probs.cols());
    check_labels(labels, probs.rows(), k);
    if (class_weights.size() != k) throw Error("class weight count does not match class count");
    if ((class_weights.array() <= 0.0).any()) throw Error("class weights must be positive");

    WeightedCe out;
    out.per_group = Vector::Zero(k);
    out.counts.assign(static_cast<std::size_t>(k), 0);
    int total = 0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0) continue;
        const double term = -class_weights(y) * std::log(std::max(probs(i, y), kProbFloor));
        out.per_group(y) += term;
        out.overall += term;
        ++out.counts[static_cast<std::size_t>(y)];
        ++total;
    }
    for (int g = 0; g < k; ++g)
        if (out.counts[static_cast<std::size_t>(g)] > 0) out.per_group(g) /= out.counts[static_cast<std::size_t>(g)];
    if (total > 0) out.overall /= total;
    return out;
}

Vector inverse_frequency_weights(const Labels& labels, int classes) {
    Vector counts = Vector::Zero(classes);
    for (int y : labels) counts(y) += 1.0;
    Vector w = Vector::Ones(classes);
    int present = 0;
    double sum = 0.0;
    for (int k = 0; k < classes; ++k)
        if (counts(k) > 0) {
            w(k) = 1.0 / counts(k);
            sum += w(k);
            ++present;
        }
    if (present == 0) return Vector::Ones(classes);
    const double scale = present / sum;
    for (int k = 0; k < classes; ++k)
        if (counts(k) > 0) w(k) *= scale;
    return w;
}

GroupDroState GroupDroState::uniform(int groups, double eta) {
    return {Vector::Constant(groups, 1.0 / groups), eta};
}

std::pair<double, GroupDroState> group_dro(const Vector& per_group_losses, GroupDroState state) {
    if (per_group_losses.size() < 1 || per_group_losses.size() != state.q.size())
        throw Error("group_dro: loss vector does not match group weights");
    // Shift by the max exponent for stability; the renormalisation cancels it.
    const Eigen::ArrayXd expo = state.eta * per_group_losses.array();
    Eigen::ArrayXd q = state.q.array() * (expo - expo.maxCoeff()).exp();
    q /= q.sum();
    state.q = q.matrix();
    return {state.q.dot(per_group_losses), std::move(state)};
}

double l_dis(const Matrix& probs1, const Matrix& probs2, Matrix* grad1, Matrix* grad2) {
    if (probs1.rows() != probs2.rows() || probs1.cols() != probs2.cols()) throw Error("l_dis: shape mismatch");
    const auto n = static_cast<double>(probs1.rows());
    if (grad1) grad1->setZero(probs1.rows(), probs1.cols());
    if (grad2) grad2->setZero(probs1.rows(), probs1.cols());
    if (probs1.rows() == 0) return 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs1.rows(); ++i) {
        total += distance(probs1.row(i), probs2.row(i));
        if (grad1 || grad2) {
            const RowVector u = unit_diff(probs1.row(i), probs2.row(i)) / n;
            if (grad1) grad1->row(i) = u;
            if (grad2) grad2->row(i) = -u;
        }
    }
    return total / n;
}

double l_comp(const Matrix& features, const Labels& labels, const Centroids& centroids, Matrix* grad_features) {
    check_labels(labels, features.rows(), centroids.classes());
    if (grad_features) grad_features->setZero(features.rows(), features.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0) continue;
        if (!centroids.present[static_cast<std::size_t>(y)])
            throw Error("l_comp: no centroid for class " + std::to_string(y));
        total += distance(features.row(i), centroids.values.row(y));
        if (grad_features) grad_features->row(i) = unit_diff(features.row(i), centroids.values.row(y));
    }
    return total;
}

double l_sep(const Centroids& centroids, double t_m, Matrix* grad_centroids) {
    const int k = centroids.classes();
    if (grad_centroids) grad_centroids->setZero(centroids.values.rows(), centroids.values.cols());
    double total = 0.0;
    for (int a = 0; a < k; ++a) {
        if (!centroids.present[static_cast<std::size_t>(a)]) continue;
        for (int b = 0; b < k; ++b) {
            if (a == b || !centroids.present[static_cast<std::size_t>(b)]) continue;
            const double d = distance(centroids.values.row(b), centroids.values.row(a));
            if (d >= t_m) continue;
            total += t_m - d;
            if (grad_centroids) {
                const RowVector u = unit_diff(centroids.values.row(b), centroids.values.row(a));
                grad_centroids->row(b) -= u;
                grad_centroids->row(a) += u;
            }
        }
    }
    return total;
}

double l_cd(const Centroids& source, const Centroids& target, Matrix* grad_source, Matrix* grad_target,
            bool warn_on_skip) {
    if (source.classes() != target.classes()) throw Error("l_cd: class count mismatch");
    if (grad_source) grad_source->setZero(source.values.rows(), source.values.cols());
    if (grad_target) grad_target->setZero(target.values.rows(), target.values.cols());
    double total = 0.0;
    for (int k = 0; k < source.classes(); ++k) {
        const bool s = source.present[static_cast<std::size_t>(k)];
        const bool t = target.present[static_cast<std::size_t>(k)];
        if (!s || !t) {
            if (warn_on_skip && (s || t)) warn("l_cd: class " + std::to_string(k) + " present in one domain only");
            continue;
        }
        total += distance(source.values.row(k), target.values.row(k));
        const RowVector u = unit_diff(source.values.row(k), target.values.row(k));
        if (grad_source) grad_source->row(k) = u;
        if (grad_target) grad_target->row(k) = -u;
    }
    return total;
}

double l_cmb(const Centroids& batch_combined, const Centroids& global_combined, Matrix* grad_batch) {
    if (batch_combined.classes() != global_combined.classes()) throw Error("l_cmb: class count mismatch");
    if (grad_batch) grad_batch->setZero(batch_combined.values.rows(), batch_combined.values.cols());
    double total = 0.0;
    for (int k = 0; k < batch_combined.classes(); ++k) {
        if (!batch_combined.present[static_cast<std::size_t>(k)] || !global_combined.present[static_cast<std::size_t>(k)])
            continue;
        total += distance(batch_combined.values.row(k), global_combined.values.row(k));
        if (grad_batch) grad_batch->row(k) = unit_diff(batch_combined.values.row(k), global_combined.values.row(k));
    }
    return total;
}

Centroids batch_centroids(const Matrix& features, const Labels& labels, int classes) {
    check_labels(labels, features.rows(), classes);
    Centroids c;
    c.values = Matrix::Zero(classes, features.cols());
    std::vector<int> counts(static_cast<std::size_t>(classes), 0);
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0) continue;
        c.values.row(y) += features.row(i);
        ++counts[static_cast<std::size_t>(y)];
    }
    c.present.resize(static_cast<std::size_t>(classes));
    for (int k = 0; k < classes; ++k) {
        c.present[static_cast<std::size_t>(k)] = counts[static_cast<std::size_t>(k)] > 0;
        if (counts[static_cast<std::size_t>(k)] > 0) c.values.row(k) /= counts[static_cast<std::size_t>(k)];
    }
    return c;
}

void scatter_centroid_grad(const Matrix& grad_centroids, const Labels& labels, const Centroids& centroids,
                           Matrix& grad_features) {
    std::vector<int> counts(static_cast<std::size_t>(centroids.classes()), 0);
    for (int y : labels)
        if (y >= 0) ++counts[static_cast<std::size_t>(y)];
    for (Eigen::Index i = 0; i < grad_features.rows(); ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0) continue;
        grad_features.row(i) += grad_centroids.row(y) / counts[static_cast<std::size_t>(y)];
    }
}

double stage_total(Stage stage, const StageTerms& t, const LossWeights& w) {
    auto need = [](const std::optional<double>& v, const char* name) {
        if (!v) throw Error(std::string("stage_total: missing term ") + name);
        return *v;
    };
    switch (stage) {
    case Stage::Pretrain:
        return need(t.cls, "cls") + w.alpha * need(t.dis, "dis");
    case Stage::Cluster:
        return need(t.cls, "cls") + w.gamma1 * need(t.comp, "comp") + w.gamma2 * need(t.sep, "sep");
    case Stage::Adapt:
        return need(t.cls, "cls") + w.beta1 * (need(t.comp_s, "comp_s") + need(t.comp_t, "comp_t")) +
               w.beta2 * (need(t.sep_s, "sep_s") + need(t.sep_t, "sep_t")) + w.beta3 * need(t.cd, "cd") +
               w.beta4 * need(t.cmb, "cmb");
    }
    throw Error("stage_total: unknown stage");
}

void check_finite(const StageTerms& t, double total) {
    const std::pair<const char*, const std::optional<double>*> named[] = {
        {"cls", &t.cls},       {"dis", &t.dis},       {"comp", &t.comp}, {"sep", &t.sep},
        {"comp_s", &t.comp_s}, {"comp_t", &t.comp_t}, {"sep_s", &t.sep_s}, {"sep_t", &t.sep_t},
        {"cd", &t.cd},         {"cmb", &t.cmb},
    };
    for (const auto& [name, value] : named)
        if (*value && !std::isfinite(**value)) throw NumericalError(std::string("non-finite loss term ") + name);
    if (!std::isfinite(total)) throw NumericalError("non-finite total loss");
}

StageResult pretrain_objective(const net::ForwardOutput& out, const Labels& labels, const Vector& class_weights,
                               const Vector& q, const LossWeights& weights) {
    StageResult r;
    const WeightedCe ce = weighted_ce(out.probs_avg, labels, class_weights);
    r.terms.cls = dro_value(ce, q);
    Matrix g1, g2;
    r.terms.dis = l_dis(out.probs1, out.probs2, &g1, &g2);
    r.total = stage_total(Stage::Pretrain, r.terms, weights);

    const Matrix g_avg = dro_ce_grad(out.probs_avg, labels, class_weights, q, ce.counts);
    r.grads.probs1 = 0.5 * g_avg + weights.alpha * g1;
    r.grads.probs2 = 0.5 * g_avg + weights.alpha * g2;
    return r;
}

StageResult cluster_objective(const net::ForwardOutput& out, const Labels& labels, const Vector& class_weights,
                              const Vector& q, const Centroids& anchors, const LossWeights& weights) {
    StageResult r;
    const int k = static_cast<int>(out.probs_avg.cols());
    const WeightedCe ce = weighted_ce(out.probs_avg, labels, class_weights);
    r.terms.cls = dro_value(ce, q);

    Matrix g_comp;
    r.terms.comp = l_comp(out.features, labels, anchors, &g_comp);

    const Centroids batch = batch_centroids(out.features, labels, k);
    Matrix g_sep_c;
    r.terms.sep = l_sep(batch, weights.t_m, &g_sep_c);
    r.total = stage_total(Stage::Cluster, r.terms, weights);

    const Matrix g_avg = dro_ce_grad(out.probs_avg, labels, class_weights, q, ce.counts);
    r.grads.probs1 = 0.5 * g_avg;
    r.grads.probs2 = 0.5 * g_avg;
    r.grads.features = weights.gamma1 * g_comp;
    Matrix g_sep = Matrix::Zero(out.features.rows(), out.features.cols());
    scatter_centroid_grad(g_sep_c, labels, batch, g_sep);
    r.grads.features += weights.gamma2 * g_sep;
    return r;
}

StageResult adapt_objective(const net::ForwardOutput& out, const Labels& labels, const std::vector<bool>& is_target,
                            const Vector& class_weights, const Vector& q, const AdaptAnchors& anchors,
                            const LossWeights& weights) {
    const int k = static_cast<int>(out.probs_avg.cols());
    const auto rows = out.features.rows();
    check_labels(labels, rows, k);
    if (static_cast<Eigen::Index>(is_target.size()) != rows) throw Error("adapt_objective: mask size mismatch");

    Labels src(labels.size(), -1), tgt(labels.size(), -1);
    for (std::size_t i = 0; i < labels.size(); ++i) (is_target[i] ? tgt : src)[i] = labels[i];

    StageResult r;
    const WeightedCe ce = weighted_ce(out.probs_avg, src, class_weights);
    r.terms.cls = dro_value(ce, q);

    Matrix g_comp_s, g_comp_t;
    r.terms.comp_s = l_comp(out.features, src, anchors.source, &g_comp_s);
    r.terms.comp_t = l_comp(out.features, tgt, anchors.target, &g_comp_t);

    const Centroids bs = batch_centroids(out.features, src, k);
    const Centroids bt = batch_centroids(out.features, tgt, k);
    Matrix g_sep_s, g_sep_t;
    r.terms.sep_s = l_sep(bs, weights.t_m, &g_sep_s);
    r.terms.sep_t = l_sep(bt, weights.t_m, &g_sep_t);

    Matrix g_cd_s, g_cd_t;
    r.terms.cd = l_cd(bs, bt, &g_cd_s, &g_cd_t, false);

    Centroids bm;
    bm.values = 0.5 * (bs.values + bt.values);
    bm.present.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c)
        bm.present[static_cast<std::size_t>(c)] = bs.present[static_cast<std::size_t>(c)] && bt.present[static_cast<std::size_t>(c)];
    Matrix g_cmb;
    r.terms.cmb = l_cmb(bm, anchors.combined, &g_cmb);

    r.total = stage_total(Stage::Adapt, r.terms, weights);

    const Matrix g_avg = dro_ce_grad(out.probs_avg, src, class_weights, q, ce.counts);
    r.grads.probs1 = 0.5 * g_avg;
    r.grads.probs2 = 0.5 * g_avg;

    Matrix gf = weights.beta1 * (g_comp_s + g_comp_t);
    const Matrix g_src_c = weights.beta2 * g_sep_s + weights.beta3 * g_cd_s + 0.5 * weights.beta4 * g_cmb;
    const Matrix g_tgt_c = weights.beta2 * g_sep_t + weights.beta3 * g_cd_t + 0.5 * weights.beta4 * g_cmb;
    scatter_centroid_grad(g_src_c, src, bs, gf);
    scatter_centroid_grad(g_tgt_c, tgt, bt, gf);
    r.grads.features = std::move(gf);
    return r;
}

}  // namespace eegda::losses
