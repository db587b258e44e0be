#include "eegda/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace eegda::pipeline {

std::size_t AdaptationTrace::total_selected() const {
    std::size_t n = 0;
    for (const auto& it : iterations) n += it.selected.size();
    return n;
}

int class_count(const Labels& labels) {
    int k = 0;
    for (int y : labels) {
        if (y < 0) throw Error("negative class label");
        k = std::max(k, y + 1);
    }
    return k;
}

namespace {

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(idx[i - 1], idx[pick(rng)]);
    }
    return idx;
}

// Contiguous batches over a permutation; a trailing batch of one joins the previous one.
std::vector<std::vector<std::size_t>> batches(const std::vector<std::size_t>& order, int batch_size) {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
        const auto end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    if (out.size() > 1 && out.back().size() < 2) {
        auto tail = out.back();
        out.pop_back();
        out.back().insert(out.back().end(), tail.begin(), tail.end());
    }
    return out;
}

void accumulate(losses::StageTerms& into, const losses::StageTerms& t) {
    auto add = [](std::optional<double>& a, const std::optional<double>& b) {
        if (b) a = a.value_or(0.0) + *b;
    };
    add(into.cls, t.cls);
    add(into.dis, t.dis);
    add(into.comp, t.comp);
    add(into.sep, t.sep);
    add(into.comp_s, t.comp_s);
    add(into.comp_t, t.comp_t);
    add(into.sep_s, t.sep_s);
    add(into.sep_t, t.sep_t);
    add(into.cd, t.cd);
    add(into.cmb, t.cmb);
}

void scale(losses::StageTerms& t, double s) {
    for (auto* v : {&t.cls, &t.dis, &t.comp, &t.sep, &t.comp_s, &t.comp_t, &t.sep_s, &t.sep_t, &t.cd, &t.cmb})
        if (*v) **v *= s;
}

Labels take_labels(const Labels& labels, const std::vector<std::size_t>& rows) {
    Labels out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(labels[r]);
    return out;
}

// One optimisation step. objective(out, q) returns the stage result for the batch.
template <typename Objective>
losses::StageResult train_step(TrainState& state, const Matrix& batch, const Labels& dro_labels,
                               Objective&& objective, net::Mode mode = net::Mode::Train) {
    net::ForwardCache cache = net::forward_cached(state.params, batch, mode);
    const losses::WeightedCe ce = losses::weighted_ce(cache.out.probs_avg, dro_labels, state.class_weights);
    std::tie(std::ignore, state.dro) = losses::group_dro(ce.per_group, state.dro);
    losses::StageResult r = objective(cache.out, state.dro.q);
    losses::check_finite(r.terms, r.total);
    const net::ModelParams grads = net::backward(state.params, cache, r.grads);
    net::adam_step(state.params, grads, state.optimizer);
    if (mode == net::Mode::Train) net::commit_batch_stats(state.params, cache);
    return r;
}

net::Mode later_stage_mode(const PipelineConfig& config) {
    return config.freeze_norm_after_pretrain ? net::Mode::Eval : net::Mode::Train;
}

const Labels& require_labels(const dataio::DomainSet& set) {
    if (!set.labels) throw Error("source set has no labels");
    return *set.labels;
}

}  // namespace

TrainState init_state(const dataio::DomainSet& source, const PipelineConfig& config) {
    config.validate();
    const Labels& labels = require_labels(source);
    const int k = class_count(labels);
    TrainState s;
    s.params = net::ModelParams::init(config.architecture(static_cast<int>(source.features.cols()), k),
                                      substream_seed(config.seed, "init"));
    s.optimizer = net::OptimizerState::for_params(s.params, config.learning_rate, config.weight_decay);
    s.dro = losses::GroupDroState::uniform(k, config.dro_eta);
    s.class_weights = losses::inverse_frequency_weights(labels, k);
    return s;
}

std::vector<EpochLoss> pretrain(TrainState& state, const dataio::DomainSet& source, const PipelineConfig& config) {
    const Labels& labels = require_labels(source);
    std::vector<EpochLoss> history;
    for (int epoch = 0; epoch < config.max_epoch_1; ++epoch) {
        Rng rng = make_rng(config.seed, "pretrain", static_cast<std::uint64_t>(epoch));
        EpochLoss rec{epoch, 0.0, {}};
        const auto plan = batches(shuffled(source.size(), rng), config.batch_size);
        for (const auto& rows : plan) {
            const Matrix x = take_rows(source.features, rows);
            const Labels y = take_labels(labels, rows);
            try {
                const auto r = train_step(state, x, y, [&](const net::ForwardOutput& out, const Vector& q) {
                    return losses::pretrain_objective(out, y, state.class_weights, q, config.weights);
                });
                rec.total += r.total;
                accumulate(rec.terms, r.terms);
            } catch (const NumericalError& e) {
                throw NumericalError(std::string("pretrain epoch ") + std::to_string(epoch) + ": " + e.what());
            }
        }
        if (!plan.empty()) {
            rec.total /= static_cast<double>(plan.size());
            scale(rec.terms, 1.0 / static_cast<double>(plan.size()));
        }
        history.push_back(rec);
    }
    return history;
}

clusterstats::ClusterStats cluster_stage(TrainState& state, const dataio::DomainSet& source,
                                         const dataio::DomainSet& target, const PipelineConfig& config,
                                         std::vector<EpochLoss>* losses_out) {
    const Labels& labels = require_labels(source);
    const int k = state.classes();

    const clusterstats::Predictions pre = clusterstats::predict(state.params, source.features);
    const losses::Centroids anchors =
        losses::Centroids::all_present(clusterstats::centroids(pre.features, labels, k));

    for (int epoch = 0; epoch < config.max_epoch_2; ++epoch) {
        Rng rng = make_rng(config.seed, "cluster", static_cast<std::uint64_t>(epoch));
        EpochLoss rec{epoch, 0.0, {}};
        const auto plan = batches(shuffled(source.size(), rng), config.batch_size);
        for (const auto& rows : plan) {
            const Matrix x = take_rows(source.features, rows);
            const Labels y = take_labels(labels, rows);
            try {
                const auto r = train_step(state, x, y, [&](const net::ForwardOutput& out, const Vector& q) {
                    return losses::cluster_objective(out, y, state.class_weights, q, anchors, config.weights);
                }, later_stage_mode(config));
                rec.total += r.total;
                accumulate(rec.terms, r.terms);
            } catch (const NumericalError& e) {
                throw NumericalError(std::string("cluster epoch ") + std::to_string(epoch) + ": " + e.what());
            }
        }
        if (!plan.empty()) {
            rec.total /= static_cast<double>(plan.size());
            scale(rec.terms, 1.0 / static_cast<double>(plan.size()));
        }
        if (losses_out) losses_out->push_back(rec);
    }

    clusterstats::ClusterStats stats = clusterstats::source_stats(state.params, source.features, labels);
    if (target.size() > 0)
        clusterstats::update_target(stats, clusterstats::predict(state.params, target.features), config.softmax_threshold);
    return stats;
}

SelectionResult gptds_select(const Matrix& target_features, const std::vector<std::size_t>& pool,
                             const net::ModelParams& params, const clusterstats::ClusterStats& stats,
                             double softmax_threshold) {
    SelectionResult result;
    if (pool.empty()) return result;
    const clusterstats::Predictions pred = clusterstats::predict(params, take_rows(target_features, pool));

    // Proximity candidates first, then the confidence filter on those.
    std::vector<bool> chosen(pool.size(), false);
    for (const auto& sel : clusterstats::confident_subset(pred, stats, softmax_threshold)) {
        const auto r = static_cast<Eigen::Index>(sel.index);
        const int y = sel.label;
        const double d = distance(pred.features.row(r), stats.cc_s.row(y));
        if (d < stats.m_ctr(y) + stats.sigma(y) / 2.0) chosen[sel.index] = true;
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (chosen[i])
            result.selected.push_back({pool[i], pred.label[i]});
        else
            result.remaining.push_back(pool[i]);
    }
    return result;
}

AdaptationTrace adapt(TrainState& state, clusterstats::ClusterStats& stats, const dataio::DomainSet& source,
                      const dataio::DomainSet& target, const PipelineConfig& config) {
    const Labels& labels = require_labels(source);
    const int k = state.classes();
    AdaptationTrace trace;

    std::vector<std::size_t> pool(target.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<clusterstats::Selection> admitted;  // pseudo-labels frozen at selection

    for (int itr = 1; itr <= config.max_itr; ++itr) {
        IterationRecord rec;
        rec.iteration = itr;
        rec.pool_before = pool.size();
        rec.stats = stats;
        rec.params = state.params;
        SelectionResult sel = gptds_select(target.features, pool, state.params, stats, config.softmax_threshold);
        rec.selected = sel.selected;
        rec.per_class.assign(static_cast<std::size_t>(k), 0);
        for (const auto& s : sel.selected) ++rec.per_class[static_cast<std::size_t>(s.label)];
        pool = std::move(sel.remaining);
        rec.pool_after = pool.size();
        if (rec.selected.empty()) {
            trace.iterations.push_back(std::move(rec));
            break;
        }
        admitted.insert(admitted.end(), rec.selected.begin(), rec.selected.end());

        const losses::AdaptAnchors anchors = stats.anchors();
        for (int epoch = 0; epoch < config.max_epoch_3; ++epoch) {
            Rng rng = make_rng(config.seed, "adapt", static_cast<std::uint64_t>(itr) * 100003u + static_cast<std::uint64_t>(epoch));
            const auto plan = batches(shuffled(source.size(), rng), config.batch_size);
            const auto target_order = shuffled(admitted.size(), rng);
            EpochLoss erec{epoch, 0.0, {}};
            for (std::size_t b = 0; b < plan.size(); ++b) {
                // Round-robin: target sample j goes to batch j mod (number of batches).
                std::vector<std::size_t> tgt_rows;
                for (std::size_t j = b; j < target_order.size(); j += plan.size()) tgt_rows.push_back(target_order[j]);

                const auto& src_rows = plan[b];
                const auto rows = static_cast<Eigen::Index>(src_rows.size() + tgt_rows.size());
                Matrix x(rows, source.features.cols());
                Labels y;
                std::vector<bool> is_target;
                Eigen::Index r = 0;
                for (auto s : src_rows) {
                    x.row(r++) = source.features.row(static_cast<Eigen::Index>(s));
                    y.push_back(labels[s]);
                    is_target.push_back(false);
                }
                for (auto t : tgt_rows) {
                    const auto& a = admitted[t];
                    x.row(r++) = target.features.row(static_cast<Eigen::Index>(a.index));
                    y.push_back(a.label);
                    is_target.push_back(true);
                }
                Labels dro_labels = y;
                for (std::size_t i = 0; i < dro_labels.size(); ++i)
                    if (is_target[i]) dro_labels[i] = -1;
                try {
                    const auto res = train_step(state, x, dro_labels, [&](const net::ForwardOutput& out, const Vector& q) {
                        return losses::adapt_objective(out, y, is_target, state.class_weights, q, anchors, config.weights);
                    }, later_stage_mode(config));
                    erec.total += res.total;
                    accumulate(erec.terms, res.terms);
                } catch (const NumericalError& e) {
                    throw NumericalError("adapt iteration " + std::to_string(itr) + " epoch " + std::to_string(epoch) +
                                         ": " + e.what());
                }
            }
            if (!plan.empty()) {
                erec.total /= static_cast<double>(plan.size());
                scale(erec.terms, 1.0 / static_cast<double>(plan.size()));
            }
            rec.epochs.push_back(erec);
        }

        // Refresh centroids and spreads; m_dis stays frozen.
        const double m_dis = stats.m_dis;
        stats = clusterstats::source_stats(state.params, source.features, labels);
        stats.m_dis = m_dis;
        clusterstats::update_target(stats, clusterstats::predict(state.params, target.features), config.softmax_threshold);
        trace.iterations.push_back(std::move(rec));
    }

    if (config.recompute_m_dis)
        stats.m_dis = clusterstats::mean_discrepancy(clusterstats::predict(state.params, source.features));
    return trace;
}

RunResult run(const dataio::DomainSet& source, const dataio::DomainSet& target, const PipelineConfig& config) {
    RunResult r;
    r.state = init_state(source, config);
    r.pretrain_losses = pretrain(r.state, source, config);
    r.stats = cluster_stage(r.state, source, target, config, &r.cluster_losses);
    r.trace = adapt(r.state, r.stats, source, target, config);
    return r;
}

}  // namespace eegda::pipeline
