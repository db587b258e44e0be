#include <doctest.h>

#include "eegda/pctta.hpp"

using namespace eegda;
using namespace eegda::pctta;

namespace {

dataio::SynthBenchmark tiny_benchmark() {
    dataio::SynthSpec spec;
    spec.channels = 4;
    spec.source_count = 30;
    spec.target_count = 30;
    return dataio::synth_benchmark(spec);
}

net::Architecture tiny_arch() {
    net::Architecture a;
    a.input = 20;
    a.extractor = {8, 6};
    a.classifier = {6, 4};
    return a;
}

clusterstats::ClusterStats stats_with_m_dis(double m_dis) {
    clusterstats::ClusterStats s;
    s.m_dis = m_dis;
    return s;
}

}  // namespace

TEST_CASE("gate requires both high entropy and high discrepancy") {
    CHECK(gate(0.95, 0.2, 0.9, 0.1));
    CHECK(gate(0.9, 0.2, 0.9, 0.1));
    CHECK_FALSE(gate(0.89, 0.2, 0.9, 0.1));
    CHECK_FALSE(gate(0.95, 0.1, 0.9, 0.1));
}

TEST_CASE("gate is monotone in tau") {
    const std::vector<double> h = {0.1, 0.5, 0.7, 0.9, 0.95, 0.99};
    int last = 1 << 30;
    for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
        int n = 0;
        for (double e : h) n += gate(e, 1.0, tau, 0.0);
        CHECK(n <= last);
        last = n;
    }
}

TEST_CASE("majority vote and tie breaking") {
    using V = std::vector<Vote>;
    CHECK(majority_vote(V{{1, VoteSource::Original}, {0, VoteSource::Augmented}, {0, VoteSource::Augmented}}, 2) == 0);
    // Tie including the original keeps the original.
    CHECK(majority_vote(V{{1, VoteSource::Original}, {0, VoteSource::Augmented}}, 2) == 1);
    // Tie without the original goes to the lowest class.
    CHECK(majority_vote(V{{0, VoteSource::Original}, {2, VoteSource::Augmented}, {2, VoteSource::Augmented},
                          {1, VoteSource::Augmented}, {1, VoteSource::Augmented}},
                        3) == 1);
    CHECK_THROWS(majority_vote(V{}, 2));
}

TEST_CASE("default fan-out is two noise and two resample transforms") {
    const PipelineConfig cfg;
    const auto t = transforms(cfg);
    REQUIRE(t.size() == 4);
    CHECK(cfg.tta_count() == 4);
    CHECK(t[0].kind == Transform::Kind::Noise);
    CHECK(t[1].amount == 0.1);
    CHECK(t[2].kind == Transform::Kind::Resample);
    CHECK(t[3].amount == 1.1);
}

TEST_CASE("augmented features are deterministic per seed and sample") {
    const auto b = tiny_benchmark();
    const auto fan = transforms(PipelineConfig{});
    const Matrix a = augmented_features(b.target, 3, fan, 42);
    CHECK(a == augmented_features(b.target, 3, fan, 42));
    CHECK(a.row(0) != augmented_features(b.target, 3, fan, 43).row(0));
    // The resample rows do not depend on the seed.
    CHECK(a.row(2) == augmented_features(b.target, 3, fan, 43).row(2));
    CHECK(a.cols() == b.target.features.cols());
}

TEST_CASE("cost accounting matches the gate") {
    const auto b = tiny_benchmark();
    const auto params = net::ModelParams::init(tiny_arch(), 1);
    PipelineConfig cfg;
    cfg.tau = 0.0;  // every sample passes the entropy test

    const auto never = stats_with_m_dis(1e9);
    const auto none = batch_infer(b.target, Model{params, never}, cfg, InferenceMode::PcTta);
    CHECK(none.cost.gated == 0);
    CHECK(none.cost.augmented_passes == 0);

    const auto always = stats_with_m_dis(-1.0);
    const auto all = batch_infer(b.target, Model{params, always}, cfg, InferenceMode::PcTta);
    CHECK(all.cost.gated == 30);
    CHECK(all.cost.augmented_passes == 4 * 30);
    for (const auto& d : all.decisions) CHECK(d.votes.size() == 5);

    const auto full = batch_infer(b.target, Model{params, never}, cfg, InferenceMode::FullTta);
    CHECK(full.cost.gated == 30);
    CHECK(full.cost.augmented_passes == 4 * 30);

    const auto off = batch_infer(b.target, Model{params, always}, cfg, InferenceMode::NoTta);
    CHECK(off.cost.augmented_passes == 0);
    CHECK(off.cost.total == 30);
}

TEST_CASE("ungated samples keep the plain prediction") {
    const auto b = tiny_benchmark();
    const auto params = net::ModelParams::init(tiny_arch(), 2);
    const auto never = stats_with_m_dis(1e9);
    const PipelineConfig cfg;
    const auto tta = batch_infer(b.target, Model{params, never}, cfg, InferenceMode::PcTta);
    const auto plain = batch_infer(b.target, Model{params, never}, cfg, InferenceMode::NoTta);
    CHECK(tta.labels == plain.labels);
    const auto one = pc_tta_predict(b.target, 5, Model{params, never}, cfg);
    CHECK(one.final_label == plain.labels[5]);
    CHECK_FALSE(one.gated);
}

TEST_CASE("TTA without raw segments fails clearly") {
    auto b = tiny_benchmark();
    dataio::DomainSet bare = b.target;
    bare.segments = dataio::SegmentStore{};
    const auto params = net::ModelParams::init(tiny_arch(), 3);
    const auto always = stats_with_m_dis(-1.0);
    PipelineConfig cfg;
    cfg.tau = 0.0;
    CHECK_THROWS_WITH(batch_infer(bare, Model{params, always}, cfg, InferenceMode::PcTta),
                      doctest::Contains("TTA requires raw segments"));
}
