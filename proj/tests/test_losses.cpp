#include <doctest.h>

#include "oracles.hpp"

#include "eegda/losses.hpp"

#include <numbers>

using namespace eegda;
using losses::Centroids;

TEST_CASE("l_dis examples") {
    Matrix p1(2, 2), p2(2, 2);
    p1 << 1, 0, 1, 0;
    p2 << 1, 0, 0, 1;
    CHECK(losses::l_dis(p1, p1) == 0.0);
    CHECK(losses::l_dis(p1.topRows(1), p2.bottomRows(1)) == doctest::Approx(std::numbers::sqrt2).epsilon(1e-15));
    CHECK(losses::l_dis(p1, p2) == doctest::Approx(std::numbers::sqrt2 / 2.0).epsilon(1e-15));
}

TEST_CASE("l_comp examples and missing centroid") {
    Matrix f(2, 2);
    f << 1, 0, 0, 2;
    Centroids c = Centroids::all_present(Matrix::Zero(1, 2));
    CHECK(losses::l_comp(f, {0, 0}, c) == doctest::Approx(3.0));
    CHECK(losses::l_comp(Matrix::Zero(2, 2), {0, 0}, c) == 0.0);

    Centroids partial = Centroids::all_present(Matrix::Zero(2, 2));
    partial.present[1] = false;
    CHECK_THROWS_AS(losses::l_comp(f, {0, 1}, partial), Error);
}

TEST_CASE("l_sep examples") {
    CHECK(losses::l_sep(Centroids::all_present(Matrix::Zero(2, 3)), 10.0) == doctest::Approx(20.0));
    Matrix far(2, 1);
    far << 0, 10;
    CHECK(losses::l_sep(Centroids::all_present(far), 10.0) == 0.0);
    CHECK(losses::l_sep(Centroids::all_present(Matrix::Zero(1, 3)), 10.0) == 0.0);
}

TEST_CASE("l_sep is non-increasing in centroid distance") {
    double last = 1e300;
    for (double gap = 0.0; gap < 12.0; gap += 0.5) {
        Matrix c(2, 1);
        c << 0, gap;
        const double v = losses::l_sep(Centroids::all_present(c), 10.0);
        CHECK(v <= last);
        last = v;
    }
}

TEST_CASE("l_cd examples and single-domain classes") {
    Matrix s = Matrix::Zero(1, 2), t(1, 2);
    t << 3, 4;
    CHECK(losses::l_cd(Centroids::all_present(s), Centroids::all_present(t)) == doctest::Approx(5.0));
    CHECK(losses::l_cd(Centroids::all_present(t), Centroids::all_present(t)) == 0.0);

    std::vector<std::string> warnings;
    auto old = set_warning_sink([&](std::string_view m) { warnings.emplace_back(m); });
    Centroids ts = Centroids::all_present(Matrix::Zero(2, 2));
    Centroids tt = ts;
    tt.present[1] = false;
    ts.values(1, 0) = 7.0;
    CHECK(losses::l_cd(ts, tt) == 0.0);
    set_warning_sink(old);
    CHECK(warnings.size() == 1);
}

TEST_CASE("l_cmb examples") {
    Matrix g = Matrix::Zero(2, 2);
    Matrix b = g;
    b(0, 1) = 1.0;
    CHECK(losses::l_cmb(Centroids::all_present(g), Centroids::all_present(g)) == 0.0);
    CHECK(losses::l_cmb(Centroids::all_present(b), Centroids::all_present(g)) == doctest::Approx(1.0));
    Centroids absent = Centroids::all_present(b);
    absent.present[0] = false;
    CHECK(losses::l_cmb(absent, Centroids::all_present(g)) == 0.0);
}

TEST_CASE("loss terms match loop oracles") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> size(4, 50);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = size(rng), d = 5, k = 3;
        const Matrix f = oracle::random_matrix(n, d, rng);
        Labels y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i % k;
        const Matrix c = oracle::random_matrix(k, d, rng, 2.0);
        const Matrix c2 = oracle::random_matrix(k, d, rng, 2.0);
        CHECK(std::abs(losses::l_comp(f, y, Centroids::all_present(c)) - oracle::l_comp(f, y, c)) < 1e-10);
        CHECK(std::abs(losses::l_sep(Centroids::all_present(c), 10.0) - oracle::l_sep(c, 10.0)) < 1e-10);
        CHECK(std::abs(losses::l_cd(Centroids::all_present(c), Centroids::all_present(c2)) - oracle::l_cd(c, c2)) < 1e-10);
        CHECK(std::abs(losses::l_cmb(Centroids::all_present(c), Centroids::all_present(c2)) - oracle::l_cd(c, c2)) < 1e-10);
    }
}

TEST_CASE("stage totals combine the weighted terms") {
    losses::LossWeights w;
    losses::StageTerms t;
    t.cls = 1.0;
    t.dis = 2.0;
    CHECK(losses::stage_total(losses::Stage::Pretrain, t, w) == doctest::Approx(2.0));
    CHECK_THROWS_AS(losses::stage_total(losses::Stage::Cluster, t, w), Error);
    t.comp = 3.0;
    t.sep = 4.0;
    CHECK(losses::stage_total(losses::Stage::Cluster, t, w) == doctest::Approx(1.0 + 0.1 * 3.0 + 0.1 * 4.0));
    t.comp_s = 1.0;
    t.comp_t = 2.0;
    t.sep_s = 3.0;
    t.sep_t = 4.0;
    t.cd = 5.0;
    t.cmb = 6.0;
    CHECK(losses::stage_total(losses::Stage::Adapt, t, w) ==
          doctest::Approx(1.0 + 0.1 * 3.0 + 0.1 * 7.0 + 0.5 * 5.0 + 0.1 * 6.0));
}

TEST_CASE("weighted cross entropy ignores unlabeled rows and clamps") {
    Matrix p(3, 2);
    p << 0.9, 0.1, 0.0, 1.0, 0.5, 0.5;
    Vector w = Vector::Ones(2);
    const auto ce = losses::weighted_ce(p, {0, 0, -1}, w);
    CHECK(ce.counts[0] == 2);
    CHECK(ce.overall == doctest::Approx((-std::log(0.9) - std::log(losses::kProbFloor)) / 2.0));
    CHECK(std::isfinite(ce.overall));
}

TEST_CASE("inverse frequency weights have mean one") {
    const Vector w = losses::inverse_frequency_weights({0, 0, 0, 1}, 2);
    CHECK(w.mean() == doctest::Approx(1.0));
    CHECK(w(1) == doctest::Approx(3.0 * w(0)));
}

TEST_CASE("group DRO with one group is the weighted cross entropy") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    Matrix p(8, 2);
    for (Eigen::Index i = 0; i < 8; ++i) {
        p(i, 0) = u(rng);
        p(i, 1) = 1.0 - p(i, 0);
    }
    Vector w(1);
    w << 1.7;
    const auto ce = losses::weighted_ce(p.leftCols(1), Labels(8, 0), w);
    auto [robust, state] = losses::group_dro(ce.per_group, losses::GroupDroState::uniform(1, 0.01));
    CHECK(std::abs(robust - ce.overall) < 1e-12);
    CHECK(state.q(0) == 1.0);
}

TEST_CASE("group DRO robust loss lies between mean and max") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        Vector l(4);
        for (int g = 0; g < 4; ++g) l(g) = u(rng);
        auto [robust, state] = losses::group_dro(l, losses::GroupDroState::uniform(4, 0.5));
        CHECK(robust >= l.mean() - 1e-12);
        CHECK(robust <= l.maxCoeff() + 1e-12);
        CHECK(state.q.sum() == doctest::Approx(1.0));
    }
}

TEST_CASE("check_finite names the offending term") {
    losses::StageTerms t;
    t.cls = 1.0;
    t.comp = std::nan("");
    try {
        losses::check_finite(t, 1.0);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("comp") != std::string::npos);
    }
}
