#include <doctest.h>

#include "oracles.hpp"

#include "eegda/sigproc.hpp"

#include <numbers>

using namespace eegda;
using namespace eegda::sigproc;

namespace {

Vector cosine(Eigen::Index n, double k) {
    Vector x(n);
    for (Eigen::Index t = 0; t < n; ++t) x(t) = std::cos(2.0 * std::numbers::pi * k * static_cast<double>(t) / static_cast<double>(n));
    return x;
}

SignalSegment tone(double fs, double f, Eigen::Index n, int channels = 1) {
    SignalSegment s{Matrix(channels, n), fs};
    for (int c = 0; c < channels; ++c)
        for (Eigen::Index t = 0; t < n; ++t) s.samples(c, t) = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) / fs);
    return s;
}

}  // namespace

TEST_CASE("unit cosine at bin k gives PSD N/4 at k and N-k") {
    const Vector p = psd(cosine(256, 10));
    CHECK(std::abs(p(10) - 64.0) < 1e-9);
    CHECK(std::abs(p(246) - 64.0) < 1e-9);
    CHECK(std::abs(p.sum() - 128.0) < 1e-9);
    CHECK(p(11) < 1e-12);
}

TEST_CASE("periodogram matches the direct DFT and Parseval") {
    std::mt19937_64 rng(3);
    for (Eigen::Index n : {64, 100, 128}) {
        const Vector x = oracle::random_matrix(n, 1, rng);
        const Vector fast = psd(x), slow = oracle::direct_psd(x);
        CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-9 * slow.cwiseAbs().maxCoeff());
        CHECK(std::abs(fast.sum() - x.squaredNorm()) <= 1e-9 * x.squaredNorm());
    }
}

TEST_CASE("band power sums bins inside the closed band") {
    Vector spectrum = Vector::LinSpaced(128, 0, 127);
    // fs 128, N 128: bin i sits at i Hz.
    CHECK(band_power(spectrum, {"alpha", 8, 13}, 128.0) == doctest::Approx(8 + 9 + 10 + 11 + 12 + 13));
    std::vector<std::string> warnings;
    auto old = set_warning_sink([&](std::string_view m) { warnings.emplace_back(m); });
    CHECK(band_power(spectrum, {"gap", 8.2, 8.8}, 128.0) == 0.0);
    set_warning_sink(old);
    CHECK(warnings.size() == 1);
}

TEST_CASE("features are channel-major and band-minor") {
    SignalSegment s = tone(128.0, 10.0, 256, 2);
    s.samples.row(1) *= 2.0;
    const RowVector f = features(s, default_bands());
    REQUIRE(f.size() == 10);
    // 10 Hz lands in alpha (index 2); the second channel has 4x the power.
    CHECK(f(2) > 100.0 * f(0));
    CHECK(f(7) == doctest::Approx(4.0 * f(2)));
}

TEST_CASE("band subsets and masks") {
    const auto bands = parse_band_subset("theta,gamma");
    CHECK(bands.size() == 2);
    CHECK(band_mask(bands) == 0b10010);
    CHECK(bands_from_mask(0b10010)[1].name == "gamma");
    CHECK(parse_band_subset("all").size() == 5);
    CHECK_THROWS(parse_band_subset("kappa"));
}

TEST_CASE("segmentation windows and too-short records") {
    SignalSegment rec{Matrix::Zero(2, 128 * 10), 128.0};
    const auto segs = segment(rec, 2.0, 1.0);
    CHECK(segs.size() == 9);
    CHECK(segs[0].length() == 256);
    SignalSegment shortrec{Matrix::Zero(2, 100), 128.0};
    CHECK_THROWS_WITH(segment(shortrec, 2.0, 1.0), doctest::Contains("record too short"));
}

TEST_CASE("bandpass keeps the passband and removes the stopband") {
    BandpassFilter f(128.0, 4.0, 30.0);
    CHECK(f.gain(12.0) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(f.gain(4.0) == doctest::Approx(std::sqrt(0.5)).epsilon(0.02));
    CHECK(f.gain(55.0) < 0.05);

    const auto pass = f.apply(tone(128.0, 12.0, 1024));
    const auto stop = f.apply(tone(128.0, 55.0, 1024));
    const double in_rms = std::sqrt(0.5);
    const auto mid = [](const SignalSegment& s) { return s.samples.middleCols(256, 512); };
    CHECK(std::sqrt(mid(pass).squaredNorm() / 512.0) == doctest::Approx(in_rms).epsilon(0.03));
    CHECK(std::sqrt(mid(stop).squaredNorm() / 512.0) < 0.01);
    CHECK_THROWS(BandpassFilter(128.0, 4.0, 70.0));
}

TEST_CASE("zero-phase filtering does not shift a passband tone") {
    const SignalSegment in = tone(128.0, 12.0, 1024);
    const SignalSegment out = bandpass(in, 4.0, 30.0);
    const Matrix a = in.samples.middleCols(256, 512), b = out.samples.middleCols(256, 512);
    const double corr = (a.array() * b.array()).sum() / std::sqrt(a.squaredNorm() * b.squaredNorm());
    CHECK(corr > 0.999);
}

TEST_CASE("normalizer maps to [-1, 1], clamps and round-trips") {
    Matrix f(3, 3);
    f << 0, 5, 1, 10, 5, 2, 5, 5, 3;
    const auto t = NormalizationTransform::fit(f);
    const Matrix z = t.apply(f);
    CHECK(z(0, 0) == -1.0);
    CHECK(z(1, 0) == 1.0);
    CHECK(z(2, 0) == 0.0);
    CHECK(z.col(1).isZero());
    CHECK((t.invert(z).col(0) - f.col(0)).cwiseAbs().maxCoeff() < 1e-12);
    Matrix outside(1, 3);
    outside << 20, 5, -4;
    const Matrix c = t.apply(outside);
    CHECK(c(0, 0) == 1.0);
    CHECK(c(0, 2) == -1.0);
}

TEST_CASE("noise augmentation scales with channel std and is seeded") {
    SignalSegment s = tone(128.0, 10.0, 4096, 2);
    s.samples.row(1) *= 10.0;
    const auto a = augment_noise(s, 0.1, 99), b = augment_noise(s, 0.1, 99), c = augment_noise(s, 0.1, 100);
    CHECK(a.samples == b.samples);
    CHECK(a.samples != c.samples);
    const Matrix d = a.samples - s.samples;
    const double sd0 = std::sqrt(d.row(0).squaredNorm() / 4096.0), sd1 = std::sqrt(d.row(1).squaredNorm() / 4096.0);
    CHECK(sd0 == doctest::Approx(0.1 * std::sqrt(0.5)).epsilon(0.05));
    CHECK(sd1 == doctest::Approx(10.0 * sd0).epsilon(0.08));
    CHECK(augment_noise(s, 0.0, 1).samples == s.samples);
}

TEST_CASE("resample round trip keeps length and low frequencies") {
    const SignalSegment s = tone(128.0, 3.0, 256);
    for (double factor : {0.9, 1.1}) {
        const auto r = augment_resample(s, factor);
        CHECK(r.length() == 256);
        CHECK((r.samples - s.samples).cwiseAbs().maxCoeff() < 0.02);
    }
    CHECK((augment_resample(s, 1.0).samples - s.samples).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS(augment_resample(s, 3.0));
}

TEST_CASE("invalid segments are rejected") {
    SignalSegment bad{Matrix::Zero(1, 10), 128.0};
    bad.samples(0, 3) = std::nan("");
    CHECK_THROWS(bad.validate());
    SignalSegment rate{Matrix::Zero(1, 10), 0.0};
    CHECK_THROWS(rate.validate());
}
