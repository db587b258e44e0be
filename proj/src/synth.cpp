#include "eegda/dataio.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <numbers>

namespace eegda::dataio {

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double number(const std::string& key, const std::string& text) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError("config key " + key + ": '" + text + "' is not a number");
    return v;
}

// Random orthogonal matrix near the identity: Q factor of I + strength * G.
Matrix channel_rotation(int channels, double strength, Rng& rng) {
    std::normal_distribution<double> normal;
    Matrix a = Matrix::Identity(channels, channels);
    for (int j = 0; j < channels; ++j)
        for (int i = 0; i < channels; ++i) a(i, j) += strength * normal(rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < channels; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    return q;
}

struct Profile {
    Matrix base;                    // channels x bands log-amplitude
    std::vector<Matrix> modulation; // per class, channels x bands
};

sigproc::SignalSegment draw_sample(const SynthSpec& spec, const Profile& profile, int label, Rng& rng) {
    const auto& bands = sigproc::default_bands();
    const auto n = static_cast<Eigen::Index>(std::llround(spec.duration_s * spec.sample_rate));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    sigproc::SignalSegment seg{Matrix::Zero(spec.channels, n), spec.sample_rate};
    const double dt = 1.0 / spec.sample_rate;
    for (int c = 0; c < spec.channels; ++c) {
        for (std::size_t b = 0; b < bands.size(); ++b) {
            const auto bi = static_cast<Eigen::Index>(b);
            const double amp = std::exp(profile.base(c, bi) + spec.contrast * profile.modulation[label](c, bi) +
                                        spec.jitter * normal(rng)) / std::numbers::sqrt2;
            for (int tone = 0; tone < 2; ++tone) {
                const double f = bands[b].f_low + unit(rng) * (bands[b].f_high - bands[b].f_low);
                const double phase = 2.0 * std::numbers::pi * unit(rng);
                const double w = 2.0 * std::numbers::pi * f * dt;
                for (Eigen::Index t = 0; t < n; ++t) seg.samples(c, t) += amp * std::sin(w * static_cast<double>(t) + phase);
            }
        }
        for (Eigen::Index t = 0; t < n; ++t) seg.samples(c, t) += spec.noise * normal(rng);
    }
    return seg;
}

}  // namespace

void SynthSpec::apply(std::map<std::string, std::string>& keys) {
    const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters = {
        {"synth.classes", [this](auto& k, auto& v) { classes = static_cast<int>(number(k, v)); }},
        {"synth.channels", [this](auto& k, auto& v) { channels = static_cast<int>(number(k, v)); }},
        {"synth.sample_rate", [this](auto& k, auto& v) { sample_rate = number(k, v); }},
        {"synth.duration_s", [this](auto& k, auto& v) { duration_s = number(k, v); }},
        {"synth.source_count", [this](auto& k, auto& v) { source_count = static_cast<int>(number(k, v)); }},
        {"synth.target_count", [this](auto& k, auto& v) { target_count = static_cast<int>(number(k, v)); }},
        {"synth.contrast", [this](auto& k, auto& v) { contrast = number(k, v); }},
        {"synth.jitter", [this](auto& k, auto& v) { jitter = number(k, v); }},
        {"synth.noise", [this](auto& k, auto& v) { noise = number(k, v); }},
        {"synth.target_gain", [this](auto& k, auto& v) { target_gain = number(k, v); }},
        {"synth.target_rotation", [this](auto& k, auto& v) { target_rotation = number(k, v); }},
        {"synth.target_subjects", [this](auto& k, auto& v) { target_subjects = static_cast<int>(number(k, v)); }},
        {"synth.target_noise", [this](auto& k, auto& v) { target_noise = number(k, v); }},
        {"synth.informative_bands", [this](auto&, auto& v) { informative_bands = v; }},
        {"synth.seed", [this](auto& k, auto& v) { seed = static_cast<std::uint64_t>(number(k, v)); }},
    };
    for (auto it = keys.begin(); it != keys.end();) {
        auto s = setters.find(it->first);
        if (s == setters.end()) {
            ++it;
            continue;
        }
        s->second(it->first, it->second);
        it = keys.erase(it);
    }
}

std::map<std::string, std::string> SynthSpec::to_key_values() const {
    return {
        {"synth.classes", std::to_string(classes)},
        {"synth.channels", std::to_string(channels)},
        {"synth.sample_rate", fmt(sample_rate)},
        {"synth.duration_s", fmt(duration_s)},
        {"synth.source_count", std::to_string(source_count)},
        {"synth.target_count", std::to_string(target_count)},
        {"synth.contrast", fmt(contrast)},
        {"synth.jitter", fmt(jitter)},
        {"synth.noise", fmt(noise)},
        {"synth.target_gain", fmt(target_gain)},
        {"synth.target_rotation", fmt(target_rotation)},
        {"synth.target_subjects", std::to_string(target_subjects)},
        {"synth.target_noise", fmt(target_noise)},
        {"synth.informative_bands", informative_bands},
        {"synth.seed", std::to_string(seed)},
    };
}

void SynthSpec::validate() const {
    if (classes < 1 || channels < 1 || source_count < 1 || target_count < 1 || target_subjects < 1)
        throw ConfigError("synth counts must be positive");
    if (!(sample_rate > 100.0)) throw ConfigError("synth.sample_rate must exceed 100 Hz so the gamma band fits");
    if (!(duration_s > 0.0)) throw ConfigError("synth.duration_s must be positive");
    if (jitter < 0.0 || noise < 0.0 || target_noise < 0.0 || target_rotation < 0.0 || !(target_gain > 0.0))
        throw ConfigError("synth noise, jitter and rotation must be >= 0 and gain > 0");
}

SynthBenchmark synth_benchmark(const SynthSpec& spec) {
    spec.validate();
    const auto& bands = sigproc::default_bands();
    const auto nb = static_cast<Eigen::Index>(bands.size());
    const std::uint8_t informative = sigproc::band_mask(sigproc::parse_band_subset(spec.informative_bands));

    Profile profile;
    {
        Rng rng = make_rng(spec.seed, "synth.profile");
        std::normal_distribution<double> normal;
        profile.base = Matrix(spec.channels, nb);
        for (Eigen::Index b = 0; b < nb; ++b)
            for (int c = 0; c < spec.channels; ++c) profile.base(c, b) = 0.3 * normal(rng);
        for (int k = 0; k < spec.classes; ++k) {
            Matrix m(spec.channels, nb);
            for (Eigen::Index b = 0; b < nb; ++b)
                for (int c = 0; c < spec.channels; ++c) m(c, b) = (informative & (1u << b)) ? normal(rng) : 0.0;
            profile.modulation.push_back(std::move(m));
        }
    }
    std::vector<Matrix> rotations;
    for (int j = 0; j < spec.target_subjects; ++j) {
        Rng rng = make_rng(spec.seed, "synth.rotation", static_cast<std::uint64_t>(j));
        const double strength = spec.target_rotation * (j + 1) / spec.target_subjects;
        rotations.push_back(channel_rotation(spec.channels, strength, rng));
    }

    auto make_domain = [&](int count, Domain domain) {
        std::vector<sigproc::SignalSegment> segs;
        segs.reserve(static_cast<std::size_t>(count));
        Labels labels(static_cast<std::size_t>(count));
        const char* stream = domain == Domain::Source ? "synth.source" : "synth.target";
        for (int i = 0; i < count; ++i) {
            Rng rng = make_rng(spec.seed, stream, static_cast<std::uint64_t>(i));
            const int y = i % spec.classes;
            labels[static_cast<std::size_t>(i)] = y;
            sigproc::SignalSegment seg = draw_sample(spec, profile, y, rng);
            if (domain == Domain::Target) {
                // Consecutive blocks of samples share a subject.
                const auto subject = static_cast<std::size_t>(
                    static_cast<long long>(i) * spec.target_subjects / count);
                seg.samples = spec.target_gain * (rotations[subject] * seg.samples);
                std::normal_distribution<double> normal;
                for (Eigen::Index t = 0; t < seg.samples.cols(); ++t)
                    for (Eigen::Index c = 0; c < seg.samples.rows(); ++c) seg.samples(c, t) += spec.target_noise * normal(rng);
            }
            segs.push_back(std::move(seg));
        }
        return std::make_pair(std::move(segs), std::move(labels));
    };

    SynthBenchmark out;
    auto [src_segs, src_labels] = make_domain(spec.source_count, Domain::Source);
    out.source = build_domain(std::move(src_segs), std::move(src_labels), bands, Domain::Source);
    auto [tgt_segs, tgt_labels] = make_domain(spec.target_count, Domain::Target);
    out.target = build_domain(std::move(tgt_segs), std::nullopt, bands, Domain::Target);
    out.target_truth = std::move(tgt_labels);
    return out;
}

}  // namespace eegda::dataio
