#include "eegda/sigproc.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace eegda::sigproc {

void SignalSegment::validate() const {
    if (!(sample_rate > 0.0)) throw Error("sample_rate must be positive");
    if (samples.cols() < 2) throw Error("signal needs at least 2 samples");
    if (samples.rows() < 1) throw Error("signal has no channels");
    if (!samples.allFinite()) throw Error("signal contains non-finite amplitudes");
}

const std::vector<BandSpec>& default_bands() {
    static const std::vector<BandSpec> bands = {
        {"delta", 1.0, 3.0}, {"theta", 4.0, 7.0}, {"alpha", 8.0, 13.0},
        {"beta", 14.0, 30.0}, {"gamma", 31.0, 50.0},
    };
    return bands;
}

std::vector<BandSpec> parse_band_subset(const std::string& names) {
    if (names.empty() || names == "all") return default_bands();
    std::vector<BandSpec> out;
    std::stringstream ss(names);
    std::string name;
    while (std::getline(ss, name, ',')) {
        const auto& all = default_bands();
        auto it = std::find_if(all.begin(), all.end(), [&](const BandSpec& b) { return b.name == name; });
        if (it == all.end()) throw ConfigError("unknown band '" + name + "'");
        out.push_back(*it);
    }
    // Keep the canonical delta..gamma order regardless of how they were listed.
    return bands_from_mask(band_mask(out));
}

std::uint8_t band_mask(const std::vector<BandSpec>& bands) {
    std::uint8_t mask = 0;
    const auto& all = default_bands();
    for (const auto& b : bands) {
        for (std::size_t i = 0; i < all.size(); ++i)
            if (all[i].name == b.name) mask |= static_cast<std::uint8_t>(1u << i);
    }
    return mask;
}

std::vector<BandSpec> bands_from_mask(std::uint8_t mask) {
    std::vector<BandSpec> out;
    const auto& all = default_bands();
    for (std::size_t i = 0; i < all.size(); ++i)
        if (mask & (1u << i)) out.push_back(all[i]);
    return out;
}

std::string band_subset_name(const std::vector<BandSpec>& bands) {
    if (band_mask(bands) == 0x1f) return "all";
    std::string out;
    for (const auto& b : bands) out += (out.empty() ? "" : ",") + b.name;
    return out;
}

std::vector<SignalSegment> segment(const SignalSegment& record, double window_s, double step_s) {
    if (!(window_s > 0.0) || !(step_s > 0.0)) throw Error("window and step must be positive");
    const auto window = static_cast<Eigen::Index>(std::llround(window_s * record.sample_rate));
    const auto step = static_cast<Eigen::Index>(std::llround(step_s * record.sample_rate));
    if (window < 1 || step < 1) throw Error("window or step shorter than one sample");
    if (record.length() < window) throw Error("record too short");

    std::vector<SignalSegment> out;
    for (Eigen::Index start = 0; start + window <= record.length(); start += step)
        out.push_back({record.samples.middleCols(start, window), record.sample_rate});
    return out;
}

// ---------------------------------------------------------------------------
// Butterworth band-pass

BandpassFilter::BandpassFilter(double sample_rate, double f_low, double f_high) : sample_rate_(sample_rate) {
    if (!(f_low > 0.0 && f_low < f_high)) throw Error("bandpass requires 0 < f_low < f_high");
    if (!(f_high < sample_rate / 2.0)) throw Error("bandpass f_high must lie below Nyquist");

    // Pole-pair quality factors of a 4th-order Butterworth prototype.
    const double q[2] = {1.0 / (2.0 * std::cos(std::numbers::pi / 8.0)),
                         1.0 / (2.0 * std::cos(3.0 * std::numbers::pi / 8.0))};

    auto make = [&](double f0, double quality, bool highpass) {
        const double w0 = 2.0 * std::numbers::pi * f0 / sample_rate;
        const double c = std::cos(w0);
        const double alpha = std::sin(w0) / (2.0 * quality);
        const double a0 = 1.0 + alpha;
        Biquad s{};
        if (highpass) {
            s.b0 = (1.0 + c) / 2.0 / a0;
            s.b1 = -(1.0 + c) / a0;
        } else {
            s.b0 = (1.0 - c) / 2.0 / a0;
            s.b1 = (1.0 - c) / a0;
        }
        s.b2 = s.b0;
        s.a1 = -2.0 * c / a0;
        s.a2 = (1.0 - alpha) / a0;
        return s;
    };
    sections_ = {make(f_high, q[0], false), make(f_high, q[1], false), make(f_low, q[0], true),
                 make(f_low, q[1], true)};
}

double BandpassFilter::gain(double f) const {
    const std::complex<double> z = std::polar(1.0, -2.0 * std::numbers::pi * f / sample_rate_);
    std::complex<double> h = 1.0;
    for (const auto& s : sections_) {
        const auto num = s.b0 + s.b1 * z + s.b2 * z * z;
        const auto den = 1.0 + s.a1 * z + s.a2 * z * z;
        h *= num / den;
    }
    return std::abs(h);
}

Vector BandpassFilter::filter_once(const Vector& x) const {
    Vector y = x;
    // Start each section in the steady state for a constant input equal to the
    // first sample, which removes the start-up step.
    double level = y.size() ? y(0) : 0.0;
    for (const auto& s : sections_) {
        const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        const double out = dc * level;
        double z2 = s.b2 * level - s.a2 * out;
        double z1 = s.b1 * level - s.a1 * out + z2;
        for (Eigen::Index n = 0; n < y.size(); ++n) {
            const double in = y(n);
            const double o = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * o + z2;
            z2 = s.b2 * in - s.a2 * o;
            y(n) = o;
        }
        level = out;
    }
    return y;
}

SignalSegment BandpassFilter::apply(const SignalSegment& signal) const {
    signal.validate();
    const Eigen::Index n = signal.length();
    const Eigen::Index pad = std::min<Eigen::Index>(27, n - 1);
    SignalSegment out{Matrix(signal.samples.rows(), n), signal.sample_rate};

    for (Eigen::Index c = 0; c < signal.samples.rows(); ++c) {
        const RowVector x = signal.samples.row(c);
        // Odd reflection about both end points.
        Vector ext(n + 2 * pad);
        for (Eigen::Index i = 0; i < pad; ++i) {
            ext(i) = 2.0 * x(0) - x(pad - i);
            ext(n + pad + i) = 2.0 * x(n - 1) - x(n - 2 - i);
        }
        ext.segment(pad, n) = x.transpose();

        Vector y = filter_once(ext);
        y.reverseInPlace();
        y = filter_once(y);
        y.reverseInPlace();
        out.samples.row(c) = y.segment(pad, n).transpose();
    }
    return out;
}

SignalSegment bandpass(const SignalSegment& signal, double f_low, double f_high) {
    return BandpassFilter(signal.sample_rate, f_low, f_high).apply(signal);
}

// ---------------------------------------------------------------------------
// Spectra

Vector psd(const Eigen::Ref<const Vector>& channel_samples) {
    const Eigen::Index n = channel_samples.size();
    if (n < 2) throw Error("psd needs at least 2 samples");
    if (!channel_samples.allFinite()) throw Error("psd input contains non-finite samples");

    std::vector<double> in(channel_samples.data(), channel_samples.data() + n);
    std::vector<std::complex<double>> spectrum;
    Eigen::FFT<double> fft;
    fft.fwd(spectrum, in);

    Vector out(n);
    for (Eigen::Index k = 0; k < n; ++k) out(k) = std::norm(spectrum[static_cast<std::size_t>(k)]) / static_cast<double>(n);
    return out;
}

double band_power(const Eigen::Ref<const Vector>& spectrum, const BandSpec& band, double sample_rate) {
    const auto n = spectrum.size();
    const double resolution = sample_rate / static_cast<double>(n);
    const double slack = 1e-9 * resolution;
    double total = 0.0;
    bool any = false;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double f = static_cast<double>(k) * resolution;
        if (f >= band.f_low - slack && f <= band.f_high + slack) {
            total += spectrum(k);
            any = true;
        }
    }
    if (!any) warn("band '" + band.name + "' contains no DFT bin at this resolution");
    return total;
}

RowVector features(const SignalSegment& segment, const std::vector<BandSpec>& bands) {
    if (bands.empty()) throw Error("features need at least one band");
    segment.validate();
    const auto nb = static_cast<Eigen::Index>(bands.size());
    RowVector out(segment.channel_count() * nb);
    for (Eigen::Index c = 0; c < segment.samples.rows(); ++c) {
        const Vector spectrum = psd(segment.samples.row(c).transpose());
        for (Eigen::Index b = 0; b < nb; ++b)
            out(c * nb + b) = band_power(spectrum, bands[static_cast<std::size_t>(b)], segment.sample_rate);
    }
    return out;
}

Matrix featurize(const std::vector<SignalSegment>& segments, const std::vector<BandSpec>& bands) {
    if (segments.empty()) return Matrix(0, 0);
    Matrix out(static_cast<Eigen::Index>(segments.size()),
               segments.front().channel_count() * static_cast<Eigen::Index>(bands.size()));
    for (std::size_t i = 0; i < segments.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = features(segments[i], bands);
    return out;
}

// ---------------------------------------------------------------------------
// Normalization

NormalizationTransform NormalizationTransform::fit(const Matrix& features) {
    if (features.rows() < 1) throw Error("normalizer needs at least one row");
    return {features.colwise().minCoeff(), features.colwise().maxCoeff()};
}

Matrix NormalizationTransform::apply(const Matrix& features) const {
    if (features.cols() != min.size()) throw Error("normalizer width mismatch");
    Matrix out(features.rows(), features.cols());
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        const double span = max(j) - min(j);
        for (Eigen::Index i = 0; i < features.rows(); ++i) {
            if (span > 0.0)
                out(i, j) = std::clamp(2.0 * (features(i, j) - min(j)) / span - 1.0, -1.0, 1.0);
            else
                out(i, j) = 0.0;
        }
    }
    return out;
}

Matrix NormalizationTransform::invert(const Matrix& normalized) const {
    Matrix out(normalized.rows(), normalized.cols());
    for (Eigen::Index j = 0; j < normalized.cols(); ++j) {
        const double span = max(j) - min(j);
        out.col(j) = ((normalized.col(j).array() + 1.0) * (span / 2.0) + min(j)).matrix();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Augmentation

SignalSegment augment_noise(const SignalSegment& segment, double noise_std, std::uint64_t seed) {
    if (noise_std < 0.0) throw Error("noise_std must be non-negative");
    SignalSegment out = segment;
    if (noise_std == 0.0) return out;

    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto n = static_cast<double>(segment.length());
    for (Eigen::Index c = 0; c < segment.samples.rows(); ++c) {
        const auto row = segment.samples.row(c).array();
        const double mean = row.mean();
        const double sd = n > 1 ? std::sqrt((row - mean).square().sum() / (n - 1.0)) : 0.0;
        for (Eigen::Index t = 0; t < segment.length(); ++t) out.samples(c, t) += noise_std * sd * normal(rng);
    }
    return out;
}

namespace {

// Resample x (length n) to m points by linear interpolation with aligned end points.
RowVector interpolate(const RowVector& x, Eigen::Index m) {
    const Eigen::Index n = x.size();
    RowVector y(m);
    const double scale = static_cast<double>(n - 1) / static_cast<double>(m - 1);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double pos = static_cast<double>(j) * scale;
        const auto lo = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), n - 2);
        const double frac = pos - static_cast<double>(lo);
        y(j) = x(lo) + frac * (x(lo + 1) - x(lo));
    }
    return y;
}

}  // namespace

SignalSegment augment_resample(const SignalSegment& segment, double factor) {
    if (!(factor >= 0.5 && factor <= 2.0)) throw Error("resample factor must lie in [0.5, 2]");
    segment.validate();
    const Eigen::Index n = segment.length();
    const auto m = std::max<Eigen::Index>(2, static_cast<Eigen::Index>(std::llround(static_cast<double>(n) * factor)));
    SignalSegment out{Matrix(segment.samples.rows(), n), segment.sample_rate};
    for (Eigen::Index c = 0; c < segment.samples.rows(); ++c)
        out.samples.row(c) = interpolate(interpolate(segment.samples.row(c), m), n);
    return out;
}

}  // namespace eegda::sigproc
