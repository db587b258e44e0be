#pragma once

// Band-power feature extraction from multi-channel signals, plus the signal
// augmentations used at test time.

#include "eegda/common.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace eegda::sigproc {

/// Multi-channel signal, one row per channel. Used both for continuous
/// records and for windowed excerpts.
struct SignalSegment {
    Matrix samples;            // channels x time
    double sample_rate = 0.0;  // Hz

    int channel_count() const { return static_cast<int>(samples.rows()); }
    Eigen::Index length() const { return samples.cols(); }
    double duration() const { return static_cast<double>(length()) / sample_rate; }

    /// Throws Error unless length >= 2, sample_rate > 0 and all amplitudes are finite.
    void validate() const;
};

struct BandSpec {
    std::string name;
    double f_low = 0.0;
    double f_high = 0.0;
};

/// delta 1-3, theta 4-7, alpha 8-13, beta 14-30, gamma 31-50 Hz, in that order.
const std::vector<BandSpec>& default_bands();

/// Resolve a comma-separated list of band names ("all" for the default set).
std::vector<BandSpec> parse_band_subset(const std::string& names);

/// Bitmask over the default bands (bit 0 = delta ... bit 4 = gamma).
std::uint8_t band_mask(const std::vector<BandSpec>& bands);
std::vector<BandSpec> bands_from_mask(std::uint8_t mask);
std::string band_subset_name(const std::vector<BandSpec>& bands);

/// Sliding windows starting at 0, step, 2*step, ...; the trailing partial
/// window is dropped.
std::vector<SignalSegment> segment(const SignalSegment& record, double window_s, double step_s);

/// Fourth-order Butterworth band-pass realized as two low-pass and two
/// high-pass biquads, applied forward and backward for zero phase.
class BandpassFilter {
public:
    BandpassFilter(double sample_rate, double f_low, double f_high);

    /// Zero-phase filtering of every channel; shape is preserved.
    SignalSegment apply(const SignalSegment& signal) const;

    /// Magnitude response of one forward pass at frequency f (Hz).
    double gain(double f) const;

    double sample_rate() const { return sample_rate_; }

private:
    struct Biquad {
        double b0, b1, b2, a1, a2;
    };

    Vector filter_once(const Vector& x) const;

    double sample_rate_;
    std::array<Biquad, 4> sections_{};
};

SignalSegment bandpass(const SignalSegment& signal, double f_low, double f_high);

/// Periodogram over all N DFT bins: PSD(f) = |X_f|^2 / N.
Vector psd(const Eigen::Ref<const Vector>& channel_samples);

/// Sum of PSD over bins whose frequency (index * fs / N) lies in
/// [f_low, f_high]. Returns 0 with a warning when no bin falls in the band.
double band_power(const Eigen::Ref<const Vector>& spectrum, const BandSpec& band, double sample_rate);

/// Channel-major, band-minor band-power vector.
RowVector features(const SignalSegment& segment, const std::vector<BandSpec>& bands);

/// One feature row per segment.
Matrix featurize(const std::vector<SignalSegment>& segments, const std::vector<BandSpec>& bands);

/// Per-feature min/max scaling to [-1, 1].
struct NormalizationTransform {
    RowVector min;
    RowVector max;

    static NormalizationTransform fit(const Matrix& features);

    /// 2 (x - min) / (max - min) - 1, clamped to [-1, 1]. Constant features map to 0.
    Matrix apply(const Matrix& features) const;
    Matrix invert(const Matrix& normalized) const;
    Eigen::Index size() const { return min.size(); }
};

inline NormalizationTransform fit_normalizer(const Matrix& features) {
    return NormalizationTransform::fit(features);
}
inline Matrix apply_normalizer(const NormalizationTransform& t, const Matrix& features) {
    return t.apply(features);
}

/// Adds N(0, (noise_std * channel std)^2) noise to each channel.
SignalSegment augment_noise(const SignalSegment& segment, double noise_std, std::uint64_t seed);

/// Linear interpolation to round(N * factor) samples and back to N.
/// factor must lie in [0.5, 2].
SignalSegment augment_resample(const SignalSegment& segment, double factor);

}  // namespace eegda::sigproc
