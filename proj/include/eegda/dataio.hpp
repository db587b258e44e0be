#pragma once

// Datasets, on-disk formats and the synthetic domain-shift benchmark.
//
// All binary formats are little-endian.
//
// Feature file (.eegf):
//   magic "EEGF" | u16 version | u16 flags (bit0 labels, bit1 normalizer)
//   | u32 n | u32 d | u8 band mask | u8 domain (0 source, 1 target) | u16 reserved
//   | n*d float32 row-major | [n uint16 labels] | [d float64 min, d float64 max]
//
// Segment file (.eegs):
//   magic "EEGS" | u16 version | u16 reserved | u32 count | u32 channels
//   | u32 length | f64 sample rate | count * (u32 index, channels*length float64 row-major)
//
// Raw record (.eegr): one continuous recording to featurize.
//   magic "EEGR" | u16 version | u16 reserved | u32 channels | u32 length
//   | f64 sample rate | i32 label (-1 if none) | channels*length float64 row-major
// Raw records may also be CSV: a first line "# sample_rate=<Hz> label=<k>"
// followed by one row per time sample, one column per channel.
//
// Checkpoint (.eegc): magic "EEGC" | u32 version | architecture | parameters and
// running statistics | optimizer state | group weights q | cluster statistics
// (all float64).

#include "eegda/clusterstats.hpp"
#include "eegda/common.hpp"
#include "eegda/net.hpp"
#include "eegda/sigproc.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eegda::dataio {

enum class Domain : std::uint8_t { Source = 0, Target = 1 };

/// Raw segments keyed by sample index.
class SegmentStore {
public:
    void insert(std::size_t index, sigproc::SignalSegment segment);
    /// Throws Error("TTA requires raw segments ...") when the index is missing.
    const sigproc::SignalSegment& at(std::size_t index) const;
    bool contains(std::size_t index) const { return segments_.count(index) != 0; }
    std::size_t size() const { return segments_.size(); }
    bool empty() const { return segments_.empty(); }
    const std::map<std::size_t, sigproc::SignalSegment>& items() const { return segments_; }

private:
    std::map<std::size_t, sigproc::SignalSegment> segments_;
};

struct DomainSet {
    Matrix features;  // n x d, normalized
    std::optional<Labels> labels;
    SegmentStore segments;
    std::optional<sigproc::NormalizationTransform> normalizer;
    std::vector<sigproc::BandSpec> bands = sigproc::default_bands();
    Domain domain = Domain::Source;

    std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
    void validate() const;
};

/// Normalize raw band powers and round them through float32, the precision
/// feature files carry.
Matrix model_features(const sigproc::NormalizationTransform& t, const Matrix& raw);

/// Featurize segments into a domain set, fitting a fresh normalizer unless one is given.
DomainSet build_domain(std::vector<sigproc::SignalSegment> segments, std::optional<Labels> labels,
                       const std::vector<sigproc::BandSpec>& bands, Domain domain,
                       const std::optional<sigproc::NormalizationTransform>& normalizer = std::nullopt);

/// Re-featurize a set's stored segments with another band subset.
DomainSet refeaturize(const DomainSet& set, const std::vector<sigproc::BandSpec>& bands);

void save_features(const DomainSet& set, const std::string& path);
DomainSet load_features(const std::string& path);

void save_segments(const SegmentStore& store, const std::string& path);
SegmentStore load_segments(const std::string& path);

/// Feature file plus, when segments exist, a sibling segment file (<path>.segments).
void save_domain(const DomainSet& set, const std::string& path);
DomainSet load_domain(const std::string& path);

struct RawRecord {
    sigproc::SignalSegment signal;
    int label = -1;
};

RawRecord load_record(const std::string& path);
void save_record(const RawRecord& record, const std::string& path);

struct Checkpoint {
    net::ModelParams params;
    net::OptimizerState optimizer;
    Vector group_weights;  // robust-loss weights q, so training can resume exactly
    clusterstats::ClusterStats stats;
};

constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Synthetic two-domain benchmark: class identity lives in a per-channel
/// band-power profile; the target applies gain, a channel rotation and extra noise.
struct SynthSpec {
    int classes = 2;
    int channels = 32;
    double sample_rate = 128.0;
    double duration_s = 2.0;
    int source_count = 4000;
    int target_count = 4000;
    double contrast = 0.6;      // log-amplitude class modulation
    double jitter = 0.35;       // per-sample log-amplitude spread
    double noise = 0.5;         // white-noise std relative to unit band amplitude
    double target_gain = 1.6;
    double target_rotation = 0.6;  // 0 = identity channel mixing
    int target_subjects = 8;       // subject j mixes with strength rotation * (j + 1) / subjects
    double target_noise = 1.0;     // extra white-noise std in the target
    std::string informative_bands = "all";
    std::uint64_t seed = 42;

    void apply(std::map<std::string, std::string>& keys);
    std::map<std::string, std::string> to_key_values() const;
    void validate() const;
};

struct SynthBenchmark {
    DomainSet source;
    DomainSet target;         // labels withheld
    Labels target_truth;      // for scoring only
};

SynthBenchmark synth_benchmark(const SynthSpec& spec);

/// 64-bit FNV-1a of a file's bytes.
std::uint64_t file_hash(const std::string& path);
std::string hex64(std::uint64_t value);

}  // namespace eegda::dataio
