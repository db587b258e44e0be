#include "eegda/dataio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace eegda::dataio {

void SegmentStore::insert(std::size_t index, sigproc::SignalSegment segment) {
    segments_[index] = std::move(segment);
}

const sigproc::SignalSegment& SegmentStore::at(std::size_t index) const {
    auto it = segments_.find(index);
    if (it == segments_.end()) throw Error("TTA requires raw segments: no segment for sample " + std::to_string(index));
    return it->second;
}

void DomainSet::validate() const {
    if (labels && static_cast<Eigen::Index>(labels->size()) != features.rows())
        throw Error("label vector length does not match feature rows");
    for (const auto& [index, seg] : segments.items())
        if (index >= size()) throw Error("segment key " + std::to_string(index) + " beyond sample count");
    if (normalizer && normalizer->size() != features.cols()) throw Error("normalizer width does not match features");
}

Matrix model_features(const sigproc::NormalizationTransform& t, const Matrix& raw) {
    return t.apply(raw).unaryExpr([](double v) { return to_f32(v); });
}

DomainSet build_domain(std::vector<sigproc::SignalSegment> segments, std::optional<Labels> labels,
                       const std::vector<sigproc::BandSpec>& bands, Domain domain,
                       const std::optional<sigproc::NormalizationTransform>& normalizer) {
    DomainSet set;
    set.bands = bands;
    set.domain = domain;
    const Matrix raw = sigproc::featurize(segments, bands);
    set.normalizer = normalizer ? *normalizer : sigproc::fit_normalizer(raw);
    set.features = model_features(*set.normalizer, raw);
    set.labels = std::move(labels);
    for (std::size_t i = 0; i < segments.size(); ++i) set.segments.insert(i, std::move(segments[i]));
    set.validate();
    return set;
}

DomainSet refeaturize(const DomainSet& set, const std::vector<sigproc::BandSpec>& bands) {
    if (set.segments.size() != set.size()) throw Error("refeaturize needs a raw segment for every sample");
    std::vector<sigproc::SignalSegment> segs;
    segs.reserve(set.size());
    for (const auto& [index, seg] : set.segments.items()) segs.push_back(seg);
    return build_domain(std::move(segs), set.labels, bands, set.domain);
}

// ---------------------------------------------------------------------------
// Binary helpers

namespace {

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw IoError("cannot open " + path + " for writing");
    }
    template <typename T>
    void put(T value) {
        out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }
    void bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
    void matrix(const Matrix& m) {
        put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
        put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(m(i, j));
    }
    void finish() {
        out_.flush();
        if (!out_) throw IoError("write failed for " + path_);
    }

private:
    std::ofstream out_;
    std::string path_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path);
        data_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    template <typename T>
    T get(const std::string& what) {
        if (pos_ + sizeof(T) > data_.size())
            throw IoError(path_ + ": truncated while reading " + what + " at byte offset " + std::to_string(pos_));
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    void expect_magic(const char* magic) {
        if (data_.size() < 4 || std::memcmp(data_.data(), magic, 4) != 0)
            throw IoError(path_ + ": bad magic bytes at byte offset 0 (expected " + std::string(magic, 4) + ")");
        pos_ = 4;
    }
    Matrix matrix(const std::string& what) {
        const auto rows = get<std::uint32_t>(what + " rows");
        const auto cols = get<std::uint32_t>(what + " cols");
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = get<double>(what);
        return m;
    }
    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    void expect_end() const {
        if (pos_ != data_.size())
            throw IoError(path_ + ": " + std::to_string(data_.size() - pos_) + " unexpected trailing bytes at byte offset " +
                          std::to_string(pos_));
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::vector<char> data_;
    std::size_t pos_ = 0;
};

constexpr std::uint16_t kFeatureVersion = 1;
constexpr std::uint16_t kSegmentVersion = 1;
constexpr std::uint16_t kRecordVersion = 1;

}  // namespace

// ---------------------------------------------------------------------------
// Feature files

void save_features(const DomainSet& set, const std::string& path) {
    set.validate();
    Writer w(path);
    w.bytes("EEGF", 4);
    w.put<std::uint16_t>(kFeatureVersion);
    std::uint16_t flags = 0;
    if (set.labels) flags |= 1;
    if (set.normalizer) flags |= 2;
    w.put<std::uint16_t>(flags);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(set.features.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(set.features.cols()));
    w.put<std::uint8_t>(sigproc::band_mask(set.bands));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(set.domain));
    w.put<std::uint16_t>(0);
    for (Eigen::Index i = 0; i < set.features.rows(); ++i)
        for (Eigen::Index j = 0; j < set.features.cols(); ++j) w.put<float>(static_cast<float>(set.features(i, j)));
    if (set.labels)
        for (int y : *set.labels) w.put<std::uint16_t>(static_cast<std::uint16_t>(y));
    if (set.normalizer) {
        for (Eigen::Index j = 0; j < set.normalizer->size(); ++j) w.put<double>(set.normalizer->min(j));
        for (Eigen::Index j = 0; j < set.normalizer->size(); ++j) w.put<double>(set.normalizer->max(j));
    }
    w.finish();
}

DomainSet load_features(const std::string& path) {
    Reader r(path);
    r.expect_magic("EEGF");
    const auto version = r.get<std::uint16_t>("version");
    if (version != kFeatureVersion) throw IoError(path + ": unsupported feature file version " + std::to_string(version));
    const auto flags = r.get<std::uint16_t>("flags");
    const auto n = r.get<std::uint32_t>("row count");
    const auto d = r.get<std::uint32_t>("column count");
    const auto mask = r.get<std::uint8_t>("band mask");
    const auto domain = r.get<std::uint8_t>("domain tag");
    r.get<std::uint16_t>("reserved");
    if (domain > 1) throw IoError(path + ": invalid domain tag at byte offset 17");

    DomainSet set;
    set.bands = sigproc::bands_from_mask(mask);
    set.domain = static_cast<Domain>(domain);
    if (set.bands.empty()) throw IoError(path + ": empty band mask at byte offset 16");
    if (d % set.bands.size() != 0)
        throw IoError(path + ": feature width " + std::to_string(d) + " is not a multiple of the band count");

    set.features.resize(n, d);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (r.remaining() < std::size_t{d} * sizeof(float))
            throw IoError(path + ": row " + std::to_string(i) + " holds fewer than " + std::to_string(d) +
                          " values (byte offset " + std::to_string(r.offset()) + ")");
        for (std::uint32_t j = 0; j < d; ++j) set.features(i, j) = r.get<float>("feature");
    }
    if (flags & 1) {
        if (r.remaining() < std::size_t{n} * sizeof(std::uint16_t))
            throw IoError(path + ": label block holds fewer than " + std::to_string(n) + " labels (byte offset " +
                          std::to_string(r.offset()) + ")");
        Labels labels(n);
        for (auto& y : labels) y = r.get<std::uint16_t>("label");
        set.labels = std::move(labels);
    }
    if (flags & 2) {
        sigproc::NormalizationTransform t{RowVector(d), RowVector(d)};
        for (std::uint32_t j = 0; j < d; ++j) t.min(j) = r.get<double>("normalizer min");
        for (std::uint32_t j = 0; j < d; ++j) t.max(j) = r.get<double>("normalizer max");
        set.normalizer = std::move(t);
    }
    r.expect_end();
    return set;
}

// ---------------------------------------------------------------------------
// Segment files

void save_segments(const SegmentStore& store, const std::string& path) {
    Writer w(path);
    w.bytes("EEGS", 4);
    w.put<std::uint16_t>(kSegmentVersion);
    w.put<std::uint16_t>(0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(store.size()));
    std::uint32_t channels = 0, length = 0;
    double rate = 0.0;
    if (!store.empty()) {
        const auto& first = store.items().begin()->second;
        channels = static_cast<std::uint32_t>(first.samples.rows());
        length = static_cast<std::uint32_t>(first.samples.cols());
        rate = first.sample_rate;
    }
    w.put<std::uint32_t>(channels);
    w.put<std::uint32_t>(length);
    w.put<double>(rate);
    for (const auto& [index, seg] : store.items()) {
        if (seg.samples.rows() != channels || seg.samples.cols() != length || seg.sample_rate != rate)
            throw IoError("segment " + std::to_string(index) + " differs in shape or rate from the first segment");
        w.put<std::uint32_t>(static_cast<std::uint32_t>(index));
        for (Eigen::Index c = 0; c < seg.samples.rows(); ++c)
            for (Eigen::Index t = 0; t < seg.samples.cols(); ++t) w.put<double>(seg.samples(c, t));
    }
    w.finish();
}

SegmentStore load_segments(const std::string& path) {
    Reader r(path);
    r.expect_magic("EEGS");
    const auto version = r.get<std::uint16_t>("version");
    if (version != kSegmentVersion) throw IoError(path + ": unsupported segment file version " + std::to_string(version));
    r.get<std::uint16_t>("reserved");
    const auto count = r.get<std::uint32_t>("segment count");
    const auto channels = r.get<std::uint32_t>("channel count");
    const auto length = r.get<std::uint32_t>("segment length");
    const auto rate = r.get<double>("sample rate");
    SegmentStore store;
    for (std::uint32_t s = 0; s < count; ++s) {
        const auto index = r.get<std::uint32_t>("segment index");
        sigproc::SignalSegment seg{Matrix(channels, length), rate};
        for (std::uint32_t c = 0; c < channels; ++c)
            for (std::uint32_t t = 0; t < length; ++t) seg.samples(c, t) = r.get<double>("segment sample");
        store.insert(index, std::move(seg));
    }
    r.expect_end();
    return store;
}

void save_domain(const DomainSet& set, const std::string& path) {
    save_features(set, path);
    if (!set.segments.empty()) save_segments(set.segments, path + ".segments");
}

DomainSet load_domain(const std::string& path) {
    DomainSet set = load_features(path);
    std::ifstream probe(path + ".segments");
    if (probe) set.segments = load_segments(path + ".segments");
    set.validate();
    return set;
}

// ---------------------------------------------------------------------------
// Raw records

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

RawRecord load_csv_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    RawRecord rec;
    if (!std::getline(in, line) || line.rfind('#', 0) != 0)
        throw IoError(path + ": line 1: expected '# sample_rate=<Hz> label=<k>' header");
    {
        std::stringstream ss(line.substr(1));
        std::string tok;
        while (ss >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
            try {
                if (key == "sample_rate") rec.signal.sample_rate = std::stod(value);
                else if (key == "label") rec.label = std::stoi(value);
            } catch (const std::exception&) {
                throw IoError(path + ": line 1: bad value for " + key);
            }
        }
    }
    std::vector<std::vector<double>> rows;
    int number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line == "\r") continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError(path + ": line " + std::to_string(number) + ": '" + cell + "' is not a number");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError(path + ": line " + std::to_string(number) + ": expected " + std::to_string(rows.front().size()) +
                          " columns, found " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path + ": no samples");
    rec.signal.samples.resize(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t c = 0; c < rows[t].size(); ++c)
            rec.signal.samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = rows[t][c];
    return rec;
}

}  // namespace

RawRecord load_record(const std::string& path) {
    RawRecord rec;
    if (ends_with(path, ".csv")) {
        rec = load_csv_record(path);
    } else {
        Reader r(path);
        r.expect_magic("EEGR");
        const auto version = r.get<std::uint16_t>("version");
        if (version != kRecordVersion) throw IoError(path + ": unsupported record version " + std::to_string(version));
        r.get<std::uint16_t>("reserved");
        const auto channels = r.get<std::uint32_t>("channel count");
        const auto length = r.get<std::uint32_t>("length");
        rec.signal.sample_rate = r.get<double>("sample rate");
        rec.label = r.get<std::int32_t>("label");
        rec.signal.samples.resize(channels, length);
        for (std::uint32_t c = 0; c < channels; ++c)
            for (std::uint32_t t = 0; t < length; ++t) rec.signal.samples(c, t) = r.get<double>("sample");
        r.expect_end();
    }
    try {
        rec.signal.validate();
    } catch (const Error& e) {
        throw IoError(path + ": " + e.what());
    }
    return rec;
}

void save_record(const RawRecord& record, const std::string& path) {
    Writer w(path);
    w.bytes("EEGR", 4);
    w.put<std::uint16_t>(kRecordVersion);
    w.put<std::uint16_t>(0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(record.signal.samples.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(record.signal.samples.cols()));
    w.put<double>(record.signal.sample_rate);
    w.put<std::int32_t>(record.label);
    for (Eigen::Index c = 0; c < record.signal.samples.rows(); ++c)
        for (Eigen::Index t = 0; t < record.signal.samples.cols(); ++t) w.put<double>(record.signal.samples(c, t));
    w.finish();
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    Writer w(path);
    w.bytes("EEGC", 4);
    w.put<std::uint32_t>(kCheckpointVersion);
    const auto& a = ck.params.arch;
    for (int v : {a.input, a.extractor[0], a.extractor[1], a.classifier[0], a.classifier[1], a.classes})
        w.put<std::int32_t>(v);
    for (const Matrix* m : ck.params.trainable()) w.matrix(*m);
    for (const auto& bn : ck.params.norm) {
        w.matrix(bn.running_mean);
        w.matrix(bn.running_var);
    }
    const auto& o = ck.optimizer;
    w.put<std::int64_t>(o.step);
    for (double v : {o.learning_rate, o.weight_decay, o.beta1, o.beta2, o.epsilon}) w.put<double>(v);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(o.first_moment.size()));
    for (std::size_t i = 0; i < o.first_moment.size(); ++i) {
        w.matrix(o.first_moment[i]);
        w.matrix(o.second_moment[i]);
    }
    w.matrix(ck.group_weights);
    const auto& s = ck.stats;
    w.matrix(s.cc_s);
    w.matrix(s.m_ctr);
    w.matrix(s.sigma);
    w.put<double>(s.m_dis);
    w.matrix(s.cc_t);
    w.matrix(s.cc_m);
    w.finish();
}

Checkpoint load_checkpoint(const std::string& path) {
    Reader r(path);
    r.expect_magic("EEGC");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kCheckpointVersion)
        throw IoError(path + ": checkpoint version " + std::to_string(version) + " does not match expected " +
                      std::to_string(kCheckpointVersion));
    net::Architecture a;
    a.input = r.get<std::int32_t>("architecture");
    a.extractor[0] = r.get<std::int32_t>("architecture");
    a.extractor[1] = r.get<std::int32_t>("architecture");
    a.classifier[0] = r.get<std::int32_t>("architecture");
    a.classifier[1] = r.get<std::int32_t>("architecture");
    a.classes = r.get<std::int32_t>("architecture");
    try {
        a.validate();
    } catch (const Error&) {
        throw IoError(path + ": invalid architecture header");
    }

    Checkpoint ck;
    ck.params = net::ModelParams::zeros(a);
    for (Matrix* m : ck.params.trainable()) {
        Matrix loaded = r.matrix("parameter");
        if (loaded.rows() != m->rows() || loaded.cols() != m->cols())
            throw IoError(path + ": parameter shape mismatch at byte offset " + std::to_string(r.offset()));
        *m = std::move(loaded);
    }
    for (auto& bn : ck.params.norm) {
        bn.running_mean = r.matrix("running mean");
        bn.running_var = r.matrix("running variance");
    }
    auto& o = ck.optimizer;
    o.step = r.get<std::int64_t>("optimizer step");
    o.learning_rate = r.get<double>("learning rate");
    o.weight_decay = r.get<double>("weight decay");
    o.beta1 = r.get<double>("beta1");
    o.beta2 = r.get<double>("beta2");
    o.epsilon = r.get<double>("epsilon");
    const auto moments = r.get<std::uint32_t>("moment count");
    for (std::uint32_t i = 0; i < moments; ++i) {
        o.first_moment.push_back(r.matrix("first moment"));
        o.second_moment.push_back(r.matrix("second moment"));
    }
    ck.group_weights = r.matrix("group weights");
    auto& s = ck.stats;
    s.cc_s = r.matrix("cc_s");
    s.m_ctr = r.matrix("m_ctr");
    s.sigma = r.matrix("sigma");
    s.m_dis = r.get<double>("m_dis");
    s.cc_t = r.matrix("cc_t");
    s.cc_m = r.matrix("cc_m");
    r.expect_end();
    return ck;
}

std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << value;
    return ss.str();
}

}  // namespace eegda::dataio
