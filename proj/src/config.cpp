#include "eegda/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace eegda {

InferenceMode parse_inference_mode(const std::string& text) {
    if (text == "pc_tta") return InferenceMode::PcTta;
    if (text == "full_tta") return InferenceMode::FullTta;
    if (text == "no_tta") return InferenceMode::NoTta;
    throw ConfigError("unknown inference mode '" + text + "' (expected pc_tta, full_tta or no_tta)");
}

std::string to_string(InferenceMode mode) {
    switch (mode) {
    case InferenceMode::PcTta: return "pc_tta";
    case InferenceMode::FullTta: return "full_tta";
    case InferenceMode::NoTta: return "no_tta";
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError("config key " + key + ": '" + text + "' is not a number");
    return v;
}

long long parse_int(const std::string& key, const std::string& text) {
    long long v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError("config key " + key + ": '" + text + "' is not an integer");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("config key " + key + ": '" + text + "' is not a boolean");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (double x : v) out += (out.empty() ? "" : ",") + fmt(x);
    return out;
}

struct Field {
    std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Field real(T PipelineConfig::*member) {
    return {[member](PipelineConfig& c, const std::string& k, const std::string& v) { c.*member = parse_double(k, v); },
            [member](const PipelineConfig& c) { return fmt(c.*member); }};
}

Field weight(double losses::LossWeights::*member) {
    return {[member](PipelineConfig& c, const std::string& k, const std::string& v) {
                c.weights.*member = parse_double(k, v);
            },
            [member](const PipelineConfig& c) { return fmt(c.weights.*member); }};
}

Field integer(int PipelineConfig::*member) {
    return {[member](PipelineConfig& c, const std::string& k, const std::string& v) {
                c.*member = static_cast<int>(parse_int(k, v));
            },
            [member](const PipelineConfig& c) { return std::to_string(c.*member); }};
}

Field flag(bool PipelineConfig::*member) {
    return {[member](PipelineConfig& c, const std::string& k, const std::string& v) { c.*member = parse_bool(k, v); },
            [member](const PipelineConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

Field widths(std::array<int, 2> PipelineConfig::*member) {
    return {[member](PipelineConfig& c, const std::string& k, const std::string& v) {
                const auto list = parse_list(k, v);
                if (list.size() != 2) throw ConfigError("config key " + k + " needs two comma-separated widths");
                c.*member = {static_cast<int>(list[0]), static_cast<int>(list[1])};
            },
            [member](const PipelineConfig& c) {
                return std::to_string((c.*member)[0]) + "," + std::to_string((c.*member)[1]);
            }};
}

const std::map<std::string, Field>& fields() {
    using LW = losses::LossWeights;
    static const std::map<std::string, Field> table = {
        {"loss.alpha", weight(&LW::alpha)},
        {"loss.gamma1", weight(&LW::gamma1)},
        {"loss.gamma2", weight(&LW::gamma2)},
        {"loss.beta1", weight(&LW::beta1)},
        {"loss.beta2", weight(&LW::beta2)},
        {"loss.beta3", weight(&LW::beta3)},
        {"loss.beta4", weight(&LW::beta4)},
        {"loss.t_m", weight(&LW::t_m)},
        {"dro.eta", real(&PipelineConfig::dro_eta)},
        {"train.max_epoch_1", integer(&PipelineConfig::max_epoch_1)},
        {"train.max_epoch_2", integer(&PipelineConfig::max_epoch_2)},
        {"train.max_epoch_3", integer(&PipelineConfig::max_epoch_3)},
        {"train.max_itr", integer(&PipelineConfig::max_itr)},
        {"train.batch_size", integer(&PipelineConfig::batch_size)},
        {"train.learning_rate", real(&PipelineConfig::learning_rate)},
        {"train.weight_decay", real(&PipelineConfig::weight_decay)},
        {"train.freeze_norm_after_pretrain", flag(&PipelineConfig::freeze_norm_after_pretrain)},
        {"select.softmax_threshold", real(&PipelineConfig::softmax_threshold)},
        {"stats.recompute_m_dis", flag(&PipelineConfig::recompute_m_dis)},
        {"tta.tau", real(&PipelineConfig::tau)},
        {"tta.noise_levels",
         {[](PipelineConfig& c, const std::string& k, const std::string& v) { c.noise_levels = parse_list(k, v); },
          [](const PipelineConfig& c) { return join(c.noise_levels); }}},
        {"tta.resample_factors",
         {[](PipelineConfig& c, const std::string& k, const std::string& v) { c.resample_factors = parse_list(k, v); },
          [](const PipelineConfig& c) { return join(c.resample_factors); }}},
        {"tta.mode",
         {[](PipelineConfig& c, const std::string&, const std::string& v) { c.mode = parse_inference_mode(v); },
          [](const PipelineConfig& c) { return to_string(c.mode); }}},
        {"net.extractor", widths(&PipelineConfig::extractor)},
        {"net.classifier", widths(&PipelineConfig::classifier)},
        {"features.bands",
         {[](PipelineConfig& c, const std::string&, const std::string& v) { c.bands = v; },
          [](const PipelineConfig& c) { return c.bands; }}},
        {"features.window_s", real(&PipelineConfig::window_s)},
        {"features.step_s", real(&PipelineConfig::step_s)},
        {"features.share_source_normalization", flag(&PipelineConfig::share_source_normalization)},
        {"filter.enabled", flag(&PipelineConfig::filter_enabled)},
        {"filter.low", real(&PipelineConfig::filter_low)},
        {"filter.high", real(&PipelineConfig::filter_high)},
        {"seed",
         {[](PipelineConfig& c, const std::string& k, const std::string& v) {
              c.seed = static_cast<std::uint64_t>(parse_int(k, v));
          },
          [](const PipelineConfig& c) { return std::to_string(c.seed); }}},
    };
    return table;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues out;
    std::stringstream ss(text);
    std::string line;
    int number = 0;
    while (std::getline(ss, line)) {
        ++number;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(number) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

KeyValues load_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str());
}

net::Architecture PipelineConfig::architecture(int input, int classes) const {
    net::Architecture a;
    a.input = input;
    a.extractor = extractor;
    a.classifier = classifier;
    a.classes = classes;
    a.validate();
    return a;
}

void PipelineConfig::apply(KeyValues& keys) {
    const auto& table = fields();
    for (auto it = keys.begin(); it != keys.end();) {
        auto f = table.find(it->first);
        if (f == table.end()) {
            ++it;
            continue;
        }
        f->second.set(*this, it->first, it->second);
        it = keys.erase(it);
    }
}

KeyValues PipelineConfig::to_key_values() const {
    KeyValues out;
    for (const auto& [key, field] : fields()) out[key] = field.get(*this);
    return out;
}

void PipelineConfig::validate() const {
    weights.validate();
    if (max_epoch_1 < 0 || max_epoch_2 < 0 || max_epoch_3 < 0) throw ConfigError("epoch counts must be >= 0");
    if (max_itr < 1) throw ConfigError("train.max_itr must be >= 1");
    if (batch_size < 2) throw ConfigError("train.batch_size must be >= 2");
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
    if (!(dro_eta >= 0.0)) throw ConfigError("dro.eta must be >= 0");
    if (!(softmax_threshold >= 0.0 && softmax_threshold < 1.0)) throw ConfigError("select.softmax_threshold must lie in [0, 1)");
    if (tau < 0.0) throw ConfigError("tta.tau must be >= 0");
    for (double s : noise_levels)
        if (s < 0.0) throw ConfigError("tta.noise_levels must be >= 0");
    for (double f : resample_factors)
        if (!(f >= 0.5 && f <= 2.0)) throw ConfigError("tta.resample_factors must lie in [0.5, 2]");
    if (mode != InferenceMode::NoTta && tta_count() < 1) throw ConfigError("TTA needs at least one transform");
}

std::string format_key_values(const KeyValues& keys) {
    std::string out;
    for (const auto& [k, v] : keys) out += k + " = " + v + "\n";
    return out;
}

void reject_unknown(const KeyValues& keys) {
    if (keys.empty()) return;
    std::string names;
    for (const auto& [k, v] : keys) names += (names.empty() ? "" : ", ") + k;
    throw ConfigError("unknown config key(s): " + names);
}

}  // namespace eegda
