#include "eegda/report.hpp"

#include <json.hpp>

#include <fstream>

namespace eegda::report {

using nlohmann::json;

namespace {

json terms_json(const losses::StageTerms& t) {
    json j = json::object();
    auto put = [&](const char* name, const std::optional<double>& v) {
        if (v) j[name] = *v;
    };
    put("cls", t.cls);
    put("dis", t.dis);
    put("comp", t.comp);
    put("sep", t.sep);
    put("comp_s", t.comp_s);
    put("comp_t", t.comp_t);
    put("sep_s", t.sep_s);
    put("sep_t", t.sep_t);
    put("cd", t.cd);
    put("cmb", t.cmb);
    return j;
}

json epochs_json(const std::vector<pipeline::EpochLoss>& epochs) {
    json arr = json::array();
    for (const auto& e : epochs) arr.push_back({{"epoch", e.epoch}, {"total", e.total}, {"terms", terms_json(e.terms)}});
    return arr;
}

}  // namespace

std::string metrics_line(const std::string& variant, const evalkit::MetricsReport& r) {
    json j;
    j["type"] = "metrics";
    j["variant"] = variant;
    j["accuracy"] = r.accuracy;
    json per = json::array();
    for (const auto& c : r.per_class)
        per.push_back({{"se", c.sensitivity},
                       {"ppv", c.ppv},
                       {"f1", c.f1},
                       {"se_undefined", c.sensitivity_undefined},
                       {"ppv_undefined", c.ppv_undefined},
                       {"f1_undefined", c.f1_undefined}});
    j["per_class"] = per;
    json cm = json::array();
    for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < r.confusion.cols(); ++k) row.push_back(r.confusion(i, k));
        cm.push_back(row);
    }
    j["confusion"] = cm;
    if (r.cost) j["tta"] = {{"total", r.cost->total}, {"gated", r.cost->gated}, {"augmented_passes", r.cost->augmented_passes}};
    return j.dump();
}

std::string cost_line(const std::string& variant, const pctta::TtaCostReport& cost, bool with_time) {
    json j{{"type", "tta_cost"},
           {"variant", variant},
           {"total", cost.total},
           {"gated", cost.gated},
           {"augmented_passes", cost.augmented_passes}};
    if (with_time) j["wall_seconds"] = cost.wall_seconds;
    return j.dump();
}

std::vector<std::string> trace_lines(const pipeline::RunResult& run) {
    std::vector<std::string> out;
    out.push_back(json{{"type", "stage"}, {"stage", "pretrain"}, {"epochs", epochs_json(run.pretrain_losses)}}.dump());
    out.push_back(json{{"type", "stage"}, {"stage", "cluster"}, {"epochs", epochs_json(run.cluster_losses)}}.dump());
    for (const auto& it : run.trace.iterations) {
        json sel = json::array();
        for (const auto& s : it.selected) sel.push_back({s.index, s.label});
        out.push_back(json{{"type", "adapt_iteration"},
                           {"iteration", it.iteration},
                           {"selected_count", it.selected.size()},
                           {"per_class", it.per_class},
                           {"pool_before", it.pool_before},
                           {"pool_after", it.pool_after},
                           {"selected", sel},
                           {"epochs", epochs_json(it.epochs)}}
                          .dump());
    }
    return out;
}

std::vector<std::string> decision_lines(const std::vector<pctta::TtaDecision>& decisions) {
    std::vector<std::string> out;
    out.reserve(decisions.size());
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const auto& d = decisions[i];
        json votes = json::array();
        for (const auto& v : d.votes) votes.push_back(v.label);
        out.push_back(json{{"type", "tta_decision"},
                           {"sample", i},
                           {"gated", d.gated},
                           {"entropy_bits", d.entropy_bits},
                           {"discrepancy", d.discrepancy},
                           {"votes", votes},
                           {"final", d.final_label}}
                          .dump());
    }
    return out;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw IoError("write failed for " + path);
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(line);
    return out;
}

}  // namespace eegda::report
