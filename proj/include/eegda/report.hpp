#pragma once

// Line-delimited JSON records for metrics, adaptation traces and per-sample
// TTA decisions. Metrics records carry no wall-clock values so repeated runs
// produce identical bytes.

#include "eegda/evalkit.hpp"
#include "eegda/pctta.hpp"
#include "eegda/pipeline.hpp"

#include <string>
#include <vector>

namespace eegda::report {

std::string metrics_line(const std::string& variant, const evalkit::MetricsReport& report);
std::string cost_line(const std::string& variant, const pctta::TtaCostReport& cost, bool with_time);
std::vector<std::string> trace_lines(const pipeline::RunResult& run);
std::vector<std::string> decision_lines(const std::vector<pctta::TtaDecision>& decisions);

void write_lines(const std::string& path, const std::vector<std::string>& lines);
std::vector<std::string> read_lines(const std::string& path);

}  // namespace eegda::report
