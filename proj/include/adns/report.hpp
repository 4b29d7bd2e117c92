#pragma once

#include "adns/bounds.hpp"
#include "adns/metrics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace adns {

/// One finished run as emitted to results files. Metrics are fractions.
struct RunRecord {
    std::string method;
    std::uint64_t seed = 0;
    double k0 = 0.0;
    double alpha_max = 0.0;
    double alpha_min = 0.0;
    double beta = 0.0;
    AccuracyMatrix accuracy;
    double acc = 0.0;
    /// Absent for single-task runs, where backward transfer is undefined.
    std::optional<double> bwt;
    double la = 0.0;
    std::vector<BoundReport> bounds;

    friend bool operator==(const RunRecord&, const RunRecord&);
};

/// Fills acc/bwt/la from `accuracy`.
void compute_metrics(RunRecord& record);

enum class ResultFormat { Csv, Json };

ResultFormat parse_result_format(const std::string& name);
std::string to_string(ResultFormat f);

/// CSV: header then one row per run. Columns are method, seed, k0, alpha_max,
/// alpha_min, beta, ACC, BWT, LA (percentages, 2 decimals), then A_j_i for
/// 1 <= i <= j <= T (percentages). Runs with fewer tasks leave trailing cells empty.
std::string format_results_csv(const std::vector<RunRecord>& runs);
std::string format_results_json(const std::vector<RunRecord>& runs);
std::vector<RunRecord> parse_results_json(const std::string& text);

/// Writes to `path` through a temporary sibling and a rename, so a failed
/// write never leaves a partial file. Throws IoError carrying the path.
void emit_results(const std::vector<RunRecord>& runs, ResultFormat format, const std::string& path);

/// Atomic text write used by every file emitter.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace adns
