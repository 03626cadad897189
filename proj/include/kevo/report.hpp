#pragma once

#include <string>
#include <vector>

#include "kevo/ke.hpp"

namespace kevo {

/// CSV summary, one data row per generation. Columns: generation,
/// dense_metric, slim_metric, sparsity, one mean_abs_fit_<layer> and
/// mean_abs_reset_<layer> pair per conv/linear layer, s_h2d, c_h2d.
/// Absent fields (e.g. no slim metric under WELS) render as empty, not zero.
std::string report_to_csv(const std::vector<GenerationLog>& logs);

/// Structured variant: one JSON record per line per generation.
std::string report_to_jsonl(const std::vector<GenerationLog>& logs);

void emit_report(const std::vector<GenerationLog>& logs,
                 const std::string& csv_path, const std::string& jsonl_path);

}  // namespace kevo
