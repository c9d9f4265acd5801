#pragma once

#include "ewfs/eval.hpp"
#include "ewfs/wilcoxon.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ewfs {

/// Long format: dataset,mechanism,rate,method,run,fold,feature_count,accuracy.
void write_results_csv(const std::vector<AccuracyRecord>& records, std::ostream& out);
std::vector<AccuracyRecord> read_results_csv(std::istream& in, const std::string& source_name = "<stream>");
std::vector<AccuracyRecord> load_results_csv(const std::filesystem::path& path);

/// One row per (dataset, mechanism, rate), one column per method.
void write_summary_csv(const std::vector<AccuracyRecord>& records, std::ostream& out);

/// method,feature_count,accuracy averaged over runs and folds.
void write_curves_csv(const EvalReport& report, std::ostream& out);

void write_diagnostics_csv(const std::vector<FoldDiagnostics>& diagnostics, std::ostream& out);

/// feature_name,weight in rank order.
void write_weights_csv(const FeatureWeights& weights, const std::vector<std::string>& names, std::ostream& out);
FeatureWeights read_weights_csv(std::istream& in, const std::vector<std::string>& names,
                                const std::string& source_name = "<stream>");

void write_trace_csv(const std::string& index_name, const std::string& value_name,
                     const std::vector<double>& values, std::ostream& out);

struct SignificanceRow {
  std::string method_a;
  std::string method_b;
  std::string level;
  int pairs = 0;
  WilcoxonResult result;
};

void write_significance_csv(const std::vector<SignificanceRow>& rows, std::ostream& out);

/// Writes `text` to `path` through a temporary file in the same directory.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ewfs
