#include "ewfs/report_io.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace ewfs {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  if (text == "nan") return std::numeric_limits<T>::quiet_NaN();
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw DataError(where + ": cannot parse '" + text + "' as a number");
  return value;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

constexpr const char* kResultsHeader = "dataset,mechanism,rate,method,run,fold,feature_count,accuracy";

}  // namespace

void write_results_csv(const std::vector<AccuracyRecord>& records, std::ostream& out) {
  out << kResultsHeader << '\n';
  for (const auto& r : records)
    out << r.dataset << ',' << r.mechanism << ',' << format_double(r.rate) << ',' << r.method << ',' << r.run << ','
        << r.fold << ',' << r.feature_count << ',' << format_double(r.accuracy) << '\n';
}

std::vector<AccuracyRecord> read_results_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kResultsHeader)
    throw DataError(source_name + ": expected header '" + kResultsHeader + "'");
  std::vector<AccuracyRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_line(line);
    const auto where = source_name + ":" + std::to_string(line_no);
    if (f.size() != 8) throw DataError(where + ": expected 8 fields, found " + std::to_string(f.size()));
    AccuracyRecord r;
    r.dataset = f[0];
    r.mechanism = f[1];
    r.rate = parse_number<double>(f[2], where);
    r.method = f[3];
    r.run = parse_number<int>(f[4], where);
    r.fold = parse_number<int>(f[5], where);
    r.feature_count = parse_number<int>(f[6], where);
    r.accuracy = parse_number<double>(f[7], where);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<AccuracyRecord> load_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open results file " + path.string());
  return read_results_csv(in, path.string());
}

void write_summary_csv(const std::vector<AccuracyRecord>& records, std::ostream& out) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::vector<Key> cells;
  std::vector<std::string> methods;
  std::map<std::pair<Key, std::string>, EvalReport> grouped;
  for (const auto& r : records) {
    const Key key{r.dataset, r.mechanism, format_double(r.rate)};
    if (std::find(cells.begin(), cells.end(), key) == cells.end()) cells.push_back(key);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    grouped[{key, r.method}].records.push_back(r);
  }
  out << "dataset,mechanism,rate";
  for (const auto& m : methods) out << ',' << m;
  out << '\n';
  for (const auto& key : cells) {
    out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key);
    for (const auto& m : methods) {
      out << ',';
      const auto it = grouped.find({key, m});
      if (it != grouped.end()) out << format_double(it->second.cell_mean(m));
    }
    out << '\n';
  }
}

void write_curves_csv(const EvalReport& report, std::ostream& out) {
  out << "method,feature_count,accuracy\n";
  for (const auto& m : report.methods())
    for (const auto& [s, acc] : report.curve(m)) out << m << ',' << s << ',' << format_double(acc) << '\n';
}

void write_diagnostics_csv(const std::vector<FoldDiagnostics>& diagnostics, std::ostream& out) {
  out << "method,run,fold,outer_iters,outer_converged,m_stage_iters,m_stages_converged,error\n";
  for (const auto& d : diagnostics) {
    out << d.method << ',' << d.run << ',' << d.fold << ',' << d.outer_iters << ',' << d.outer_converged << ',';
    for (std::size_t i = 0; i < d.m_stage_iters.size(); ++i) out << (i ? ";" : "") << d.m_stage_iters[i];
    std::string error = d.error;
    std::replace(error.begin(), error.end(), ',', ';');
    out << ',' << d.m_stages_converged << ',' << error << '\n';
  }
}

void write_weights_csv(const FeatureWeights& weights, const std::vector<std::string>& names, std::ostream& out) {
  if (static_cast<Index>(names.size()) != weights.size()) throw DataError("feature name count mismatch");
  out << "feature_name,weight\n";
  for (Index l : rank_features(weights)) out << names[static_cast<std::size_t>(l)] << ',' << format_double(weights(l)) << '\n';
}

FeatureWeights read_weights_csv(std::istream& in, const std::vector<std::string>& names,
                                const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line) || split_line(strip_cr(line)).size() < 2)
    throw DataError(source_name + ": missing header");
  FeatureWeights v = Vector::Constant(static_cast<Index>(names.size()), std::numeric_limits<double>::quiet_NaN());
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_line(line);
    const auto where = source_name + ":" + std::to_string(line_no);
    if (f.size() < 2) throw DataError(where + ": expected feature,weight");
    const auto it = std::find(names.begin(), names.end(), f[0]);
    if (it == names.end()) throw DataError(where + ": unknown feature '" + f[0] + "'");
    v(it - names.begin()) = parse_number<double>(f[1], where);
  }
  if (!v.allFinite()) throw DataError(source_name + ": weights missing for some features");
  return v;
}

void write_trace_csv(const std::string& index_name, const std::string& value_name,
                     const std::vector<double>& values, std::ostream& out) {
  out << index_name << ',' << value_name << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) out << i + 1 << ',' << format_double(values[i]) << '\n';
}

void write_significance_csv(const std::vector<SignificanceRow>& rows, std::ostream& out) {
  out << "method_a,method_b,level,pairs,n_effective,n_plus,n_minus,r_plus,r_minus,p_value,exact\n";
  for (const auto& row : rows) {
    const auto& w = row.result;
    out << row.method_a << ',' << row.method_b << ',' << row.level << ',' << row.pairs << ',' << w.n_effective << ','
        << w.n_plus << ',' << w.n_minus << ',' << format_double(w.r_plus) << ',' << format_double(w.r_minus) << ','
        << format_double(w.p_value) << ',' << w.exact << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ewfs
