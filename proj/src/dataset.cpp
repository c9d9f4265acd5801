#include "ewfs/dataset.hpp"

#include "ewfs/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace ewfs {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  while (true) {
    auto comma = rest.find(',');
    cells.emplace_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return cells;
}

bool parse_real(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

}  // namespace

Index IncompleteDataset::missing_count() const { return (!mask).count(); }

void IncompleteDataset::validate() const {
  if (mask.rows() != values.rows() || mask.cols() != values.cols())
    throw DataError("mask and values have different shapes");
  if (static_cast<Index>(labels.size()) != values.rows())
    throw DataError("label count does not match row count");
  if (static_cast<Index>(feature_names.size()) != values.cols())
    throw DataError("feature name count does not match column count");
  if (values.cols() > 0) {
    for (Index i = 0; i < rows(); ++i)
      if (!mask.row(i).any())
        throw DataError("row " + std::to_string(i) + " has no observed feature");
  }
  std::vector<bool> seen(class_names.size(), false);
  for (int y : labels) {
    if (y < 0 || y >= num_classes()) throw DataError("label id out of range");
    seen[static_cast<std::size_t>(y)] = true;
  }
  if (!labels.empty() && std::find(seen.begin(), seen.end(), false) != seen.end())
    throw DataError("a class id has no member");
}

IncompleteDataset make_complete_dataset(Matrix values, Labels labels,
                                        std::vector<std::string> feature_names,
                                        std::vector<std::string> class_names) {
  IncompleteDataset data;
  data.mask = Mask::Constant(values.rows(), values.cols(), true);
  if (feature_names.empty())
    for (Index j = 0; j < values.cols(); ++j) feature_names.push_back("f" + std::to_string(j + 1));
  if (class_names.empty()) {
    int top = labels.empty() ? -1 : *std::max_element(labels.begin(), labels.end());
    for (int c = 0; c <= top; ++c) class_names.push_back(std::to_string(c));
  }
  data.values = std::move(values);
  data.labels = std::move(labels);
  data.feature_names = std::move(feature_names);
  data.class_names = std::move(class_names);
  data.validate();
  return data;
}

IncompleteDataset with_values(const IncompleteDataset& data, Matrix completed) {
  if (completed.rows() != data.rows() || completed.cols() != data.cols())
    throw DataError("completed matrix has the wrong shape");
  IncompleteDataset out = data;
  out.values = std::move(completed);
  out.mask.setConstant(true);
  return out;
}

IncompleteDataset subset_rows(const IncompleteDataset& data, std::span<const Index> rows) {
  IncompleteDataset out;
  out.values.resize(static_cast<Index>(rows.size()), data.cols());
  out.mask.resize(static_cast<Index>(rows.size()), data.cols());
  out.labels.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.values.row(static_cast<Index>(k)) = data.values.row(rows[k]);
    out.mask.row(static_cast<Index>(k)) = data.mask.row(rows[k]);
    out.labels.push_back(data.labels[static_cast<std::size_t>(rows[k])]);
  }
  out.feature_names = data.feature_names;
  out.class_names = data.class_names;
  out.label_column = data.label_column;
  return out;
}

IncompleteDataset stack_rows(const IncompleteDataset& top, const IncompleteDataset& bottom) {
  if (top.cols() != bottom.cols())
    throw DataError("cannot stack datasets with " + std::to_string(top.cols()) + " and " +
                    std::to_string(bottom.cols()) + " features");
  if (top.class_names != bottom.class_names)
    throw DataError("cannot stack datasets with different class vocabularies");
  IncompleteDataset out = top;
  out.values.resize(top.rows() + bottom.rows(), top.cols());
  out.values << top.values, bottom.values;
  out.mask.resize(top.rows() + bottom.rows(), top.cols());
  out.mask << top.mask, bottom.mask;
  out.labels.insert(out.labels.end(), bottom.labels.begin(), bottom.labels.end());
  return out;
}

const std::set<std::string>& default_missing_tokens() {
  static const std::set<std::string> tokens{"", "?", "NA"};
  return tokens;
}

IncompleteDataset read_csv(std::istream& in, const std::string& label_column,
                           const std::set<std::string>& missing_tokens,
                           const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source_name + ": empty file, header row expected");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_line(line);
  auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end())
    throw DataError(source_name + ": label column '" + label_column + "' not found in header");
  const auto label_pos = static_cast<std::size_t>(label_it - header.begin());

  IncompleteDataset data;
  data.label_column = label_column;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_pos) data.feature_names.push_back(header[c]);
  const auto d = static_cast<Index>(data.feature_names.size());

  std::vector<double> values;
  std::vector<bool> observed;
  std::map<std::string, int> class_ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    const std::string where = source_name + ":" + std::to_string(line_no);
    if (cells.size() != header.size())
      throw DataError(where + ": expected " + std::to_string(header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    const std::string& label = cells[label_pos];
    if (missing_tokens.count(label))
      throw DataError(where + ": label column holds missing token '" + label + "'");
    auto [it, inserted] = class_ids.try_emplace(label, static_cast<int>(class_ids.size()));
    if (inserted) data.class_names.push_back(label);
    data.labels.push_back(it->second);

    bool any_observed = false;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_pos) continue;
      if (missing_tokens.count(cells[c])) {
        values.push_back(0.0);
        observed.push_back(false);
        continue;
      }
      double x = 0.0;
      if (!parse_real(cells[c], x))
        throw DataError(where + ", column '" + header[c] + "': cannot parse '" + cells[c] + "'");
      values.push_back(x);
      observed.push_back(true);
      any_observed = true;
    }
    if (!any_observed && d > 0) throw DataError(where + ": row has no observed feature");
  }

  const auto n = static_cast<Index>(data.labels.size());
  data.values.resize(n, d);
  data.mask.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) {
      const auto k = static_cast<std::size_t>(i * d + j);
      data.values(i, j) = values[k];
      data.mask(i, j) = observed[k];
    }
  data.validate();
  return data;
}

IncompleteDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                           const std::set<std::string>& missing_tokens) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_csv(in, label_column, missing_tokens, path.string());
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

void write_csv(const IncompleteDataset& data, std::ostream& out) {
  for (const auto& name : data.feature_names) out << name << ',';
  out << data.label_column << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) {
      if (data.mask(i, j)) out << format_double(data.values(i, j));
      out << ',';
    }
    out << data.class_names[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])]
        << '\n';
  }
}

void save_csv(const IncompleteDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(data, out);
}

NormalizationParams fit_normalizer(const IncompleteDataset& data) {
  const Index d = data.cols();
  NormalizationParams p{Vector::Zero(d), Vector::Zero(d), std::vector<bool>(static_cast<std::size_t>(d))};
  for (Index j = 0; j < d; ++j) {
    bool any = false;
    for (Index i = 0; i < data.rows(); ++i) {
      if (!data.mask(i, j)) continue;
      const double x = data.values(i, j);
      if (!any) {
        p.min(j) = p.max(j) = x;
        any = true;
      } else {
        p.min(j) = std::min(p.min(j), x);
        p.max(j) = std::max(p.max(j), x);
      }
    }
    p.constant[static_cast<std::size_t>(j)] = p.max(j) == p.min(j);
  }
  return p;
}

IncompleteDataset apply_normalizer(const IncompleteDataset& data, const NormalizationParams& params) {
  if (params.min.size() != data.cols() || params.max.size() != data.cols())
    throw DataError("normalizer fitted on " + std::to_string(params.min.size()) +
                    " features, data has " + std::to_string(data.cols()));
  IncompleteDataset out = data;
  for (Index j = 0; j < data.cols(); ++j) {
    const bool constant = params.constant[static_cast<std::size_t>(j)];
    const double span = params.max(j) - params.min(j);
    for (Index i = 0; i < data.rows(); ++i) {
      if (!data.mask(i, j)) {
        out.values(i, j) = 0.0;
        continue;
      }
      out.values(i, j) =
          constant ? 0.0 : std::clamp((data.values(i, j) - params.min(j)) / span, 0.0, 1.0);
    }
  }
  return out;
}

Matrix denormalize(const Matrix& values, const NormalizationParams& params) {
  if (params.min.size() != values.cols()) throw DataError("normalizer dimension mismatch");
  Matrix out(values.rows(), values.cols());
  for (Index j = 0; j < values.cols(); ++j)
    out.col(j) = values.col(j).array() * (params.max(j) - params.min(j)) + params.min(j);
  return out;
}

std::vector<FoldSplit> stratified_folds(const Labels& labels, int k, std::uint64_t seed, int run_id) {
  const auto n = labels.size();
  if (k < 2) throw ConfigError("number of folds must be at least 2");
  if (static_cast<std::size_t>(k) > n)
    throw ConfigError("number of folds (" + std::to_string(k) + ") exceeds sample count (" +
                      std::to_string(n) + ")");
  int num_classes = 0;
  for (int y : labels) num_classes = std::max(num_classes, y + 1);
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(labels[i])].push_back(static_cast<Index>(i));

  Rng rng(seed);
  std::vector<int> assignment(n, 0);
  int next_fold = 0;
  for (auto& cls : members) {
    std::shuffle(cls.begin(), cls.end(), rng);
    for (Index i : cls) {
      assignment[static_cast<std::size_t>(i)] = next_fold;
      next_fold = (next_fold + 1) % k;
    }
  }

  std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    folds[static_cast<std::size_t>(f)].fold_id = f;
    folds[static_cast<std::size_t>(f)].run_id = run_id;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (int f = 0; f < k; ++f) {
      auto& split = folds[static_cast<std::size_t>(f)];
      (assignment[i] == f ? split.test_indices : split.train_indices).push_back(static_cast<Index>(i));
    }
  return folds;
}

}  // namespace ewfs
