#include "ewfs/eval.hpp"

#include "ewfs/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

namespace ewfs {

Labels knn_classify(const Matrix& train_X, const Labels& train_y, const Matrix& test_X, int k) {
  const Index n = train_X.rows(), d = train_X.cols();
  if (n == 0) throw DataError("kNN: empty training set");
  if (static_cast<Index>(train_y.size()) != n) throw DataError("kNN: label count does not match row count");
  if (test_X.cols() != d) throw DataError("kNN: train and test feature counts differ");
  if (k < 1 || k > n) throw ConfigError("kNN: k must be in [1, " + std::to_string(n) + "]");

  int num_classes = 0;
  for (int label : train_y) num_classes = std::max(num_classes, label + 1);

  Labels predicted(static_cast<std::size_t>(test_X.rows()));
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n));
  std::vector<int> votes(static_cast<std::size_t>(num_classes));
  std::vector<double> vote_dist(static_cast<std::size_t>(num_classes));
  for (Index t = 0; t < test_X.rows(); ++t) {
    for (Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Index l = 0; l < d; ++l) {
        const double diff = test_X(t, l) - train_X(j, l);
        s += diff * diff;
      }
      dist[static_cast<std::size_t>(j)] = {std::sqrt(s), j};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    std::fill(votes.begin(), votes.end(), 0);
    std::fill(vote_dist.begin(), vote_dist.end(), 0.0);
    for (int m = 0; m < k; ++m) {
      const auto c = static_cast<std::size_t>(train_y[static_cast<std::size_t>(dist[static_cast<std::size_t>(m)].second)]);
      ++votes[c];
      vote_dist[c] += dist[static_cast<std::size_t>(m)].first;
    }
    int best = -1;
    for (int c = 0; c < num_classes; ++c) {
      const auto uc = static_cast<std::size_t>(c);
      if (votes[uc] == 0) continue;
      if (best < 0) {
        best = c;
        continue;
      }
      const auto ub = static_cast<std::size_t>(best);
      if (votes[uc] > votes[ub] || (votes[uc] == votes[ub] && vote_dist[uc] < vote_dist[ub])) best = c;
    }
    predicted[static_cast<std::size_t>(t)] = best;
  }
  return predicted;
}

std::vector<double> accuracy_curve(const FeatureWeights& weights, const Matrix& train_X, const Labels& train_y,
                                   const Matrix& test_X, const Labels& test_y, int k) {
  if (weights.size() != train_X.cols()) throw DataError("weight vector length does not match feature count");
  if (static_cast<Index>(test_y.size()) != test_X.rows()) throw DataError("test label count mismatch");
  if (test_X.rows() == 0) throw DataError("accuracy on an empty test set");
  const auto order = rank_features(weights);
  std::vector<double> curve;
  std::vector<Index> prefix;
  for (Index feature : order) {
    prefix.push_back(feature);
    const Matrix tr = train_X(Eigen::all, prefix);
    const Matrix te = test_X(Eigen::all, prefix);
    const auto predicted = knn_classify(tr, train_y, te, k);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == test_y[i];
    curve.push_back(static_cast<double>(correct) / static_cast<double>(predicted.size()));
  }
  return curve;
}

std::string PipelineId::name() const {
  return (imputer ? to_string(*imputer) : std::string("ewmc")) + "+" + to_string(selector);
}

PipelineId parse_pipeline(std::string_view text) {
  const auto plus = text.find('+');
  if (plus == std::string_view::npos)
    throw ConfigError("method '" + std::string(text) + "' is not of the form <imputer>+<selector>");
  PipelineId id;
  const auto imputer = text.substr(0, plus);
  if (imputer != "ewmc") id.imputer = parse_imputer(imputer);
  id.selector = parse_selector(text.substr(plus + 1));
  return id;
}

void ProtocolConfig::validate() const {
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (knn_k < 1) throw ConfigError("knn_k must be positive");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (ensemble_methods.empty()) throw ConfigError("ensemble needs at least one imputer");
  framework.validate();
  imputer.validate();
}

namespace {

struct Job {
  int run;
  FoldSplit split;
};

struct JobOutput {
  std::vector<AccuracyRecord> records;
  std::vector<FoldDiagnostics> diagnostics;
};

struct FittedFold {
  FeatureWeights weights;
  Matrix train;
  Matrix test;
};

FittedFold fit_pipeline(const PipelineId& method, const IncompleteDataset& train, const IncompleteDataset& test,
                        const FrameworkConfig& framework, const ProtocolConfig& cfg, FoldDiagnostics& diag) {
  FittedFold out;
  if (method.is_ewmc()) {
    const auto ensemble = build_ensemble(train, cfg.ensemble_methods, cfg.imputer);
    auto fw = framework;
    fw.selector = method.selector;
    const auto result = run_framework(train, ensemble, fw);
    diag.outer_iters = result.outer_iters;
    diag.outer_converged = result.converged;
    for (const auto& stage : result.m_stages) {
      diag.m_stage_iters.push_back(stage.iterations);
      diag.m_stages_converged = diag.m_stages_converged && stage.converged;
    }
    const auto tested = impute_test_set(train, test, result.v, fw, cfg.ensemble_methods, cfg.imputer);
    diag.m_stage_iters.push_back(tested.m_stage.iterations);
    diag.m_stages_converged = diag.m_stages_converged && tested.m_stage.converged;
    out.weights = result.v;
    out.train = result.Z;
    out.test = tested.values;
  } else {
    out.train = impute(train, *method.imputer, cfg.imputer).values;
    out.weights = select_features(method.selector, out.train, train.labels, framework.relief).weights;
    const auto stacked = impute(stack_rows(train, test), *method.imputer, cfg.imputer).values;
    out.test = stacked.bottomRows(test.rows());
  }
  return out;
}

JobOutput run_job(const Job& job, const IncompleteDataset& data, const std::string& dataset_name,
                  const std::optional<MissingSpec>& spec, std::span<const PipelineId> methods,
                  const ProtocolConfig& cfg) {
  const auto run = static_cast<std::uint64_t>(job.run);
  const auto fold = static_cast<std::uint64_t>(job.split.fold_id);
  auto train = subset_rows(data, job.split.train_indices);
  auto test = subset_rows(data, job.split.test_indices);
  if (spec) {
    MissingSpec s = *spec;
    s.seed = derive_seed(cfg.seed, {run, fold, tag(Stage::InjectTrain)});
    train = inject(train, s);
    s.seed = derive_seed(cfg.seed, {run, fold, tag(Stage::InjectTest)});
    test = inject(test, s);
  }
  const auto params = fit_normalizer(train);
  train = apply_normalizer(train, params);
  test = apply_normalizer(test, params);

  FrameworkConfig framework = cfg.framework;
  framework.ewmc.seed = derive_seed(cfg.seed, {run, fold, tag(Stage::FactorInit)});
  framework.relief.seed = derive_seed(cfg.seed, {run, fold, tag(Stage::ReliefOrder)});

  JobOutput out;
  for (const auto& method : methods) {
    AccuracyRecord base{dataset_name, spec ? to_string(spec->mechanism) : std::string("none"),
                        spec ? spec->rate : 0.0, method.name(), job.run, job.split.fold_id, 0, 0.0};
    FoldDiagnostics diag;
    diag.method = base.method;
    diag.run = job.run;
    diag.fold = job.split.fold_id;
    try {
      const auto fitted = fit_pipeline(method, train, test, framework, cfg, diag);
      const auto curve = accuracy_curve(fitted.weights, fitted.train, train.labels, fitted.test, test.labels, cfg.knn_k);
      for (std::size_t s = 0; s < curve.size(); ++s) {
        auto rec = base;
        rec.feature_count = static_cast<int>(s + 1);
        rec.accuracy = curve[s];
        out.records.push_back(rec);
      }
    } catch (const NumericalError& e) {
      auto rec = base;
      rec.accuracy = std::numeric_limits<double>::quiet_NaN();
      out.records.push_back(rec);
      diag.error = e.what();
    }
    out.diagnostics.push_back(std::move(diag));
  }
  return out;
}

bool failed(const AccuracyRecord& r) { return r.feature_count == 0; }

}  // namespace

EvalReport run_protocol(const IncompleteDataset& data, const std::string& dataset_name,
                        const std::optional<MissingSpec>& spec, std::span<const PipelineId> methods,
                        const ProtocolConfig& cfg) {
  cfg.validate();
  data.validate();
  if (methods.empty()) throw ConfigError("no methods to evaluate");
  if (spec) {
    spec->validate();
    if (!data.is_complete()) throw ConfigError("missingness injection needs a complete dataset");
  }

  std::vector<Job> jobs;
  for (int run = 0; run < cfg.runs; ++run) {
    const auto seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(run), tag(Stage::Folds)});
    for (auto& split : stratified_folds(data.labels, cfg.folds, seed, run)) jobs.push_back({run, std::move(split)});
  }

  std::vector<JobOutput> outputs(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        outputs[i] = run_job(jobs[i], data, dataset_name, spec, methods, cfg);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next = jobs.size();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  EvalReport report;
  for (auto& o : outputs) {
    report.records.insert(report.records.end(), o.records.begin(), o.records.end());
    report.diagnostics.insert(report.diagnostics.end(), o.diagnostics.begin(), o.diagnostics.end());
  }
  return report;
}

double EvalReport::cell_mean(const std::string& method) const {
  // run -> fold -> (sum, count)
  std::map<int, std::map<int, std::pair<double, int>>> folds;
  std::set<std::pair<int, int>> failed_folds;
  for (const auto& r : records) {
    if (r.method != method) continue;
    if (failed(r)) {
      failed_folds.insert({r.run, r.fold});
      continue;
    }
    auto& cell = folds[r.run][r.fold];
    cell.first += r.accuracy;
    ++cell.second;
  }
  double total = 0.0;
  int runs = 0;
  for (const auto& [run, per_fold] : folds) {
    double run_sum = 0.0;
    int run_folds = 0;
    for (const auto& [fold, cell] : per_fold) {
      if (failed_folds.count({run, fold})) continue;
      run_sum += cell.first / cell.second;
      ++run_folds;
    }
    if (run_folds == 0) continue;
    total += run_sum / run_folds;
    ++runs;
  }
  return runs ? total / runs : std::numeric_limits<double>::quiet_NaN();
}

std::map<int, double> EvalReport::curve(const std::string& method) const {
  std::map<int, std::pair<double, int>> sums;
  for (const auto& r : records) {
    if (r.method != method || failed(r)) continue;
    sums[r.feature_count].first += r.accuracy;
    ++sums[r.feature_count].second;
  }
  std::map<int, double> out;
  for (const auto& [s, cell] : sums) out[s] = cell.first / cell.second;
  return out;
}

std::vector<std::string> EvalReport::methods() const {
  std::vector<std::string> out;
  for (const auto& r : records)
    if (std::find(out.begin(), out.end(), r.method) == out.end()) out.push_back(r.method);
  return out;
}

int EvalReport::failures() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(), failed));
}

}  // namespace ewfs
