#include "ewfs/cli.hpp"

#include "ewfs/eval.hpp"
#include "ewfs/framework.hpp"
#include "ewfs/missingness.hpp"
#include "ewfs/report_io.hpp"
#include "ewfs/rng.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace ewfs::cli {

namespace fs = std::filesystem;

namespace {

struct DataArgs {
  std::string dataset;
  std::string label = "class";
};

struct ModelArgs {
  int rank = 5;
  double gamma = 20.0;
  double eta = 0.1;
  int max_inner = 200;
  double delta = 0.01;
  int max_outer = 20;
  int imputer_k = 5;
  int svd_rank = 5;
  int em_max_iter = 50;
  int relieff_k = 10;
  int relief_iterations = 0;
};

struct ProtocolArgs {
  std::string mechanism = "none";
  double rate = 0.05;
  int runs = 10;
  int folds = 5;
  int knn_k = 5;
  int jobs = 1;
  std::uint64_t seed = 0;
};

struct Options {
  DataArgs data;
  ModelArgs model;
  ProtocolArgs protocol;
  std::string output;
  std::string method = "ewmc";
  std::string weights;
  std::string trace;
  std::string selector = "mu-reliefa";
  std::vector<std::string> methods{"ewmc+mu-reliefa"};
  std::string name;
  std::vector<int> ranks{1, 2, 3, 4, 5};
  std::vector<double> gammas{0.1, 1, 10, 20, 100};
  std::string file_a, file_b, method_a, method_b, level = "record";
};

void add_data(CLI::App* sub, DataArgs& a) {
  sub->add_option("--dataset", a.dataset, "Input CSV")->required()->check(CLI::ExistingFile);
  sub->add_option("--label", a.label, "Name of the label column")->capture_default_str();
}

void add_model(CLI::App* sub, ModelArgs& m, bool framework) {
  sub->add_option("--rank", m.rank, "Factorisation rank r")->capture_default_str();
  sub->add_option("--gamma", m.gamma, "Ridge weight")->capture_default_str();
  sub->add_option("--eta", m.eta, "M-stage stopping threshold")->capture_default_str();
  sub->add_option("--max-inner", m.max_inner, "M-stage iteration cap")->capture_default_str();
  sub->add_option("--imputer-k", m.imputer_k, "Neighbours for kNN imputation")->capture_default_str();
  sub->add_option("--svd-rank", m.svd_rank, "Rank of the SVD imputer")->capture_default_str();
  sub->add_option("--em-max-iter", m.em_max_iter, "EM iteration cap")->capture_default_str();
  if (!framework) return;
  sub->add_option("--delta", m.delta, "Outer stopping threshold on |zeta_t - zeta_t-1|; inf runs one iteration")
      ->capture_default_str();
  sub->add_option("--max-outer", m.max_outer, "Outer iteration cap")->capture_default_str();
  sub->add_option("--relieff-k", m.relieff_k, "Neighbours per class for relieff")->capture_default_str();
  sub->add_option("--relief-iterations", m.relief_iterations, "Visited samples, 0 = all")->capture_default_str();
}

void add_protocol(CLI::App* sub, ProtocolArgs& p, const std::string& default_mechanism, double default_rate) {
  p.mechanism = default_mechanism;
  p.rate = default_rate;
  sub->add_option("--mechanism", p.mechanism, "mcar, mnar or none (use the dataset's own missing cells)")
      ->capture_default_str();
  sub->add_option("--rate", p.rate, "Injected missing rate")->capture_default_str();
  sub->add_option("--runs", p.runs, "Cross-validation repetitions")->capture_default_str();
  sub->add_option("--folds", p.folds, "Folds per repetition")->capture_default_str();
  sub->add_option("--knn-k", p.knn_k, "Neighbours of the kNN classifier")->capture_default_str();
  sub->add_option("--jobs", p.jobs, "Worker threads over (run, fold) jobs")->capture_default_str();
  sub->add_option("--seed", p.seed, "Root seed")->capture_default_str();
}

ImputerConfig imputer_config(const ModelArgs& m) {
  ImputerConfig c;
  c.knn_k = m.imputer_k;
  c.svd_rank = m.svd_rank;
  c.em_max_iter = m.em_max_iter;
  c.validate();
  return c;
}

FrameworkConfig framework_config(const ModelArgs& m) {
  FrameworkConfig c;
  c.ewmc.rank = m.rank;
  c.ewmc.gamma = m.gamma;
  c.ewmc.eta = m.eta;
  c.ewmc.max_inner_iter = m.max_inner;
  c.delta = m.delta;
  c.max_outer_iter = m.max_outer;
  c.relief.relieff_k = m.relieff_k;
  c.relief.iterations = m.relief_iterations;
  c.validate();
  return c;
}

std::optional<MissingSpec> missing_spec(const ProtocolArgs& p) {
  if (p.mechanism == "none") return std::nullopt;
  MissingSpec spec;
  spec.mechanism = parse_mechanism(p.mechanism);
  spec.rate = p.rate;
  spec.validate();
  return spec;
}

ProtocolConfig protocol_config(const ProtocolArgs& p, const ModelArgs& m) {
  ProtocolConfig c;
  c.runs = p.runs;
  c.folds = p.folds;
  c.seed = p.seed;
  c.knn_k = p.knn_k;
  c.jobs = p.jobs;
  c.framework = framework_config(m);
  c.imputer = imputer_config(m);
  c.validate();
  return c;
}

std::string to_text(const auto& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

void check_not_input(const fs::path& output, const fs::path& input) {
  if (fs::exists(output) && fs::equivalent(output, input))
    throw ConfigError("output " + output.string() + " would overwrite the input file");
}

IncompleteDataset load(const DataArgs& a) { return load_csv(a.dataset, a.label); }

int cmd_inject(const Options& o, std::ostream& out) {
  auto data = load(o.data);
  if (o.protocol.mechanism == "none") throw ConfigError("inject needs --mechanism mcar or mnar");
  MissingSpec spec = *missing_spec(o.protocol);
  spec.seed = derive_seed(o.protocol.seed, {tag(Stage::Inject)});
  check_not_input(o.output, o.data.dataset);
  const auto injected = inject(data, spec);
  write_text_file(o.output, to_text([&](std::ostream& s) { write_csv(injected, s); }));
  out << "injected " << injected.missing_count() << " missing cells into " << o.output << '\n';
  return kExitOk;
}

int cmd_impute(const Options& o, std::ostream& out) {
  const auto raw = load(o.data);
  check_not_input(o.output, o.data.dataset);
  const auto params = fit_normalizer(raw);
  const auto data = apply_normalizer(raw, params);
  const auto icfg = imputer_config(o.model);
  Matrix imputed;
  if (o.method == "ewmc") {
    auto fw = framework_config(o.model);
    fw.ewmc.seed = derive_seed(o.protocol.seed, {tag(Stage::FactorInit)});
    Vector v = Vector::Ones(data.cols());
    if (!o.weights.empty()) {
      std::ifstream in(o.weights);
      if (!in) throw DataError("cannot open weights file " + o.weights);
      v = read_weights_csv(in, data.feature_names, o.weights);
    }
    const auto ensemble = build_ensemble(data, default_ensemble_methods(), icfg);
    const auto stage = run_m_stage(data, ensemble, normalize_weights(v), fw.ewmc);
    imputed = stage.Z;
    if (!o.trace.empty())
      write_text_file(o.trace, to_text([&](std::ostream& s) { write_trace_csv("iteration", "objective", stage.trace, s); }));
    out << "ewmc: " << stage.iterations << " iterations, converged=" << stage.converged << '\n';
  } else {
    const auto result = impute(data, parse_imputer(o.method), icfg);
    imputed = result.values;
    for (const auto& note : result.notes) out << "note: " << note << '\n';
  }
  // Denormalising the imputed matrix could perturb observed cells in the last
  // bit, so they are copied back from the input.
  auto completed = with_values(raw, raw.mask.select(raw.values, denormalize(imputed, params)));
  completed.mask.setConstant(true);
  write_text_file(o.output, to_text([&](std::ostream& s) { write_csv(completed, s); }));
  out << "imputed " << raw.missing_count() << " cells into " << o.output << '\n';
  return kExitOk;
}

int cmd_select(const Options& o, std::ostream& out) {
  const auto raw = load(o.data);
  if (!raw.is_complete()) throw ConfigError("select needs a complete dataset; run impute first");
  const auto data = apply_normalizer(raw, fit_normalizer(raw));
  auto fw = framework_config(o.model);
  fw.relief.seed = derive_seed(o.protocol.seed, {tag(Stage::ReliefOrder)});
  const auto result = select_features(parse_selector(o.selector), data.values, data.labels, fw.relief);
  write_text_file(o.output,
                  to_text([&](std::ostream& s) { write_weights_csv(result.weights, data.feature_names, s); }));
  out << "wrote weights for " << data.cols() << " features to " << o.output << '\n';
  return kExitOk;
}

struct FullFit {
  FrameworkResult result;
  NormalizationParams params;
  IncompleteDataset raw;
};

// Framework fitted once on the whole dataset, for the weights / imputed /
// zeta outputs of `run`.
FullFit fit_full(const IncompleteDataset& raw_in, const std::optional<MissingSpec>& spec, Selector selector,
                 const ProtocolConfig& pc) {
  FullFit fit;
  fit.raw = raw_in;
  if (spec) {
    auto s = *spec;
    s.seed = derive_seed(pc.seed, {tag(Stage::Inject)});
    fit.raw = inject(raw_in, s);
  }
  fit.params = fit_normalizer(fit.raw);
  const auto data = apply_normalizer(fit.raw, fit.params);
  auto fw = pc.framework;
  fw.selector = selector;
  fw.ewmc.seed = derive_seed(pc.seed, {tag(Stage::FactorInit)});
  fw.relief.seed = derive_seed(pc.seed, {tag(Stage::ReliefOrder)});
  const auto ensemble = build_ensemble(data, pc.ensemble_methods, pc.imputer);
  fit.result = run_framework(data, ensemble, fw);
  return fit;
}

std::vector<PipelineId> parse_methods(const std::vector<std::string>& names) {
  std::vector<PipelineId> methods;
  for (const auto& n : names) methods.push_back(parse_pipeline(n));
  if (methods.empty()) throw ConfigError("no methods given");
  return methods;
}

std::string dataset_name(const Options& o) {
  return o.name.empty() ? fs::path(o.data.dataset).stem().string() : o.name;
}

int cmd_run(const Options& o, const CLI::App& sub, std::ostream& out) {
  const auto raw = load(o.data);
  const auto spec = missing_spec(o.protocol);
  const auto pc = protocol_config(o.protocol, o.model);
  const auto methods = parse_methods(o.methods);
  const fs::path dir = o.output;
  fs::create_directories(dir);
  write_text_file(dir / "config.toml", "[run]\n" + sub.config_to_str(true, false));

  Selector selector = Selector::MuReliefA;
  for (const auto& m : methods)
    if (m.is_ewmc()) {
      selector = m.selector;
      break;
    }
  const auto fit = fit_full(raw, spec, selector, pc);
  write_text_file(dir / "weights.csv",
                  to_text([&](std::ostream& s) { write_weights_csv(fit.result.v, raw.feature_names, s); }));
  auto completed = with_values(fit.raw, fit.raw.mask.select(fit.raw.values, denormalize(fit.result.Z, fit.params)));
  completed.mask.setConstant(true);
  write_text_file(dir / "imputed.csv", to_text([&](std::ostream& s) { write_csv(completed, s); }));
  write_text_file(dir / "zeta.csv",
                  to_text([&](std::ostream& s) { write_trace_csv("outer_iter", "zeta", fit.result.zeta_trace, s); }));

  const auto report = run_protocol(raw, dataset_name(o), spec, methods, pc);
  write_text_file(dir / "results.csv", to_text([&](std::ostream& s) { write_results_csv(report.records, s); }));
  write_text_file(dir / "summary.csv", to_text([&](std::ostream& s) { write_summary_csv(report.records, s); }));
  write_text_file(dir / "curves.csv", to_text([&](std::ostream& s) { write_curves_csv(report, s); }));
  write_text_file(dir / "diagnostics.csv",
                  to_text([&](std::ostream& s) { write_diagnostics_csv(report.diagnostics, s); }));

  out << "framework on full data: " << fit.result.outer_iters << " outer iterations, converged="
      << fit.result.converged << '\n';
  for (const auto& m : methods)
    out << m.name() << " mean accuracy " << format_double(report.cell_mean(m.name())) << '\n';
  if (report.failures() > 0) {
    out << report.failures() << " fold(s) failed numerically; see diagnostics.csv\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const auto raw = load(o.data);
  const auto spec = missing_spec(o.protocol);
  check_not_input(o.output, o.data.dataset);
  if (o.ranks.empty() || o.gammas.empty()) throw ConfigError("sweep grid is empty");
  const auto method = parse_pipeline("ewmc+" + o.selector);
  std::vector<std::tuple<int, double, double>> rows;
  for (int rank : o.ranks)
    for (double gamma : o.gammas) {
      auto model = o.model;
      model.rank = rank;
      model.gamma = gamma;
      const auto pc = protocol_config(o.protocol, model);
      const auto report = run_protocol(raw, dataset_name(o), spec, std::span(&method, 1), pc);
      rows.emplace_back(rank, gamma, report.cell_mean(method.name()));
      out << "rank " << rank << " gamma " << format_double(gamma) << " accuracy "
          << format_double(std::get<2>(rows.back())) << '\n';
    }
  write_text_file(o.output, to_text([&](std::ostream& s) {
                    s << "rank,gamma,accuracy\n";
                    for (const auto& [r, g, a] : rows) s << r << ',' << format_double(g) << ',' << format_double(a) << '\n';
                  }));
  return kExitOk;
}

std::vector<AccuracyRecord> pick_method(const std::vector<AccuracyRecord>& records, std::string& method,
                                        const std::string& file) {
  if (method.empty()) {
    for (const auto& r : records) {
      if (method.empty()) method = r.method;
      if (r.method != method)
        throw ConfigError(file + " holds several methods; choose one with --method-a / --method-b");
    }
  }
  std::vector<AccuracyRecord> out;
  for (const auto& r : records)
    if (r.method == method && r.feature_count > 0) out.push_back(r);
  if (out.empty()) throw DataError(file + " has no successful records for method '" + method + "'");
  return out;
}

// Collapses records to one accuracy per instance of the chosen level, keyed
// in first-seen order.
std::vector<std::pair<std::string, double>> instances(const std::vector<AccuracyRecord>& records,
                                                      const std::string& level) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<AccuracyRecord>> groups;
  for (const auto& r : records) {
    std::string key = r.dataset + "|" + r.mechanism + "|" + format_double(r.rate);
    if (level == "record")
      key += "|" + std::to_string(r.run) + "|" + std::to_string(r.fold) + "|" + std::to_string(r.feature_count);
    else if (level == "fold")
      key += "|" + std::to_string(r.run) + "|" + std::to_string(r.fold);
    else if (level != "cell")
      throw ConfigError("unknown compare level '" + level + "' (record, fold or cell)");
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(r);
  }
  std::vector<std::pair<std::string, double>> out;
  for (const auto& key : order) {
    EvalReport rep;
    rep.records = groups[key];
    out.emplace_back(key, rep.cell_mean(rep.records.front().method));
  }
  return out;
}

int cmd_compare(const Options& o, std::ostream& out) {
  std::string method_a = o.method_a, method_b = o.method_b;
  const auto a = instances(pick_method(load_results_csv(o.file_a), method_a, o.file_a), o.level);
  const auto b = instances(pick_method(load_results_csv(o.file_b), method_b, o.file_b), o.level);
  if (a.size() != b.size())
    throw DataError("result files hold " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                    " instances");
  std::vector<double> xa, xb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first) throw DataError("instance " + a[i].first + " is not paired with " + b[i].first);
    xa.push_back(a[i].second);
    xb.push_back(b[i].second);
  }
  SignificanceRow row{method_a, method_b, o.level, static_cast<int>(xa.size()), wilcoxon_signed_rank(xa, xb)};
  const auto text = to_text([&](std::ostream& s) { write_significance_csv({row}, s); });
  if (o.output.empty())
    out << text;
  else
    write_text_file(o.output, text);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feature selection on incomplete data with ensemble weighted matrix completion", "ewfs"};
  app.require_subcommand(1);
  Options o;

  auto* inject_cmd = app.add_subcommand("inject", "Inject MCAR or MNAR missingness into a complete CSV");
  add_data(inject_cmd, o.data);
  inject_cmd->add_option("--mechanism", o.protocol.mechanism, "mcar or mnar")->required();
  inject_cmd->add_option("--rate", o.protocol.rate, "Fraction of cells to remove")->required();
  inject_cmd->add_option("--seed", o.protocol.seed, "Root seed")->capture_default_str();
  inject_cmd->add_option("--output", o.output, "Output CSV")->required();

  auto* impute_cmd = app.add_subcommand("impute", "Fill missing cells of a CSV");
  add_data(impute_cmd, o.data);
  add_model(impute_cmd, o.model, false);
  impute_cmd->add_option("--method", o.method, "mean, knn, em, svd or ewmc")->capture_default_str();
  impute_cmd->add_option("--weights", o.weights, "Feature weights CSV for ewmc (default all ones)")
      ->check(CLI::ExistingFile);
  impute_cmd->add_option("--trace", o.trace, "Write the ewmc objective trace here");
  impute_cmd->add_option("--seed", o.protocol.seed, "Root seed")->capture_default_str();
  impute_cmd->add_option("--output", o.output, "Output CSV")->required();

  auto* select_cmd = app.add_subcommand("select", "Learn feature weights on a complete CSV");
  add_data(select_cmd, o.data);
  select_cmd->add_option("--method,--selector", o.selector, "mu-reliefa or relieff")->capture_default_str();
  select_cmd->add_option("--relieff-k", o.model.relieff_k, "Neighbours per class for relieff")->capture_default_str();
  select_cmd->add_option("--relief-iterations", o.model.relief_iterations, "Visited samples, 0 = all")
      ->capture_default_str();
  select_cmd->add_option("--seed", o.protocol.seed, "Root seed")->capture_default_str();
  select_cmd->add_option("--output", o.output, "Output weights CSV")->required();

  auto* run_cmd = app.add_subcommand("run", "Fit the framework and run the cross-validation protocol");
  add_data(run_cmd, o.data);
  add_model(run_cmd, o.model, true);
  add_protocol(run_cmd, o.protocol, "none", 0.05);
  run_cmd->add_option("--methods", o.methods, "Pipelines <imputer>+<selector>")->delimiter(',')->capture_default_str();
  run_cmd->add_option("--name", o.name, "Dataset name in result files (default file stem)");
  run_cmd->add_option("--output-dir", o.output, "Directory for result files")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate ewmc over a rank x gamma grid");
  add_data(sweep_cmd, o.data);
  add_model(sweep_cmd, o.model, true);
  add_protocol(sweep_cmd, o.protocol, "mcar", 0.1);
  sweep_cmd->add_option("--ranks", o.ranks, "Rank grid")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--gammas", o.gammas, "Gamma grid")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--selector", o.selector, "mu-reliefa or relieff")->capture_default_str();
  sweep_cmd->add_option("--name", o.name, "Dataset name (default file stem)");
  sweep_cmd->add_option("--output", o.output, "Output CSV")->required();

  auto* compare_cmd = app.add_subcommand("compare", "Wilcoxon signed-rank test between two result files");
  compare_cmd->add_option("--a", o.file_a, "Results CSV of method A")->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("--b", o.file_b, "Results CSV of method B")->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("--method-a", o.method_a, "Method to take from --a (needed if it holds several)");
  compare_cmd->add_option("--method-b", o.method_b, "Method to take from --b (needed if it holds several)");
  compare_cmd->add_option("--level", o.level, "Pairing unit: record, fold or cell")->capture_default_str();
  compare_cmd->add_option("--output", o.output, "Output CSV (default stdout)");

  // Given before the subcommand; its options go in a [<subcommand>] section.
  app.set_config("--config", "", "TOML file with option values; flags override it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*inject_cmd) return cmd_inject(o, out);
    if (*impute_cmd) return cmd_impute(o, out);
    if (*select_cmd) return cmd_select(o, out);
    if (*run_cmd) return cmd_run(o, *run_cmd, out);
    if (*sweep_cmd) return cmd_sweep(o, out);
    if (*compare_cmd) return cmd_compare(o, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace ewfs::cli
