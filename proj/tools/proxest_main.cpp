// proxest command line tool.
//
// Four subcommands cover the working loop: simulate draws a synthetic cohort
// from a generating-process description, estimate runs a single estimator,
// bootstrap wraps an estimator in resampled intervals, and compare lines the
// estimators up side by side. Every report is a JSON object with a fixed
// reproducibility envelope: tool version, command, seed, a digest of the
// resolved configuration, and a digest of every input file. The compare
// table printed to stderr is a rendering of the same JSON, never a second
// source of numbers.
//
// Exit codes: 0 report written, 2 configuration error, 3 I/O error,
// 4 data error, 5 numerical error, 1 anything unexpected.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "proxest/adjust.hpp"
#include "proxest/bootstrap.hpp"
#include "proxest/confusion.hpp"
#include "proxest/errors.hpp"
#include "proxest/io.hpp"
#include "proxest/simex.hpp"
#include "proxest/synth.hpp"
#include "proxest/version.hpp"

namespace {

using nlohmann::json;
using namespace proxest;

// Options shared by estimate, bootstrap, and compare. Values mirror the
// flags one to one so the resolved set can be hashed into the report.
struct CommonOpts {
  std::string cohort_path;
  std::string confusion_path;
  std::string method = "matrix-adjust";
  double alpha = 0.0;
  int missing_as = -1;  // -1 keeps the default drop policy
  int k = 0;            // 0 infers from the confusion matrix or labels
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_path;

  std::vector<double> lambda_grid;
  int b_per_lambda = 100;
  int degree = 2;
  std::string scale = "log";
};

struct BootstrapOpts : CommonOpts {
  std::string mode = "analysis";
  long replicates = 0;  // 0 keeps the per-mode default
  int r_analysis = 0;
  int r_validation = 0;
  double confidence = 0.95;
  bool keep_replicates = false;
};

struct SimulateOpts {
  std::string dgp_path;
  std::string out_path;
  std::string truth_out;
  long n_override = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool with_method) {
  cmd->add_option("--cohort", o.cohort_path, "cohort CSV (y,x,u_star[,u_true],c_*)")
      ->required();
  cmd->add_option("--confusion", o.confusion_path,
                  "validation confusion counts CSV, true categories on rows");
  if (with_method) {
    cmd->add_option("--method", o.method, "estimator")
        ->check(CLI::IsMember({"naive", "oracle", "matrix-adjust", "mc-simex"}))
        ->default_str("matrix-adjust");
  }
  cmd->add_option("--alpha", o.alpha, "Dirichlet smoothing added to confusion rows")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--missing-as", o.missing_as,
                  "treat missing proxy labels as this category instead of dropping rows")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--k", o.k, "number of confounder categories (default: inferred)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", o.seed, "root seed recorded in the report");
  cmd->add_option("--threads", o.threads, "worker cap for replicate loops")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out_path, "report path (default: stdout)");

  cmd->add_option("--lambda", o.lambda_grid,
                  "mc-simex noise grid (default 0.5 1 1.5 2)");
  cmd->add_option("--b-per-lambda", o.b_per_lambda,
                  "mc-simex perturbations per grid point")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--degree", o.degree, "mc-simex extrapolant degree")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--scale", o.scale, "mc-simex extrapolation scale")
      ->check(CLI::IsMember({"log", "linear"}));
}

MissingLabelPolicy missing_policy(const CommonOpts& o) {
  MissingLabelPolicy p;
  if (o.missing_as >= 0) {
    p.policy = MissingPolicy::remap;
    p.remap_to = o.missing_as;
  }
  return p;
}

AdjustOptions adjust_options(const CommonOpts& o) {
  AdjustOptions a;
  a.missing = missing_policy(o);
  a.smoothing_alpha = o.alpha;
  return a;
}

SimexConfig simex_config(const CommonOpts& o) {
  SimexConfig s;
  if (!o.lambda_grid.empty()) s.lambda_grid = o.lambda_grid;
  s.b_per_lambda = o.b_per_lambda;
  s.extrapolant_degree = o.degree;
  s.scale = o.scale == "linear" ? SimexScale::linear : SimexScale::log_scale;
  s.seed = o.seed;
  s.threads = o.threads;
  return s;
}

json common_options_json(const CommonOpts& o) {
  return json{{"cohort", o.cohort_path},
              {"confusion", o.confusion_path},
              {"method", o.method},
              {"alpha", o.alpha},
              {"missing_as", o.missing_as},
              {"k", o.k},
              {"seed", o.seed},
              {"threads", o.threads},
              {"lambda", o.lambda_grid},
              {"b_per_lambda", o.b_per_lambda},
              {"degree", o.degree},
              {"scale", o.scale}};
}

// Envelope common to every report. The config hash covers the resolved
// option values; input digests cover the file bytes actually read.
json make_envelope(const std::string& command, std::uint64_t seed,
                   const json& options,
                   const std::vector<std::pair<std::string, std::string>>& inputs) {
  json cfg{{"command", command}, {"options", options}};
  json env;
  env["tool"] = json{{"name", kToolName}, {"version", kVersion}};
  env["command"] = command;
  env["seed"] = seed;
  env["config_hash"] = string_digest_hex(cfg.dump());
  json ins = json::object();
  for (const auto& [name, path] : inputs) {
    ins[name] = json{{"path", path}, {"digest", file_digest_hex(path)}};
  }
  env["inputs"] = ins;
  return env;
}

void write_report(const json& report, const std::string& out_path) {
  std::string text = report.dump(2);
  text.push_back('\n');
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw IoError("cannot open report file: " + out_path);
  file << text;
  if (!file) throw IoError("failed writing report file: " + out_path);
}

struct Inputs {
  Cohort cohort;
  std::optional<ConfusionCounts> counts;
  std::optional<MisclassificationModel> model;
};

Inputs load_inputs(const CommonOpts& o, bool matrix_required) {
  Inputs in;
  if (!o.confusion_path.empty()) {
    in.counts = read_confusion_csv(o.confusion_path);
    in.model = row_normalize(*in.counts, o.alpha);
  } else if (matrix_required) {
    throw InvalidConfigError("--confusion is required for this command");
  }
  int k = o.k;
  if (k == 0 && in.model) k = in.model->k();
  in.cohort = read_cohort_csv(o.cohort_path, k);
  return in;
}

json confusion_json(const Inputs& in) {
  if (!in.model) return nullptr;
  return json{{"k", in.model->k()},
              {"accuracy", accuracy(*in.counts)},
              {"condition_number", in.model->condition_number},
              {"smoothing_alpha", in.model->smoothing_alpha}};
}

std::vector<std::pair<std::string, std::string>> input_files(const CommonOpts& o) {
  std::vector<std::pair<std::string, std::string>> files{{"cohort", o.cohort_path}};
  if (!o.confusion_path.empty()) files.emplace_back("confusion", o.confusion_path);
  return files;
}

// Runs one estimator to a point estimate; the pair carries the trace only
// for mc-simex.
std::pair<json, json> point_estimate(const Inputs& in, Method method,
                                     const CommonOpts& o) {
  AdjustOptions adj = adjust_options(o);
  if (method == Method::mc_simex) {
    auto [estimate, trace] = mc_simex(in.cohort, *in.model, simex_config(o), adj);
    return {to_json(estimate), to_json(trace)};
  }
  MisclassificationModel model =
      in.model ? *in.model : MisclassificationModel::identity(in.cohort.k);
  EstimateReport report = estimate_effects(in.cohort, model, method, adj);
  return {to_json(report), nullptr};
}

int cmd_estimate(const CommonOpts& o) {
  Method method = method_from_name(o.method);
  bool matrix_required =
      method == Method::matrix_adjust || method == Method::mc_simex;
  Inputs in = load_inputs(o, matrix_required);

  json report = make_envelope("estimate", o.seed, common_options_json(o),
                              input_files(o));
  report["method"] = method_name(method);
  report["confusion"] = confusion_json(in);
  auto [estimate, trace] = point_estimate(in, method, o);
  report["estimate"] = estimate;
  if (!trace.is_null()) report["trace"] = trace;
  write_report(report, o.out_path);
  return 0;
}

BootstrapPlan build_plan(const BootstrapOpts& b) {
  BootstrapPlan plan;
  plan.mode = bootstrap_mode_from_name(b.mode);
  plan.confidence = b.confidence;
  plan.seed = b.seed;
  plan.estimator = method_from_name(b.method);
  plan.threads = b.threads;
  plan.keep_replicates = b.keep_replicates;
  if (b.replicates > 0) {
    if (b.r_analysis > 0 || b.r_validation > 0) {
      throw InvalidConfigError(
          "--replicates conflicts with --r-analysis/--r-validation");
    }
    if (plan.mode == BootstrapMode::both) {
      long side = std::lround(std::sqrt(static_cast<double>(b.replicates)));
      if (side * side != b.replicates) {
        throw InvalidConfigError(
            "mode both crosses the two axes, so --replicates must be a perfect "
            "square; use --r-analysis and --r-validation for uneven splits");
      }
      plan.r_analysis = static_cast<int>(side);
      plan.r_validation = static_cast<int>(side);
    } else if (plan.mode == BootstrapMode::analysis) {
      plan.r_analysis = static_cast<int>(b.replicates);
    } else {
      plan.r_validation = static_cast<int>(b.replicates);
    }
  } else {
    plan.r_analysis = b.r_analysis;
    plan.r_validation = b.r_validation;
  }
  return plan;
}

json plan_json(const BootstrapPlan& plan) {
  return json{{"mode", bootstrap_mode_name(plan.mode)},
              {"r_analysis", plan.resolved_analysis()},
              {"r_validation", plan.resolved_validation()},
              {"confidence", plan.confidence}};
}

int cmd_bootstrap(const BootstrapOpts& b) {
  Inputs in = load_inputs(b, true);
  BootstrapPlan plan = build_plan(b);
  plan.validate();

  json options = common_options_json(b);
  options["bootstrap"] = b.mode;
  options["replicates"] = b.replicates;
  options["r_analysis"] = b.r_analysis;
  options["r_validation"] = b.r_validation;
  options["confidence"] = b.confidence;
  options["keep_replicates"] = b.keep_replicates;

  json report = make_envelope("bootstrap", b.seed, options, input_files(b));
  report["method"] = method_name(plan.estimator);
  report["confusion"] = confusion_json(in);
  report["plan"] = plan_json(plan);
  BootstrapResult result = run_bootstrap(in.cohort, *in.counts, plan,
                                         adjust_options(b), simex_config(b));
  report["bootstrap"] = to_json(result);
  write_report(report, b.out_path);
  return 0;
}

json interval_summary(const BootstrapResult& result) {
  json out = to_json(result);
  out.erase("point");  // the row already carries the point estimate
  return out;
}

std::string render_number(const json& value) {
  if (!value.is_number()) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", value.get<double>());
  return buf;
}

// Renders report["rows"] to stderr. Every number is read back out of the
// JSON so the table cannot drift from the written report.
void print_compare_table(const json& report) {
  bool any_ci = false;
  for (const json& row : report.at("rows")) any_ci |= row.contains("intervals");

  std::fprintf(stderr, "%-14s %12s %12s %10s %10s", "method", "risk(x=1)",
               "risk(x=0)", "RR", "OR");
  if (any_ci) std::fprintf(stderr, "  %-19s", "RR interval");
  std::fprintf(stderr, "\n");
  for (const json& row : report.at("rows")) {
    const json& est = row.at("estimate");
    std::fprintf(stderr, "%-14s %12s %12s %10s %10s",
                 row.at("method").get<std::string>().c_str(),
                 render_number(est.at("risk_treated")).c_str(),
                 render_number(est.at("risk_control")).c_str(),
                 render_number(est.at("risk_ratio")).c_str(),
                 render_number(est.at("odds_ratio")).c_str());
    if (any_ci) {
      std::string ci = "-";
      if (row.contains("intervals")) {
        const json& rr = row.at("intervals").at("intervals").at(0);
        ci = "[" + render_number(rr.at("lower")) + ", " +
             render_number(rr.at("upper")) + "]";
      }
      std::fprintf(stderr, "  %-19s", ci.c_str());
    }
    std::fprintf(stderr, "\n");
  }
}

int cmd_compare(const BootstrapOpts& c, bool with_intervals) {
  Inputs in = load_inputs(c, true);

  std::vector<Method> methods{Method::naive, Method::matrix_adjust,
                              Method::mc_simex};
  if (in.cohort.has_truth()) methods.push_back(Method::oracle);

  json options = common_options_json(c);
  if (with_intervals) {
    options["bootstrap"] = c.mode;
    options["replicates"] = c.replicates;
    options["r_analysis"] = c.r_analysis;
    options["r_validation"] = c.r_validation;
    options["confidence"] = c.confidence;
  }

  json report = make_envelope("compare", c.seed, options, input_files(c));
  report["confusion"] = confusion_json(in);
  json rows = json::array();
  for (Method method : methods) {
    json row;
    row["method"] = method_name(method);
    auto [estimate, trace] = point_estimate(in, method, c);
    row["estimate"] = estimate;
    if (!trace.is_null()) row["trace"] = trace;
    // the oracle has no sampling design to resample, so it stays point-only
    if (with_intervals && method != Method::oracle) {
      BootstrapOpts opts = c;
      opts.method = method_name(method);
      BootstrapPlan plan = build_plan(opts);
      plan.validate();
      row["intervals"] = interval_summary(run_bootstrap(
          in.cohort, *in.counts, plan, adjust_options(c), simex_config(c)));
    }
    rows.push_back(std::move(row));
  }
  report["rows"] = rows;
  print_compare_table(report);
  write_report(report, c.out_path);
  return 0;
}

int cmd_simulate(const SimulateOpts& s) {
  DgpConfig config = read_dgp_json(s.dgp_path);
  if (s.n_override > 0) config.n = s.n_override;
  if (s.seed_given) config.seed = s.seed;
  config.validate();

  Cohort cohort = generate_cohort(config);
  write_cohort_csv(s.out_path, cohort);

  json options{{"dgp", s.dgp_path},
               {"out", s.out_path},
               {"truth_out", s.truth_out},
               {"n", config.n},
               {"seed", config.seed}};
  json report = make_envelope("simulate", config.seed, options,
                              {{"dgp", s.dgp_path}});
  report["cohort"] = json{{"path", s.out_path},
                          {"digest", file_digest_hex(s.out_path)},
                          {"n", cohort.n()},
                          {"k", cohort.k},
                          {"covariates", cohort.p()},
                          {"missing_proxies", cohort.missing_proxy_count()}};

  if (config.enumerable()) {
    TrueEffects truth = true_effects(config);
    json truth_json = to_json(truth);
    truth_json["n"] = config.n;
    truth_json["seed"] = config.seed;
    truth_json["dgp_digest"] = file_digest_hex(s.dgp_path);
    std::string truth_path =
        s.truth_out.empty() ? s.out_path + ".truth.json" : s.truth_out;
    write_report(truth_json, truth_path);
    report["truth"] = truth_json;
    report["truth_path"] = truth_path;
  } else {
    if (!s.truth_out.empty()) {
      throw InvalidConfigError(
          "exact truth needs an enumerable process: all-binary covariates, "
          "at most " + std::to_string(kMaxEnumerationCovariates));
    }
    report["truth"] = nullptr;
    report["truth_path"] = nullptr;
  }
  write_report(report, "");
  return 0;
}

int exit_code_for(const Error& error) {
  switch (error.family()) {
    case ErrorFamily::config: return 2;
    case ErrorFamily::io: return 3;
    case ErrorFamily::data: return 4;
    case ErrorFamily::numeric: return 5;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"effect estimation under a misclassified categorical confounder"};
  app.set_version_flag("--version", std::string(proxest::kVersion));
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "draw a synthetic cohort from a JSON process description");
  simulate->add_option("--dgp", sim.dgp_path, "generating process JSON")->required();
  simulate->add_option("--out", sim.out_path, "cohort CSV to write")->required();
  simulate->add_option("--truth-out", sim.truth_out,
                       "exact-effect JSON (default: <out>.truth.json when enumerable)");
  simulate->add_option("--n", sim.n_override, "override the configured cohort size")
      ->check(CLI::PositiveNumber);
  CLI::Option* seed_opt =
      simulate->add_option("--seed", sim.seed, "override the configured seed");

  CommonOpts est;
  CLI::App* estimate = app.add_subcommand("estimate", "run a single estimator");
  add_common_flags(estimate, est, true);

  BootstrapOpts boot;
  CLI::App* bootstrap = app.add_subcommand(
      "bootstrap", "percentile intervals from resampled replicates");
  add_common_flags(bootstrap, boot, true);
  bootstrap->add_option("--bootstrap", boot.mode, "which uncertainty source to resample")
      ->check(CLI::IsMember({"analysis", "validation", "both"}));
  bootstrap->add_option("--replicates", boot.replicates,
                        "total replicates; a perfect square in mode both")
      ->check(CLI::NonNegativeNumber);
  bootstrap->add_option("--r-analysis", boot.r_analysis, "cohort-axis replicates")
      ->check(CLI::NonNegativeNumber);
  bootstrap->add_option("--r-validation", boot.r_validation,
                        "confusion-axis replicates")
      ->check(CLI::NonNegativeNumber);
  bootstrap->add_option("--confidence", boot.confidence, "interval coverage level")
      ->check(CLI::Range(0.0, 1.0));
  bootstrap->add_flag("--keep-replicates", boot.keep_replicates,
                      "embed per-replicate values in the report");

  BootstrapOpts cmp;
  CLI::App* compare = app.add_subcommand(
      "compare", "run every applicable estimator on the same inputs");
  add_common_flags(compare, cmp, false);
  CLI::Option* cmp_boot = compare->add_option(
      "--bootstrap", cmp.mode, "add intervals by resampling this source");
  cmp_boot->check(CLI::IsMember({"analysis", "validation", "both"}));
  compare->add_option("--replicates", cmp.replicates,
                      "total replicates; a perfect square in mode both")
      ->check(CLI::NonNegativeNumber);
  compare->add_option("--r-analysis", cmp.r_analysis, "cohort-axis replicates")
      ->check(CLI::NonNegativeNumber);
  compare->add_option("--r-validation", cmp.r_validation,
                      "confusion-axis replicates")
      ->check(CLI::NonNegativeNumber);
  compare->add_option("--confidence", cmp.confidence, "interval coverage level")
      ->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) {
      sim.seed_given = seed_opt->count() > 0;
      return cmd_simulate(sim);
    }
    if (estimate->parsed()) return cmd_estimate(est);
    if (bootstrap->parsed()) return cmd_bootstrap(boot);
    return cmd_compare(cmp, cmp_boot->count() > 0);
  } catch (const proxest::Error& e) {
    std::cerr << "proxest: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "proxest: unexpected: " << e.what() << "\n";
    return 1;
  }
}
