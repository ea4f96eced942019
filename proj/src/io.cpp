#include "proxest/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "proxest/errors.hpp"

namespace proxest {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path);
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  fields.push_back(field);
  return fields;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(line);
      line.clear();
    } else {
      line += ch;
    }
  }
  if (!line.empty()) lines.push_back(line);
  return lines;
}

int parse_int(const std::string& field, const std::string& context) {
  int value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw IoError("cannot parse integer '" + field + "' in " + context);
  }
  return value;
}

double parse_double(const std::string& field, const std::string& context) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw IoError("cannot parse number '" + field + "' in " + context);
  }
  return value;
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

Cohort read_cohort_csv(const std::string& path, int k) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.empty()) throw IoError(path + " is empty");

  const std::vector<std::string> header = split_line(lines[0]);
  if (header.size() < 3 || header[0] != "y" || header[1] != "x" ||
      header[2] != "u_star") {
    throw IoError(path + ": header must start with y,x,u_star");
  }
  size_t col = 3;
  const bool has_truth = col < header.size() && header[col] == "u_true";
  if (has_truth) ++col;
  const size_t first_cov = col;
  for (size_t j = col; j < header.size(); ++j) {
    const std::string expected = "c_" + std::to_string(j - first_cov);
    if (header[j] != expected) {
      throw IoError(path + ": expected covariate column '" + expected +
                    "', found '" + header[j] + "'");
    }
  }
  const int p = static_cast<int>(header.size() - first_cov);
  const long n = static_cast<long>(lines.size()) - 1;
  if (n < 1) throw IoError(path + " has no data rows");

  Cohort cohort;
  cohort.y.resize(n);
  cohort.x.resize(n);
  cohort.u_star.resize(n);
  if (has_truth) cohort.u_true.resize(n);
  cohort.c.resize(n, p);

  int max_label = -1;
  for (long i = 0; i < n; ++i) {
    const std::string context = path + " line " + std::to_string(i + 2);
    const std::vector<std::string> fields = split_line(lines[i + 1]);
    if (fields.size() != header.size()) {
      throw IoError(context + ": expected " + std::to_string(header.size()) +
                    " fields, found " + std::to_string(fields.size()));
    }
    cohort.y(i) = parse_int(fields[0], context);
    cohort.x(i) = parse_int(fields[1], context);
    if (fields[2].empty()) {
      cohort.u_star(i) = kMissingLabel;
    } else {
      cohort.u_star(i) = parse_int(fields[2], context);
      max_label = std::max(max_label, cohort.u_star(i));
    }
    size_t f = 3;
    if (has_truth) {
      cohort.u_true(i) = parse_int(fields[f++], context);
      max_label = std::max(max_label, cohort.u_true(i));
    }
    for (int j = 0; j < p; ++j) {
      cohort.c(i, j) = parse_double(fields[f + j], context);
    }
  }

  if (k > 0) {
    if (max_label >= k) {
      throw DataError(path + ": label " + std::to_string(max_label) +
                      " outside the declared " + std::to_string(k) + " categories");
    }
    cohort.k = k;
  } else {
    if (max_label < 0) {
      throw DataError(path + ": cannot infer the category count, every proxy label is missing");
    }
    cohort.k = max_label + 1;
  }
  cohort.validate();
  return cohort;
}

void write_cohort_csv(const std::string& path, const Cohort& cohort) {
  cohort.validate();
  std::string out = "y,x,u_star";
  if (cohort.has_truth()) out += ",u_true";
  for (int j = 0; j < cohort.p(); ++j) out += ",c_" + std::to_string(j);
  out += "\n";
  for (long i = 0; i < cohort.n(); ++i) {
    out += std::to_string(cohort.y(i));
    out += ',';
    out += std::to_string(cohort.x(i));
    out += ',';
    if (cohort.u_star(i) != kMissingLabel) out += std::to_string(cohort.u_star(i));
    if (cohort.has_truth()) {
      out += ',';
      out += std::to_string(cohort.u_true(i));
    }
    for (int j = 0; j < cohort.p(); ++j) {
      out += ',';
      out += format_double(cohort.c(i, j));
    }
    out += '\n';
  }
  write_file(path, out);
}

ConfusionCounts read_confusion_csv(const std::string& path) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  std::vector<std::vector<int>> rows;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i] == "\r") continue;
    const std::vector<std::string> fields = split_line(lines[i]);
    std::vector<int> row;
    row.reserve(fields.size());
    for (const std::string& f : fields) {
      row.push_back(parse_int(f, path + " line " + std::to_string(i + 1)));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + " is empty");
  const int k = static_cast<int>(rows.size());
  ConfusionCounts counts;
  counts.counts.resize(k, k);
  for (int r = 0; r < k; ++r) {
    if (static_cast<int>(rows[r].size()) != k) {
      throw DataError(path + ": confusion matrix must be square, row " +
                      std::to_string(r + 1) + " has " +
                      std::to_string(rows[r].size()) + " of " +
                      std::to_string(k) + " entries");
    }
    for (int c = 0; c < k; ++c) {
      if (rows[r][c] < 0) throw DataError(path + ": counts must be nonnegative");
      counts.counts(r, c) = rows[r][c];
    }
  }
  return counts;
}

void write_confusion_csv(const std::string& path, const ConfusionCounts& counts) {
  std::string out;
  for (int r = 0; r < counts.k(); ++r) {
    for (int c = 0; c < counts.k(); ++c) {
      if (c) out += ',';
      out += std::to_string(counts.counts(r, c));
    }
    out += '\n';
  }
  write_file(path, out);
}

namespace {

const nlohmann::json& require_key(const nlohmann::json& obj, const std::string& key,
                                  const std::string& context) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw InvalidConfigError(context + " is missing key '" + key + "'");
  }
  return *it;
}

Eigen::VectorXd parse_vector(const nlohmann::json& arr, const std::string& context) {
  if (!arr.is_array()) throw InvalidConfigError(context + " must be an array");
  Eigen::VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw InvalidConfigError(context + " must hold numbers");
    v(i) = arr[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd parse_matrix(const nlohmann::json& arr, const std::string& context) {
  if (!arr.is_array() || arr.empty()) {
    throw InvalidConfigError(context + " must be a nonempty array of rows");
  }
  const size_t cols = arr[0].is_array() ? arr[0].size() : 0;
  Eigen::MatrixXd m(arr.size(), cols);
  for (size_t r = 0; r < arr.size(); ++r) {
    const Eigen::VectorXd row =
        parse_vector(arr[r], context + " row " + std::to_string(r));
    if (static_cast<size_t>(row.size()) != cols) {
      throw InvalidConfigError(context + " rows have inconsistent lengths");
    }
    m.row(r) = row.transpose();
  }
  return m;
}

LogisticArm parse_arm(const nlohmann::json& obj, const std::string& context,
                      bool with_treatment) {
  if (!obj.is_object()) throw InvalidConfigError(context + " must be an object");
  LogisticArm arm;
  arm.intercept = require_key(obj, "intercept", context).get<double>();
  if (with_treatment) {
    arm.treatment = require_key(obj, "x", context).get<double>();
  }
  arm.covariates = parse_vector(require_key(obj, "c", context), context + ".c");
  arm.u_offsets =
      parse_vector(require_key(obj, "u_offsets", context), context + ".u_offsets");
  return arm;
}

}  // namespace

DgpConfig read_dgp_json(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
  if (!doc.is_object()) throw InvalidConfigError(path + " must hold a JSON object");

  DgpConfig config;
  config.n = require_key(doc, "n", path).get<long>();
  config.k = require_key(doc, "k", path).get<int>();
  if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();

  const nlohmann::json& cov = require_key(doc, "covariates", path);
  if (cov.contains("gaussian")) {
    for (const auto& g : cov["gaussian"]) {
      GaussianCovariate spec;
      spec.mean = require_key(g, "mean", "gaussian covariate").get<double>();
      spec.sd = require_key(g, "sd", "gaussian covariate").get<double>();
      config.gaussian.push_back(spec);
    }
  }
  if (cov.contains("binary")) {
    for (const auto& b : cov["binary"]) {
      BinaryCovariate spec;
      spec.p = require_key(b, "p", "binary covariate").get<double>();
      config.binary.push_back(spec);
    }
  }

  config.u_given_c = parse_matrix(require_key(doc, "u_given_c", path), "u_given_c");
  config.x_given_cu = parse_arm(require_key(doc, "x_given_cu", path), "x_given_cu", false);
  config.y_given_xcu = parse_arm(require_key(doc, "y_given_xcu", path), "y_given_xcu", true);
  config.pi_true = parse_matrix(require_key(doc, "pi_true", path), "pi_true");
  if (doc.contains("category_names")) {
    for (const auto& name : doc["category_names"]) {
      config.category_names.push_back(name.get<std::string>());
    }
  }
  config.validate();
  return config;
}

std::string string_digest_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(h));
  return buffer;
}

std::string file_digest_hex(const std::string& path) {
  return string_digest_hex(read_file(path));
}

nlohmann::json to_json(const CausalEstimate& estimate) {
  return nlohmann::json{{"method", method_name(estimate.method)},
                        {"risk_treated", estimate.risk_treated},
                        {"risk_control", estimate.risk_control},
                        {"risk_ratio", number_or_null(estimate.risk_ratio)},
                        {"odds_ratio", number_or_null(estimate.odds_ratio)},
                        {"degenerate", estimate.degenerate},
                        {"clamped_mass", estimate.clamped_mass}};
}

nlohmann::json to_json(const EstimateReport& report) {
  nlohmann::json subgroups = nlohmann::json::array();
  for (const SubgroupEffect& sub : report.subgroups) {
    subgroups.push_back(nlohmann::json{{"category", sub.category},
                                       {"rr", number_or_null(sub.risk_ratio)},
                                       {"weight", sub.weight},
                                       {"risk_treated", sub.risk_treated},
                                       {"risk_control", sub.risk_control},
                                       {"degenerate", sub.degenerate}});
  }
  nlohmann::json out = to_json(report.estimate);
  out["dropped_rows"] = report.dropped_rows;
  out["rows_used"] = report.rows_used;
  out["subgroups"] = std::move(subgroups);
  return out;
}

nlohmann::json to_json(const IntervalEstimate& interval, const std::string& estimand) {
  nlohmann::json out{{"estimand", estimand},
                     {"mode", bootstrap_mode_name(interval.mode)},
                     {"point", number_or_null(interval.point)},
                     {"lower", number_or_null(interval.lower)},
                     {"upper", number_or_null(interval.upper)},
                     {"n_replicates", interval.n_replicates}};
  if (!interval.replicate_values.empty()) {
    out["replicates"] = interval.replicate_values;
  }
  return out;
}

nlohmann::json to_json(const BootstrapResult& result) {
  nlohmann::json intervals = nlohmann::json::array();
  nlohmann::json rr = to_json(result.risk_ratio, "risk_ratio");
  nlohmann::json odds = to_json(result.odds_ratio, "odds_ratio");
  for (nlohmann::json* j : {&rr, &odds}) {
    (*j)["n_requested"] = result.n_requested;
    (*j)["n_survived"] = result.n_survived;
    (*j)["seed"] = result.seed;
    intervals.push_back(std::move(*j));
  }
  return nlohmann::json{{"mode", bootstrap_mode_name(result.mode)},
                        {"point", to_json(result.point)},
                        {"intervals", std::move(intervals)},
                        {"n_requested", result.n_requested},
                        {"n_survived", result.n_survived},
                        {"n_dropped", result.n_dropped},
                        {"seed", result.seed}};
}

nlohmann::json to_json(const SimexTrace& trace) {
  nlohmann::json levels = nlohmann::json::array();
  for (size_t i = 0; i < trace.lambdas.size(); ++i) {
    levels.push_back(nlohmann::json{
        {"lambda", trace.lambdas[i]},
        {"mean_risk_treated", trace.mean_risk_treated[i]},
        {"mean_risk_control", trace.mean_risk_control[i]},
        {"mean_risk_ratio", number_or_null(trace.mean_risk_ratio[i])},
        {"mean_odds_ratio", number_or_null(trace.mean_odds_ratio[i])},
        {"sd_risk_treated", trace.sd_risk_treated[i]},
        {"sd_risk_control", trace.sd_risk_control[i]},
        {"sd_risk_ratio", trace.sd_risk_ratio[i]},
        {"sd_odds_ratio", trace.sd_odds_ratio[i]}});
  }
  std::vector<double> coef_t(trace.coef_risk_treated.data(),
                             trace.coef_risk_treated.data() + trace.coef_risk_treated.size());
  std::vector<double> coef_c(trace.coef_risk_control.data(),
                             trace.coef_risk_control.data() + trace.coef_risk_control.size());
  return nlohmann::json{{"levels", std::move(levels)},
                        {"coef_risk_treated", coef_t},
                        {"coef_risk_control", coef_c},
                        {"extrapolated", to_json(trace.extrapolated)}};
}

nlohmann::json to_json(const TrueEffects& effects) {
  return nlohmann::json{{"risk_treated", effects.risk_treated},
                        {"risk_control", effects.risk_control},
                        {"risk_ratio", effects.risk_ratio},
                        {"odds_ratio", effects.odds_ratio}};
}

}  // namespace proxest
