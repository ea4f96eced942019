// End-to-end checks of the command line tool: exit codes, the report
// envelope, determinism across runs, and each subcommand's contract. The
// binary runs as a subprocess; reports are read back as JSON.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "proxest/io.hpp"

#include "oracles.hpp"

using namespace proxest;
using namespace testing_oracles;
using nlohmann::json;

namespace {

const std::string kScratch = "cli_scratch";

std::string scratch(const std::string& name) {
  std::filesystem::create_directories(kScratch);
  return kScratch + "/" + name;
}

int run_cli(const std::string& args, const std::string& stdout_file = "") {
  std::string cmd = std::string(PROXEST_BIN) + " " + args;
  cmd += " > " + (stdout_file.empty() ? scratch("stdout.json") : stdout_file);
  cmd += " 2> " + scratch("stderr.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  REQUIRE(file.good());
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

json read_report(const std::string& path) { return json::parse(slurp(path)); }

// simulated once, shared by the estimator tests
const std::string& k2_cohort() {
  static const std::string path = [] {
    const std::string out = scratch("k2.csv");
    const int code = run_cli("simulate --dgp " + data_path("dgp_discrete_k2.json") +
                             " --out " + out + " --n 600 --seed 21");
    REQUIRE(code == 0);
    return out;
  }();
  return path;
}

const std::string& k2_confusion() {
  static const std::string path = [] {
    const std::string out = scratch("confusion_k2.csv");
    std::ofstream file(out);
    file << "44,6\n10,40\n";
    return out;
  }();
  return path;
}

}  // namespace

TEST_CASE("the version flag prints and exits cleanly") {
  const std::string out = scratch("version.txt");
  CHECK(run_cli("--version", out) == 0);
  CHECK_FALSE(slurp(out).empty());
}

TEST_CASE("simulate writes the cohort, the report envelope, and exact truth") {
  const std::string cohort_path = scratch("sim.csv");
  const std::string dgp = data_path("dgp_discrete_k2.json");
  const std::string report_path = scratch("sim_report.json");
  REQUIRE(run_cli("simulate --dgp " + dgp + " --out " + cohort_path +
                      " --n 500 --seed 9",
                  report_path) == 0);

  const json report = read_report(report_path);
  CHECK(report.at("tool").at("name").get<std::string>() == "proxest");
  CHECK_FALSE(report.at("tool").at("version").get<std::string>().empty());
  CHECK(report.at("command").get<std::string>() == "simulate");
  CHECK(report.at("seed").get<std::uint64_t>() == 9);
  CHECK(report.at("config_hash").get<std::string>().size() == 16);
  CHECK(report.at("inputs").at("dgp").at("digest").get<std::string>() ==
        file_digest_hex(dgp));
  CHECK(report.at("cohort").at("n").get<long>() == 500);
  CHECK(report.at("cohort").at("k").get<int>() == 2);
  CHECK(report.at("cohort").at("digest").get<std::string>() ==
        file_digest_hex(cohort_path));

  // default truth path sits beside the cohort and matches enumeration
  const std::string truth_path =
      report.at("truth_path").get<std::string>();
  CHECK(truth_path == cohort_path + ".truth.json");
  const json truth = read_report(truth_path);
  CHECK(std::abs(truth.at("risk_ratio").get<double>() - kTruthK2.risk_ratio) <
        1e-12);
  CHECK(truth.at("dgp_digest").get<std::string>() == file_digest_hex(dgp));

  const Cohort cohort = read_cohort_csv(cohort_path);
  CHECK(cohort.n() == 500);
  CHECK(cohort.has_truth());
}

TEST_CASE("simulate is reproducible by seed and distinct across seeds") {
  const std::string a = scratch("seed_a.csv");
  const std::string b = scratch("seed_b.csv");
  const std::string c = scratch("seed_c.csv");
  const std::string dgp = data_path("dgp_discrete_k2.json");
  REQUIRE(run_cli("simulate --dgp " + dgp + " --out " + a + " --n 200 --seed 5") == 0);
  REQUIRE(run_cli("simulate --dgp " + dgp + " --out " + b + " --n 200 --seed 5") == 0);
  REQUIRE(run_cli("simulate --dgp " + dgp + " --out " + c + " --n 200 --seed 6") == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) != slurp(c));
}

TEST_CASE("simulate refuses a truth file for non-enumerable processes") {
  const int code = run_cli("simulate --dgp " + data_path("dgp_paper_shaped.json") +
                           " --out " + scratch("paper.csv") + " --n 50 --truth-out " +
                           scratch("paper_truth.json"));
  CHECK(code == 2);
}

TEST_CASE("estimate runs each method and carries the confusion summary") {
  const std::string report_path = scratch("estimate.json");
  REQUIRE(run_cli("estimate --cohort " + k2_cohort() + " --confusion " +
                      k2_confusion() + " --seed 3",
                  report_path) == 0);
  const json report = read_report(report_path);
  CHECK(report.at("command").get<std::string>() == "estimate");
  CHECK(report.at("method").get<std::string>() == "matrix-adjust");
  CHECK(report.at("confusion").at("k").get<int>() == 2);
  CHECK(report.at("confusion").at("accuracy").get<double>() ==
        doctest::Approx(84.0 / 100.0).epsilon(1e-12));
  const json& est = report.at("estimate");
  CHECK(est.at("risk_ratio").is_number());
  CHECK(est.at("rows_used").get<long>() == 600);
  CHECK(est.at("dropped_rows").get<long>() == 0);
  CHECK(est.at("subgroups").size() == 2);

  // naive needs no confusion matrix
  const std::string naive_path = scratch("naive.json");
  REQUIRE(run_cli("estimate --cohort " + k2_cohort() + " --method naive --k 2",
                  naive_path) == 0);
  const json naive = read_report(naive_path);
  CHECK(naive.at("method").get<std::string>() == "naive");
  CHECK(naive.at("confusion").is_null());
  CHECK(naive.at("estimate").at("risk_ratio").is_number());

  // oracle uses the recorded true labels
  const std::string oracle_path = scratch("oracle.json");
  REQUIRE(run_cli("estimate --cohort " + k2_cohort() + " --method oracle --k 2",
                  oracle_path) == 0);
  CHECK(read_report(oracle_path).at("method").get<std::string>() == "oracle");
}

TEST_CASE("the shipped validation table reports its published accuracy") {
  const std::string cohort4 = scratch("k4.csv");
  REQUIRE(run_cli("simulate --dgp " + data_path("dgp_discrete_k4.json") +
                  " --out " + cohort4 + " --n 800 --seed 2") == 0);
  const std::string report_path = scratch("n2c2.json");
  REQUIRE(run_cli("estimate --cohort " + cohort4 + " --method naive --confusion " +
                      data_path("n2c2_confusion.csv"),
                  report_path) == 0);
  const json report = read_report(report_path);
  CHECK(report.at("confusion").at("accuracy").get<double>() == 87.0 / 101.0);
  CHECK(report.at("confusion").at("k").get<int>() == 4);

  const std::string smoothed_path = scratch("n2c2_smoothed.json");
  REQUIRE(run_cli("estimate --cohort " + cohort4 + " --method naive --confusion " +
                      data_path("n2c2_confusion.csv") + " --alpha 0.5",
                  smoothed_path) == 0);
  CHECK(read_report(smoothed_path).at("confusion").at("smoothing_alpha").get<double>() ==
        0.5);
}

TEST_CASE("estimate reports are byte-identical across reruns") {
  const std::string first = scratch("rerun_a.json");
  const std::string second = scratch("rerun_b.json");
  const std::string args = "estimate --cohort " + k2_cohort() + " --confusion " +
                           k2_confusion() +
                           " --method mc-simex --b-per-lambda 3 --seed 12 --out ";
  REQUIRE(run_cli(args + first) == 0);
  REQUIRE(run_cli(args + second) == 0);
  CHECK(slurp(first) == slurp(second));

  const json report = read_report(first);
  CHECK(report.at("method").get<std::string>() == "mc-simex");
  REQUIRE(report.contains("trace"));
  CHECK(report.at("trace").at("levels").size() == 5);
  CHECK(report.at("trace").at("extrapolated").at("risk_ratio").get<double>() ==
        report.at("estimate").at("risk_ratio").get<double>());
}

TEST_CASE("missing proxy labels drop rows unless remapped") {
  Cohort cohort = read_cohort_csv(k2_cohort());
  for (int i = 0; i < 30; ++i) cohort.u_star(i * 7) = kMissingLabel;
  const std::string holey = scratch("holey.csv");
  write_cohort_csv(holey, cohort);

  const std::string drop_path = scratch("drop.json");
  REQUIRE(run_cli("estimate --cohort " + holey + " --method naive --k 2",
                  drop_path) == 0);
  CHECK(read_report(drop_path).at("estimate").at("dropped_rows").get<long>() == 30);

  const std::string remap_path = scratch("remap.json");
  REQUIRE(run_cli("estimate --cohort " + holey + " --method naive --k 2 --missing-as 0",
                  remap_path) == 0);
  const json remapped = read_report(remap_path);
  CHECK(remapped.at("estimate").at("dropped_rows").get<long>() == 0);
  CHECK(remapped.at("estimate").at("rows_used").get<long>() == 600);
}

TEST_CASE("bootstrap resolves per-mode defaults and honors explicit splits") {
  const std::string both_path = scratch("boot_both.json");
  REQUIRE(run_cli("bootstrap --cohort " + k2_cohort() + " --confusion " +
                      k2_confusion() + " --bootstrap both --seed 8",
                  both_path) == 0);
  const json both = read_report(both_path);
  CHECK(both.at("plan").at("r_analysis").get<int>() == 10);
  CHECK(both.at("plan").at("r_validation").get<int>() == 10);
  CHECK(both.at("bootstrap").at("n_requested").get<long>() == 100);
  CHECK(both.at("bootstrap").at("mode").get<std::string>() == "both");
  const json& intervals = both.at("bootstrap").at("intervals");
  REQUIRE(intervals.size() == 2);
  CHECK(intervals[0].at("estimand").get<std::string>() == "risk_ratio");
  CHECK(intervals[0].at("lower").get<double>() <=
        intervals[0].at("upper").get<double>());
  CHECK_FALSE(intervals[0].contains("replicates"));

  const std::string square_path = scratch("boot_square.json");
  REQUIRE(run_cli("bootstrap --cohort " + k2_cohort() + " --confusion " +
                      k2_confusion() +
                      " --bootstrap both --replicates 16 --seed 8 --keep-replicates",
                  square_path) == 0);
  const json square = read_report(square_path);
  CHECK(square.at("bootstrap").at("n_requested").get<long>() == 16);
  CHECK(square.at("plan").at("r_analysis").get<int>() == 4);
  const json& kept = square.at("bootstrap").at("intervals")[0];
  REQUIRE(kept.contains("replicates"));
  CHECK(kept.at("replicates").size() ==
        square.at("bootstrap").at("n_survived").get<std::size_t>());

  // a non-square total cannot be split across the crossed axes
  CHECK(run_cli("bootstrap --cohort " + k2_cohort() + " --confusion " +
                k2_confusion() + " --bootstrap both --replicates 7") == 2);
  // explicit per-axis counts conflict with the total
  CHECK(run_cli("bootstrap --cohort " + k2_cohort() + " --confusion " +
                k2_confusion() + " --replicates 20 --r-analysis 5") == 2);
}

TEST_CASE("compare lines up every applicable estimator in one report") {
  const std::string report_path = scratch("compare.json");
  REQUIRE(run_cli("compare --cohort " + k2_cohort() + " --confusion " +
                      k2_confusion() + " --b-per-lambda 2 --seed 14",
                  report_path) == 0);
  const json report = read_report(report_path);
  const json& rows = report.at("rows");
  REQUIRE(rows.size() == 4);  // truth is recorded, so the oracle joins
  CHECK(rows[0].at("method").get<std::string>() == "naive");
  CHECK(rows[1].at("method").get<std::string>() == "matrix-adjust");
  CHECK(rows[2].at("method").get<std::string>() == "mc-simex");
  CHECK(rows[3].at("method").get<std::string>() == "oracle");
  for (const json& row : rows) {
    CHECK(row.at("estimate").at("risk_ratio").is_number());
    CHECK_FALSE(row.contains("intervals"));
  }
  CHECK(rows[2].contains("trace"));

  // the rendered table goes to stderr, one line per estimator plus a header
  const std::string table = slurp(scratch("stderr.txt"));
  CHECK(table.find("naive") != std::string::npos);
  CHECK(table.find("oracle") != std::string::npos);

  const std::string ci_path = scratch("compare_ci.json");
  REQUIRE(run_cli("compare --cohort " + k2_cohort() + " --confusion " +
                      k2_confusion() +
                      " --b-per-lambda 2 --seed 14 --bootstrap analysis --replicates 8",
                  ci_path) == 0);
  const json with_ci = read_report(ci_path);
  for (const json& row : with_ci.at("rows")) {
    const bool oracle = row.at("method").get<std::string>() == "oracle";
    CHECK(row.contains("intervals") == !oracle);
  }
}

TEST_CASE("failures map to the documented exit codes") {
  // io: missing input file
  CHECK(run_cli("estimate --cohort no_such_file.csv --method naive") == 3);
  // config: unknown method value, rejected at parse time
  CHECK(run_cli("estimate --cohort " + k2_cohort() + " --method nonsense") == 2);
  // config: adjustment without a confusion matrix
  CHECK(run_cli("estimate --cohort " + k2_cohort() + " --method matrix-adjust") == 2);
  // config: missing required subcommand
  CHECK(run_cli("") == 2);

  // data: cohort categories do not match the confusion matrix
  const std::string wide = scratch("confusion3.csv");
  {
    std::ofstream file(wide);
    file << "30,5,5\n5,30,5\n5,5,30\n";
  }
  CHECK(run_cli("estimate --cohort " + k2_cohort() + " --confusion " + wide +
                " --k 2") == 4);

  // numeric: a zero confusion row cannot be normalized
  const std::string zero_row = scratch("confusion_zero.csv");
  {
    std::ofstream file(zero_row);
    file << "44,6\n0,0\n";
  }
  CHECK(run_cli("estimate --cohort " + k2_cohort() + " --confusion " + zero_row) == 5);
}

TEST_CASE("the config hash tracks option changes and ignores reruns") {
  const std::string a = scratch("hash_a.json");
  const std::string b = scratch("hash_b.json");
  const std::string c = scratch("hash_c.json");
  const std::string base = "estimate --cohort " + k2_cohort() + " --confusion " +
                           k2_confusion() + " --method naive";
  REQUIRE(run_cli(base + " --seed 1", a) == 0);
  REQUIRE(run_cli(base + " --seed 1", b) == 0);
  REQUIRE(run_cli(base + " --seed 2", c) == 0);
  CHECK(read_report(a).at("config_hash") == read_report(b).at("config_hash"));
  CHECK(read_report(a).at("config_hash") != read_report(c).at("config_hash"));
  CHECK(read_report(a).at("inputs").at("cohort").at("digest") ==
        read_report(c).at("inputs").at("cohort").at("digest"));
}
