#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "tumorctl/grid.hpp"

using namespace tumorctl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string log;
  std::string err;
  fs::path out;
};

Outcome run_fixture(const std::string& command, const std::string& fixture, bool oracle = false) {
  cli::Options opt;
  opt.config_path = std::string(TUMORCTL_FIXTURES) + "/" + fixture + ".cfg";
  const fs::path out = fs::temp_directory_path() / ("tumorctl_cli_" + command + "_" + fixture);
  fs::remove_all(out);
  opt.out_dir = out.string();
  opt.oracle = oracle;
  std::ostringstream log, err;
  const int code = cli::run(command, opt, log, err);
  return {code, log.str(), err.str(), out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("all-zero scenario writes zero snapshots") {
    const Outcome o = run_fixture("simulate", "zero");
    CHECK(o.code == cli::kPass);
    for (const char* name : {"phi", "sigma", "u1", "u2"}) {
      const ScalarField f = read_snapshot_csv((o.out / (std::string(name) + "_00010.csv")).string());
      CHECK(f.v.cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(contains(slurp(o.out / "report.txt"), "result = pass"));
    CHECK(contains(slurp(o.out / "manifest.txt"), "command = simulate"));
  }

  TEST_CASE("hypothesis gate cites H9") {
    const Outcome o = run_fixture("simulate", "z0_zero");
    CHECK(o.code == cli::kPredicateFail);
    CHECK(contains(o.log, "hypothesis failed: H9"));
  }

  TEST_CASE("oracle comparison is reported") {
    const Outcome o = run_fixture("simulate", "homogeneous", true);
    CHECK(o.code == cli::kPass);
    const std::string report = slurp(o.out / "report.txt");
    CHECK(contains(report, "oracle_sup_error = "));
    CHECK(contains(report, "oracle_within_bound = yes"));
    CHECK(run_fixture("simulate", "small", true).code == cli::kConfigError);
  }

  TEST_CASE("error classes map onto exit codes") {
    const Outcome unknown = run_fixture("simulate", "unknown_key");
    CHECK(unknown.code == cli::kConfigError);
    CHECK(contains(unknown.err, "unknown_key.cfg:2"));
    CHECK(run_fixture("simulate", "stiff_damage").code == cli::kSolverError);
    const Outcome dir = run_fixture("gradient-check", "zero_direction");
    CHECK(dir.code == cli::kConfigError);
    CHECK(contains(dir.err, "degenerate direction"));
    CHECK(run_fixture("optimize", "bad_box").code == cli::kConfigError);
    CHECK(run_fixture("no-such-command", "zero").code == cli::kConfigError);
  }

  TEST_CASE("separation") {
    const Outcome ok = run_fixture("separation", "small");
    CHECK(ok.code == cli::kPass);
    CHECK(contains(ok.log, "r_low"));
    const Outcome bad = run_fixture("separation", "weak_potential");
    CHECK(bad.code == cli::kPredicateFail);
    CHECK(contains(bad.log, "condition 3"));
  }

  TEST_CASE("hypothesis-check") {
    const Outcome ok = run_fixture("hypothesis-check", "small");
    CHECK(ok.code == cli::kPass);
    CHECK(contains(slurp(ok.out / "hypotheses.csv"), "id,passed,worst,witness\n"));
    CHECK(run_fixture("hypothesis-check", "zero_weights").code == cli::kPredicateFail);
  }

  TEST_CASE("control cost alone: optimize reaches zero and gradient-check is exact") {
    const Outcome opt = run_fixture("optimize", "alpha9");
    CHECK(opt.code == cli::kPass);
    const std::string history = slurp(opt.out / "history.csv");
    CHECK(history.rfind("iteration,J,stationarity,step,ball_active\n", 0) == 0);
    CHECK(contains(history, "\n1,0,"));
    CHECK(run_fixture("gradient-check", "alpha9").code == cli::kPass);
  }

  TEST_CASE("outputs are byte-identical across runs") {
    const Outcome a = run_fixture("gradient-check", "alpha9");
    const std::string first = slurp(a.out / "gradient_check.csv") + slurp(a.out / "taylor.csv");
    const Outcome b = run_fixture("gradient-check", "alpha9");
    CHECK(first == slurp(b.out / "gradient_check.csv") + slurp(b.out / "taylor.csv"));
  }
}
