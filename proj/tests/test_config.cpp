#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>

#include "commands.hpp"
#include "helpers.hpp"
#include "tumorctl/config.hpp"
#include "tumorctl/errors.hpp"

using namespace tumorctl;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("parse accepts comments and blank lines") {
    const RunConfig c = RunConfig::parse("# header\n\ngrid.nx = 12   # trailing\n  time.T=2\n");
    CHECK(c.integer("grid.nx") == 12);
    CHECK(c.number("time.T") == 2.0);
    CHECK(c.get("grid.ny") == "48");
  }

  TEST_CASE("parse errors name the line") {
    CHECK(contains(error_of([] { RunConfig::parse("grid.nx = 8\ngrid.nz = 8\n", "a.cfg"); }),
                   "a.cfg:2: unknown key 'grid.nz'"));
    CHECK(contains(error_of([] { RunConfig::parse("\n\ngrid.nx 8\n", "b.cfg"); }), "b.cfg:3: expected 'key = value'"));
    CHECK(contains(error_of([] { RunConfig::parse("grid.nx =\n", "c.cfg"); }), "c.cfg:1: empty value"));
    CHECK(contains(error_of([] { RunConfig::load("/nonexistent/run.cfg"); }), "cannot open"));
  }

  TEST_CASE("typed accessors") {
    RunConfig c = RunConfig::defaults();
    c.set("grid.nx", "abc");
    CHECK_THROWS_AS(c.number("grid.nx"), ConfigError);
    c.set("grid.nx", "8.5");
    CHECK_THROWS_AS(c.integer("grid.nx"), ConfigError);
    c.set("model.k2_variable", "maybe");
    CHECK_THROWS_AS(c.flag("model.k2_variable"), ConfigError);
    CHECK(c.numbers("check.taylor_eps") == std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4});
    CHECK(c.seed() == 20240601u);
    CHECK_THROWS_AS(c.set("nope", "1"), ConfigError);
  }

  TEST_CASE("dump round trips") {
    RunConfig c = RunConfig::defaults();
    c.set("model.phi0", "gauss(0.5, 0.3, 0.3, 0.1)");
    const RunConfig back = RunConfig::parse(c.dump());
    CHECK(back.dump() == c.dump());
    CHECK(RunConfig::schema().size() > 50u);
  }

  TEST_CASE("field expressions") {
    const Grid g = Grid::on_rectangle(10, 10, 1.0, 1.0);
    const ScalarField c = eval_field_expression("0.25", g);
    CHECK(c.min() == 0.25);
    CHECK(c.max() == 0.25);

    const ScalarField gs = eval_field_expression("gauss(2, 0.5, 0.5, 0.1, 1)", g);
    CHECK(gs(5, 5) == doctest::Approx(3.0));
    CHECK(gs(0, 5) == doctest::Approx(1.0 + 2.0 * std::exp(-0.25 / 0.02)));

    const ScalarField cs = eval_field_expression("cosine(1, 1, 0, 0.5)", g);
    CHECK(cs(0, 3) == doctest::Approx(1.5));
    CHECK(cs(10, 3) == doctest::Approx(-0.5));

    const ScalarField sn = eval_field_expression("sine(2, 1, 1)", g);
    CHECK(sn(5, 5) == doctest::Approx(2.0));
    CHECK(std::abs(sn(0, 5)) < 1e-15);

    const ScalarField tf = eval_field_expression("tanh_front(1, 0, 0.5, 0.5, 0.25, 0.01)", g);
    CHECK(tf(5, 5) == doctest::Approx(1.0));
    CHECK(tf(0, 0) == doctest::Approx(0.0).epsilon(1e-12));

    const ScalarField sum = eval_field_expression("0.5 + sine(2, 1, 1)", g);
    CHECK(sum(5, 5) == doctest::Approx(2.5));

    const auto dir = std::filesystem::temp_directory_path() / "tumorctl_cfg_test";
    std::filesystem::create_directories(dir);
    write_snapshot_csv((dir / "f.csv").string(), sn, 0.0);
    const ScalarField snap = eval_field_expression("snapshot(f.csv)", g, dir.string());
    CHECK((snap.v - sn.v).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(eval_field_expression("snapshot(f.csv)", Grid::on_rectangle(8, 8, 1.0, 1.0), dir.string()),
                    ConfigError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("malformed expressions") {
    const Grid g = Grid::on_rectangle(4, 4, 1.0, 1.0);
    for (const char* bad : {"blob(1)", "gauss(1, 2)", "gauss(1, 0.5, 0.5, 0)", "gauss(1, 0.5, 0.5", "1 + ",
                            "sine(a, 1, 1)", "cosine(1,1,1,1,1)"})
      CHECK_THROWS_AS(eval_field_expression(bad, g), ConfigError);
  }

  TEST_CASE("builders validate") {
    auto throws = [](std::initializer_list<std::pair<const char*, std::string>> o, auto build) {
      const RunConfig c = testing::config(o);
      CHECK_THROWS_AS(build(c), ConfigError);
    };
    throws({{"grid.nx", "2"}}, [](const RunConfig& c) { return build_grid(c); });
    throws({{"time.steps", "0"}}, [](const RunConfig& c) { return build_steps(c); });
    throws({{"model.C1", "0"}}, [](const RunConfig& c) { return build_model(c); });
    throws({{"optimizer.lambda0", "0"}}, [](const RunConfig& c) { return build_optimizer_options(c); });
    throws({{"optimizer.lambda_max", "0.5"}}, [](const RunConfig& c) { return build_optimizer_options(c); });
    throws({{"cost.targets", "magic"}, {"grid.nx", "8"}, {"grid.ny", "8"}, {"time.steps", "5"}},
           [](const RunConfig& c) { return build_cost(c, build_model(c)); });
    throws({{"cost.alpha2", "-1"}, {"grid.nx", "8"}, {"grid.ny", "8"}, {"time.steps", "5"}},
           [](const RunConfig& c) { return build_cost(c, build_model(c)); });
  }

  TEST_CASE("synthetic targets come from the true control") {
    const RunConfig c = testing::config(
        {{"grid.nx", "8"}, {"grid.ny", "8"}, {"time.steps", "10"}, {"cost.targets", "synthetic"}});
    const ModelSpec spec = build_model(c);
    const CostSpec cost = build_cost(c, spec);
    const StateTrajectory truth = solve_state(build_true_control(c, spec), spec, 10);
    CHECK(cost.phi_q.size() == 11u);
    CHECK(cost.phi_q[7].v == truth.phi[7].v);
    CHECK(cost.z_q[3].v == truth.z[3].v);
    CHECK(cost.sigma_omega.v == truth.sigma.back().v);
  }

  TEST_CASE("seeded random directions are reproducible") {
    const Grid g = Grid::on_rectangle(8, 8, 1.0, 1.0);
    const Control a = random_smooth_direction(g, 5, 42), b = random_smooth_direction(g, 5, 42),
                  c = random_smooth_direction(g, 5, 43);
    CHECK(a.chi1[2].v == b.chi1[2].v);
    CHECK(a.chi2[4].v == b.chi2[4].v);
    CHECK(a.chi1[2].v != c.chi1[2].v);
  }

  TEST_CASE("refinement flag") {
    cli::Options opt;
    opt.refine = 1;
    RunConfig r = cli::resolve_config(opt);
    CHECK(r.integer("grid.nx") == 96);
    CHECK(r.integer("time.steps") == 800);
    opt.refine = -2;
    r = cli::resolve_config(opt);
    CHECK(r.integer("grid.ny") == 12);
    CHECK(r.integer("time.steps") == 100);
    opt.refine = -5;
    CHECK_THROWS_AS(cli::resolve_config(opt), ConfigError);
    opt.refine = 0;
    opt.out_dir = "elsewhere";
    CHECK(cli::resolve_config(opt).get("output.dir") == "elsewhere");
  }
}
