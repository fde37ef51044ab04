#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tumorctl/control.hpp"
#include "tumorctl/cost.hpp"
#include "tumorctl/model.hpp"
#include "tumorctl/state.hpp"

namespace tumorctl {

/// Key-value run configuration.
///
/// One `key = value` per line; `#` starts a comment; keys are dotted
/// (`grid.nx`, `model.phi0`, ...). Every key has a default and unknown keys are
/// rejected with the offending line number. `schema()` lists the keys.
class RunConfig {
 public:
  struct Entry {
    std::string key;
    std::string default_value;
    std::string help;
  };
  static const std::vector<Entry>& schema();

  static RunConfig defaults();
  static RunConfig parse(const std::string& text, const std::string& origin = "<config>");
  static RunConfig load(const std::string& path);

  /// Throws ConfigError on an unknown key.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::uint64_t seed() const;

  /// Directory that relative snapshot paths resolve against.
  const std::string& base_dir() const { return base_dir_; }
  void set_base_dir(std::string dir) { base_dir_ = std::move(dir); }

  /// Every key in schema order as `key = value` lines.
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
  std::string base_dir_ = ".";
};

/// Field expressions: a sum (" + " separated) of terms, each one of
///   <number>
///   gauss(amp, x0, y0, width[, base])       base + amp exp(-|x - x0|^2 / (2 width^2))
///   tanh_front(inside, outside, x0, y0, radius, width)
///   cosine(amp, kx, ky[, base])             base + amp cos(kx pi x / Lx) cos(ky pi y / Ly)
///   sine(amp, kx, ky[, base])               base + amp sin(kx pi x / Lx) sin(ky pi y / Ly)
///   snapshot(path)                          CSV or TCF1 binary file on the same grid
ScalarField eval_field_expression(const std::string& expr, const Grid& grid, const std::string& base_dir = ".");

Grid build_grid(const RunConfig& cfg);
int build_steps(const RunConfig& cfg);
LogisticFamily build_family(const RunConfig& cfg);
ModelSpec build_model(const RunConfig& cfg);
Control build_initial_control(const RunConfig& cfg, const ModelSpec& spec);
/// Synthetic targets come from a forward solve with the configured true control.
CostSpec build_cost(const RunConfig& cfg, const ModelSpec& spec);
Control build_true_control(const RunConfig& cfg, const ModelSpec& spec);
CostHypothesisInput build_cost_hypothesis_input(const CostSpec& cost);
AdmissibleBox build_box(const RunConfig& cfg, const ModelSpec& spec);
OptimizerOptions build_optimizer_options(const RunConfig& cfg);

/// Control with every time node equal to the given fields.
Control control_from_fields(const ScalarField& chi1, const ScalarField& chi2, std::size_t time_nodes);

/// Smooth seeded random direction: a few low cosine modes plus an offset,
/// identical in every time node up to a smooth time factor.
Control random_smooth_direction(const Grid& g, std::size_t time_nodes, std::uint64_t seed);

}  // namespace tumorctl
