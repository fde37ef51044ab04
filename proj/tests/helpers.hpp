#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <utility>

#include "tumorctl/config.hpp"

namespace testing {

/// Defaults with a few keys overridden.
inline tumorctl::RunConfig config(std::initializer_list<std::pair<const char*, std::string>> overrides = {}) {
  tumorctl::RunConfig cfg = tumorctl::RunConfig::defaults();
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  return cfg;
}

inline tumorctl::ScalarField random_field(const tumorctl::Grid& g, std::uint64_t seed, double lo = -1.0,
                                          double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  tumorctl::ScalarField f(g);
  for (Eigen::Index k = 0; k < f.v.size(); ++k) f.v[k] = u(rng);
  return f;
}

inline tumorctl::VectorField random_dirichlet(const tumorctl::Grid& g, std::uint64_t seed) {
  tumorctl::VectorField w(g);
  w.u1 = random_field(g, seed).v;
  w.u2 = random_field(g, seed + 7).v;
  w.zero_boundary();
  return w;
}

inline tumorctl::SymTensorField random_tensor(const tumorctl::Grid& g, std::uint64_t seed) {
  tumorctl::SymTensorField s(g);
  s.e11 = random_field(g, seed).v;
  s.e22 = random_field(g, seed + 1).v;
  s.e12 = random_field(g, seed + 2).v;
  return s;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
