#include "tumorctl/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <memory>
#include <stdexcept>

namespace tumorctl {

static_assert(std::endian::native == std::endian::little,
              "binary snapshots assume a little-endian host");

Grid::Grid(int nx, int ny, double hx, double hy) : nx_(nx), ny_(ny), hx_(hx), hy_(hy) {
  if (nx < 4 || ny < 4) throw std::invalid_argument("grid needs at least 4 cells per axis");
  if (!(hx > 0.0) || !(hy > 0.0)) throw std::invalid_argument("grid spacing must be positive");
  auto w = std::make_shared<Eigen::VectorXd>(static_cast<Eigen::Index>(nodes()));
  for (int j = 0; j <= ny_; ++j) {
    const double wy = (j == 0 || j == ny_) ? 0.5 : 1.0;
    for (int i = 0; i <= nx_; ++i) {
      const double wx = (i == 0 || i == nx_) ? 0.5 : 1.0;
      (*w)[static_cast<Eigen::Index>(index(i, j))] = wx * wy * hx_ * hy_;
    }
  }
  weights_ = std::move(w);
}

const Eigen::VectorXd& Grid::weights() const {
  static const Eigen::VectorXd empty;
  return weights_ ? *weights_ : empty;
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (a != b) throw std::invalid_argument("fields live on different grids");
}

ScalarField::ScalarField(const Grid& g, Eigen::VectorXd values) : grid(g), v(std::move(values)) {
  if (v.size() != static_cast<Eigen::Index>(g.nodes()))
    throw std::invalid_argument("field length does not match node count");
}

void VectorField::zero_boundary() {
  for (int j = 0; j <= grid.ny(); ++j)
    for (int i = 0; i <= grid.nx(); ++i)
      if (grid.on_boundary(i, j)) {
        const auto k = static_cast<Eigen::Index>(grid.index(i, j));
        u1[k] = 0.0;
        u2[k] = 0.0;
      }
}

double VectorField::max_abs_on_boundary() const {
  double m = 0.0;
  for (int j = 0; j <= grid.ny(); ++j)
    for (int i = 0; i <= grid.nx(); ++i)
      if (grid.on_boundary(i, j)) {
        const auto k = static_cast<Eigen::Index>(grid.index(i, j));
        m = std::max({m, std::abs(u1[k]), std::abs(u2[k])});
      }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

// Applies a 1D derivative (or its transpose) along every grid line.
// stride/count/lines describe the line layout in the flat vector.
template <bool Transpose>
Eigen::VectorXd diff_lines(const Eigen::VectorXd& f, int n, double h, std::size_t stride,
                           std::size_t line_stride, int lines) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(f.size());
  const double c = 0.5 / h;
  const double e = 1.0 / h;
  for (int l = 0; l < lines; ++l) {
    const std::size_t base = static_cast<std::size_t>(l) * line_stride;
    auto at = [&](int i) { return static_cast<Eigen::Index>(base + static_cast<std::size_t>(i) * stride); };
    if constexpr (!Transpose) {
      out[at(0)] = e * (f[at(1)] - f[at(0)]);
      for (int i = 1; i < n; ++i) out[at(i)] = c * (f[at(i + 1)] - f[at(i - 1)]);
      out[at(n)] = e * (f[at(n)] - f[at(n - 1)]);
    } else {
      out[at(1)] += e * f[at(0)];
      out[at(0)] -= e * f[at(0)];
      for (int i = 1; i < n; ++i) {
        out[at(i + 1)] += c * f[at(i)];
        out[at(i - 1)] -= c * f[at(i)];
      }
      out[at(n)] += e * f[at(n)];
      out[at(n - 1)] -= e * f[at(n)];
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd diff_x(const Grid& g, const Eigen::VectorXd& f) {
  return diff_lines<false>(f, g.nx(), g.hx(), 1, static_cast<std::size_t>(g.nx() + 1), g.ny() + 1);
}
Eigen::VectorXd diff_y(const Grid& g, const Eigen::VectorXd& f) {
  return diff_lines<false>(f, g.ny(), g.hy(), static_cast<std::size_t>(g.nx() + 1), 1, g.nx() + 1);
}
Eigen::VectorXd diff_x_transpose(const Grid& g, const Eigen::VectorXd& f) {
  return diff_lines<true>(f, g.nx(), g.hx(), 1, static_cast<std::size_t>(g.nx() + 1), g.ny() + 1);
}
Eigen::VectorXd diff_y_transpose(const Grid& g, const Eigen::VectorXd& f) {
  return diff_lines<true>(f, g.ny(), g.hy(), static_cast<std::size_t>(g.nx() + 1), 1, g.nx() + 1);
}

ScalarField laplacian_neumann(const ScalarField& field) {
  const Grid& g = field.grid;
  const int nx = g.nx();
  const int ny = g.ny();
  const double ax = 1.0 / (g.hx() * g.hx());
  const double ay = 1.0 / (g.hy() * g.hy());
  ScalarField out(g);
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const double c = field(i, j);
      // ghost reflection: u(-1) = u(1), u(n+1) = u(n-1)
      const double left = field(i == 0 ? 1 : i - 1, j);
      const double right = field(i == nx ? nx - 1 : i + 1, j);
      const double down = field(i, j == 0 ? 1 : j - 1);
      const double up = field(i, j == ny ? ny - 1 : j + 1);
      out(i, j) = ax * (left - 2.0 * c + right) + ay * (down - 2.0 * c + up);
    }
  }
  return out;
}

Eigen::VectorXd laplacian_neumann_diagonal(const Grid& g) {
  const double d = -2.0 / (g.hx() * g.hx()) - 2.0 / (g.hy() * g.hy());
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.nodes()), d);
}

Eigen::VectorXd RobinLaplacian::boundary_coefficient(const Grid& g) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.nodes()));
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i <= g.nx(); ++i) {
      double s = 0.0;
      if (i == 0 || i == g.nx()) s += 2.0 / g.hx();
      if (j == 0 || j == g.ny()) s += 2.0 / g.hy();
      c[static_cast<Eigen::Index>(g.index(i, j))] = s;
    }
  return c;
}

ScalarField RobinLaplacian::linear(const ScalarField& field) {
  ScalarField out = laplacian_neumann(field);
  out.v -= boundary_coefficient(field.grid).cwiseProduct(field.v);
  return out;
}

ScalarField RobinLaplacian::source(const ScalarField& boundary_datum) {
  ScalarField out(boundary_datum.grid);
  out.v = boundary_coefficient(boundary_datum.grid).cwiseProduct(boundary_datum.v);
  return out;
}

ScalarField laplacian_robin(const ScalarField& field, const ScalarField& boundary_datum) {
  require_same_grid(field.grid, boundary_datum.grid);
  ScalarField out = RobinLaplacian::linear(field);
  out.v += RobinLaplacian::source(boundary_datum).v;
  return out;
}

SymTensorField sym_grad(const VectorField& disp) {
  const Grid& g = disp.grid;
  SymTensorField eps(g);
  eps.e11 = diff_x(g, disp.u1);
  eps.e22 = diff_y(g, disp.u2);
  eps.e12 = 0.5 * (diff_y(g, disp.u1) + diff_x(g, disp.u2));
  return eps;
}

VectorField stress_transpose(const SymTensorField& s) {
  const Grid& g = s.grid;
  const Eigen::VectorXd& w = g.weights();
  const Eigen::VectorXd ws11 = w.cwiseProduct(s.e11);
  const Eigen::VectorXd ws22 = w.cwiseProduct(s.e22);
  const Eigen::VectorXd ws12 = w.cwiseProduct(s.e12);
  VectorField out(g);
  out.u1 = diff_x_transpose(g, ws11) + diff_y_transpose(g, ws12);
  out.u2 = diff_x_transpose(g, ws12) + diff_y_transpose(g, ws22);
  return out;
}

VectorField div_stress(const SymTensorField& stress) {
  VectorField out = stress_transpose(stress);
  const Eigen::VectorXd& w = stress.grid.weights();
  out.u1 = -out.u1.cwiseQuotient(w);
  out.u2 = -out.u2.cwiseQuotient(w);
  out.zero_boundary();
  return out;
}

// ---------------------------------------------------------------------------

double inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid);
  return a.grid.weights().dot(a.v.cwiseProduct(b.v));
}

double inner(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid);
  const auto& w = a.grid.weights();
  return w.dot(a.u1.cwiseProduct(b.u1) + a.u2.cwiseProduct(b.u2));
}

double inner(const SymTensorField& a, const SymTensorField& b) {
  require_same_grid(a.grid, b.grid);
  const auto& w = a.grid.weights();
  return w.dot(a.e11.cwiseProduct(b.e11) + a.e22.cwiseProduct(b.e22) +
               2.0 * a.e12.cwiseProduct(b.e12));
}

double norm_l2(const ScalarField& a) { return std::sqrt(inner(a, a)); }
double norm_l2(const VectorField& a) { return std::sqrt(inner(a, a)); }

namespace {
double edge_energy(const Grid& g, const Eigen::VectorXd& f) {
  double sum = 0.0;
  const double cell = g.hx() * g.hy();
  for (int j = 0; j <= g.ny(); ++j) {
    const double wy = (j == 0 || j == g.ny()) ? 0.5 : 1.0;
    for (int i = 0; i < g.nx(); ++i) {
      const double d = (f[static_cast<Eigen::Index>(g.index(i + 1, j))] -
                        f[static_cast<Eigen::Index>(g.index(i, j))]) / g.hx();
      sum += wy * cell * d * d;
    }
  }
  for (int i = 0; i <= g.nx(); ++i) {
    const double wx = (i == 0 || i == g.nx()) ? 0.5 : 1.0;
    for (int j = 0; j < g.ny(); ++j) {
      const double d = (f[static_cast<Eigen::Index>(g.index(i, j + 1))] -
                        f[static_cast<Eigen::Index>(g.index(i, j))]) / g.hy();
      sum += wx * cell * d * d;
    }
  }
  return sum;
}
}  // namespace

double gradient_energy(const ScalarField& a) { return edge_energy(a.grid, a.v); }
double gradient_energy(const VectorField& a) {
  return edge_energy(a.grid, a.u1) + edge_energy(a.grid, a.u2);
}

double norm_h1(const ScalarField& a) { return std::sqrt(inner(a, a) + gradient_energy(a)); }
double norm_h1(const VectorField& a) { return std::sqrt(inner(a, a) + gradient_energy(a)); }

double integral(const ScalarField& a) { return a.grid.weights().dot(a.v); }

std::vector<double> trapezoid_time_weights(std::size_t count, double tau) {
  std::vector<double> w(count, tau);
  if (count == 1) {
    w[0] = 0.0;
  } else if (count > 1) {
    w.front() = 0.5 * tau;
    w.back() = 0.5 * tau;
  }
  return w;
}

double trapezoid_in_time(const std::vector<double>& samples, double tau) {
  const auto w = trapezoid_time_weights(samples.size(), tau);
  double sum = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) sum += w[k] * samples[k];
  return sum;
}

// ---------------------------------------------------------------------------

void write_snapshot_csv(const std::string& path, const ScalarField& field, double t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  const Grid& g = field.grid;
  char buf[64];
  os << "# nx,ny,hx,hy,t\n";
  os << g.nx() << ',' << g.ny();
  for (double d : {g.hx(), g.hy(), t}) {
    std::snprintf(buf, sizeof buf, ",%.17g", d);
    os << buf;
  }
  os << '\n';
  for (int j = 0; j <= g.ny(); ++j) {
    for (int i = 0; i <= g.nx(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", field(i, j));
      if (i > 0) os << ',';
      os << buf;
    }
    os << '\n';
  }
}

ScalarField read_snapshot_csv(const std::string& path, double* t) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line.rfind("# nx,ny,hx,hy,t", 0) != 0) throw std::runtime_error(path + ": bad snapshot header");
  std::getline(is, line);
  int nx = 0, ny = 0;
  double hx = 0, hy = 0, tt = 0;
  if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &nx, &ny, &hx, &hy, &tt) != 5)
    throw std::runtime_error(path + ": bad snapshot metadata row");
  ScalarField out(Grid(nx, ny, hx, hy));
  for (int j = 0; j <= ny; ++j) {
    if (!std::getline(is, line)) throw std::runtime_error(path + ": truncated snapshot");
    std::stringstream ss(line);
    std::string cell;
    for (int i = 0; i <= nx; ++i) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error(path + ": short snapshot row");
      out(i, j) = std::stod(cell);
    }
  }
  if (t) *t = tt;
  return out;
}

void write_snapshot_binary(const std::string& path, const ScalarField& field, double t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  const Grid& g = field.grid;
  const std::uint32_t nx = static_cast<std::uint32_t>(g.nx());
  const std::uint32_t ny = static_cast<std::uint32_t>(g.ny());
  const double hx = g.hx(), hy = g.hy();
  os.write("TCF1", 4);
  os.write(reinterpret_cast<const char*>(&nx), sizeof nx);
  os.write(reinterpret_cast<const char*>(&ny), sizeof ny);
  os.write(reinterpret_cast<const char*>(&hx), sizeof hx);
  os.write(reinterpret_cast<const char*>(&hy), sizeof hy);
  os.write(reinterpret_cast<const char*>(&t), sizeof t);
  os.write(reinterpret_cast<const char*>(field.v.data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(field.v.size())));
}

ScalarField read_snapshot_binary(const std::string& path, double* t) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "TCF1") throw std::runtime_error(path + ": bad magic");
  std::uint32_t nx = 0, ny = 0;
  double hx = 0, hy = 0, tt = 0;
  is.read(reinterpret_cast<char*>(&nx), sizeof nx);
  is.read(reinterpret_cast<char*>(&ny), sizeof ny);
  is.read(reinterpret_cast<char*>(&hx), sizeof hx);
  is.read(reinterpret_cast<char*>(&hy), sizeof hy);
  is.read(reinterpret_cast<char*>(&tt), sizeof tt);
  ScalarField out(Grid(static_cast<int>(nx), static_cast<int>(ny), hx, hy));
  is.read(reinterpret_cast<char*>(out.v.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(out.v.size())));
  if (!is) throw std::runtime_error(path + ": truncated snapshot");
  if (t) *t = tt;
  return out;
}

}  // namespace tumorctl
