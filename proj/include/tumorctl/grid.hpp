#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tumorctl {

/// Node-centred structured grid on the rectangle [0, Lx] x [0, Ly].
///
/// Nodes are numbered row-major with x running fastest:
/// index(i, j) = j * (nx + 1) + i for 0 <= i <= nx, 0 <= j <= ny.
class Grid {
 public:
  Grid() = default;
  /// Throws std::invalid_argument unless nx, ny >= 4 and hx, hy > 0.
  Grid(int nx, int ny, double hx, double hy);

  static Grid on_rectangle(int nx, int ny, double lx, double ly) {
    return Grid(nx, ny, lx / nx, ly / ny);
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double lx() const { return nx_ * hx_; }
  double ly() const { return ny_ * hy_; }
  double area() const { return lx() * ly(); }

  std::size_t nodes() const {
    return static_cast<std::size_t>(nx_ + 1) * static_cast<std::size_t>(ny_ + 1);
  }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_ + 1) +
           static_cast<std::size_t>(i);
  }
  double x(int i) const { return i * hx_; }
  double y(int j) const { return j * hy_; }
  bool on_boundary(int i, int j) const {
    return i == 0 || j == 0 || i == nx_ || j == ny_;
  }

  /// Trapezoidal quadrature weights (hx*hy scaled by 1/2 per boundary axis).
  const Eigen::VectorXd& weights() const;

  bool operator==(const Grid& other) const {
    return nx_ == other.nx_ && ny_ == other.ny_ && hx_ == other.hx_ &&
           hy_ == other.hy_;
  }
  bool operator!=(const Grid& other) const { return !(*this == other); }

 private:
  int nx_ = 0;
  int ny_ = 0;
  double hx_ = 0.0;
  double hy_ = 0.0;
  // shared: every field holds a Grid, so a per-copy vector would double the
  // memory of a stored trajectory
  std::shared_ptr<const Eigen::VectorXd> weights_;
};

/// Throws std::invalid_argument when the two grids differ.
void require_same_grid(const Grid& a, const Grid& b);

struct ScalarField {
  Grid grid;
  Eigen::VectorXd v;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double value = 0.0)
      : grid(g), v(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.nodes()), value)) {}
  ScalarField(const Grid& g, Eigen::VectorXd values);

  double& operator()(int i, int j) { return v[static_cast<Eigen::Index>(grid.index(i, j))]; }
  double operator()(int i, int j) const { return v[static_cast<Eigen::Index>(grid.index(i, j))]; }

  template <typename F>
  static ScalarField from_function(const Grid& g, F&& f) {
    ScalarField out(g);
    for (int j = 0; j <= g.ny(); ++j)
      for (int i = 0; i <= g.nx(); ++i) out(i, j) = f(g.x(i), g.y(j));
    return out;
  }

  double min() const { return v.minCoeff(); }
  double max() const { return v.maxCoeff(); }
  bool all_finite() const { return v.allFinite(); }
};

/// Two-component field (u1, u2) per node.
struct VectorField {
  Grid grid;
  Eigen::VectorXd u1;
  Eigen::VectorXd u2;

  VectorField() = default;
  explicit VectorField(const Grid& g)
      : grid(g),
        u1(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.nodes()))),
        u2(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.nodes()))) {}

  template <typename F>
  static VectorField from_function(const Grid& g, F&& f) {
    VectorField out(g);
    for (int j = 0; j <= g.ny(); ++j)
      for (int i = 0; i <= g.nx(); ++i) {
        const auto [a, b] = f(g.x(i), g.y(j));
        const auto k = static_cast<Eigen::Index>(g.index(i, j));
        out.u1[k] = a;
        out.u2[k] = b;
      }
    return out;
  }

  /// Sets both components to zero on boundary nodes.
  void zero_boundary();
  double max_abs_on_boundary() const;
  bool all_finite() const { return u1.allFinite() && u2.allFinite(); }
};

/// Symmetric 2x2 tensor per node, stored as (e11, e22, e12).
struct SymTensorField {
  Grid grid;
  Eigen::VectorXd e11;
  Eigen::VectorXd e22;
  Eigen::VectorXd e12;

  SymTensorField() = default;
  explicit SymTensorField(const Grid& g)
      : grid(g),
        e11(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.nodes()))),
        e22(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.nodes()))),
        e12(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.nodes()))) {}

  bool all_finite() const { return e11.allFinite() && e22.allFinite() && e12.allFinite(); }
};

// ---------------------------------------------------------------------------
// Difference operators

/// First derivative along x: centred in the interior, one-sided on the edges.
Eigen::VectorXd diff_x(const Grid& g, const Eigen::VectorXd& f);
Eigen::VectorXd diff_y(const Grid& g, const Eigen::VectorXd& f);
/// Plain (unweighted) transposes of diff_x / diff_y.
Eigen::VectorXd diff_x_transpose(const Grid& g, const Eigen::VectorXd& f);
Eigen::VectorXd diff_y_transpose(const Grid& g, const Eigen::VectorXd& f);

/// 5-point Laplacian with ghost-node reflection (zero normal derivative).
ScalarField laplacian_neumann(const ScalarField& field);

/// Laplacian for the Robin condition d_nu s = s_gamma - s, split into a
/// symmetric linear part and an affine boundary source.
struct RobinLaplacian {
  /// Linear part: Neumann stencil minus 2/h on every boundary side a node touches.
  static ScalarField linear(const ScalarField& field);
  /// Diagonal of the extra boundary term, i.e. sum over touched sides of 2/h.
  static Eigen::VectorXd boundary_coefficient(const Grid& g);
  /// Affine part (2/h) * datum on boundary nodes, zero inside.
  static ScalarField source(const ScalarField& boundary_datum);
};

ScalarField laplacian_robin(const ScalarField& field, const ScalarField& boundary_datum);

/// Diagonal of the Neumann stencil (used by Jacobi preconditioners).
Eigen::VectorXd laplacian_neumann_diagonal(const Grid& g);

SymTensorField sym_grad(const VectorField& disp);

/// T(S) with <T(S), w> = <S, sym_grad(w)>_W for every w; unnormalised by weights.
VectorField stress_transpose(const SymTensorField& stress);

/// Discrete divergence, the negative W-adjoint of sym_grad on Dirichlet-zero
/// fields. Boundary entries are zero.
VectorField div_stress(const SymTensorField& stress);

// ---------------------------------------------------------------------------
// Quadrature

double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);
/// Frobenius pairing: e11 f11 + e22 f22 + 2 e12 f12.
double inner(const SymTensorField& a, const SymTensorField& b);

double norm_l2(const ScalarField& a);
double norm_l2(const VectorField& a);
/// |grad a|^2 summed over grid edges; equals -<laplacian_neumann(a), a>.
double gradient_energy(const ScalarField& a);
double gradient_energy(const VectorField& a);
double norm_h1(const ScalarField& a);
double norm_h1(const VectorField& a);
double integral(const ScalarField& a);

/// Composite trapezoid in time of per-node values sampled at uniform spacing tau.
double trapezoid_in_time(const std::vector<double>& samples, double tau);
std::vector<double> trapezoid_time_weights(std::size_t count, double tau);

// ---------------------------------------------------------------------------
// Snapshot I/O

/// CSV: "# nx,ny,hx,hy,t", one metadata row, then ny+1 rows of nx+1 values.
void write_snapshot_csv(const std::string& path, const ScalarField& field, double t);
ScalarField read_snapshot_csv(const std::string& path, double* t = nullptr);

/// Little-endian binary: "TCF1", u32 nx, u32 ny, f64 hx, f64 hy, f64 t, f64 values.
void write_snapshot_binary(const std::string& path, const ScalarField& field, double t);
ScalarField read_snapshot_binary(const std::string& path, double* t = nullptr);

}  // namespace tumorctl
