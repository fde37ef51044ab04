#include "tumorctl/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace tumorctl {

int cg_iteration_cap(std::size_t unknowns) {
  return static_cast<int>(std::ceil(10.0 * std::sqrt(static_cast<double>(unknowns))));
}

namespace {

// Sparse Cholesky factor of W (I - tau L) for one (grid, boundary, tau).
struct DiffusionFactor {
  Grid grid;
  Boundary bc;
  double tau;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

ScalarField apply_laplacian(Boundary bc, const ScalarField& f) {
  return bc == Boundary::robin ? RobinLaplacian::linear(f) : laplacian_neumann(f);
}

// Assembles W (I - tau L) by probing with five colour classes: node (i, j)
// gets colour (i + 2j) mod 5, so the 5-point stars of equal colours never
// overlap and each probe recovers whole columns.
Eigen::SparseMatrix<double> assemble_diffusion(const Grid& g, Boundary bc, double tau) {
  const Eigen::VectorXd& w = g.weights();
  std::vector<Eigen::Triplet<double>> trips;
  for (int colour = 0; colour < 5; ++colour) {
    ScalarField probe(g);
    for (int j = 0; j <= g.ny(); ++j)
      for (int i = 0; i <= g.nx(); ++i)
        if ((i + 2 * j) % 5 == colour) probe(i, j) = 1.0;
    const Eigen::VectorXd col = probe.v - tau * apply_laplacian(bc, probe).v;
    for (int j = 0; j <= g.ny(); ++j)
      for (int i = 0; i <= g.nx(); ++i) {
        if ((i + 2 * j) % 5 != colour) continue;
        const auto c = static_cast<Eigen::Index>(g.index(i, j));
        auto emit = [&](int a, int b) {
          if (a < 0 || b < 0 || a > g.nx() || b > g.ny()) return;
          const auto r = static_cast<Eigen::Index>(g.index(a, b));
          if (col[r] != 0.0) trips.emplace_back(r, c, w[r] * col[r]);
        };
        emit(i, j);
        emit(i - 1, j);
        emit(i + 1, j);
        emit(i, j - 1);
        emit(i, j + 1);
      }
  }
  const auto n = static_cast<Eigen::Index>(g.nodes());
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

// Small per-thread cache: solvers reuse the same few (grid, bc, tau) triples.
const DiffusionFactor& diffusion_factor(const Grid& g, Boundary bc, double tau) {
  thread_local std::vector<std::unique_ptr<DiffusionFactor>> cache;
  for (const auto& f : cache)
    if (f->grid == g && f->bc == bc && f->tau == tau) return *f;
  auto f = std::make_unique<DiffusionFactor>();
  f->grid = g;
  f->bc = bc;
  f->tau = tau;
  f->llt.compute(assemble_diffusion(g, bc, tau));
  if (f->llt.info() != Eigen::Success) throw SolverError("diffusion: factorization failed");
  if (cache.size() >= 8) cache.erase(cache.begin());
  cache.push_back(std::move(f));
  return *cache.back();
}

}  // namespace

CgResult solve_implicit_diffusion(Boundary bc, double tau, const Eigen::VectorXd& c,
                                  const ScalarField& b, ScalarField& x, const char* label) {
  const Grid& g = b.grid;
  const Eigen::VectorXd& w = g.weights();
  const DiffusionFactor& factor = diffusion_factor(g, bc, tau);

  auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd out = v - tau * apply_laplacian(bc, ScalarField(g, v)).v;
    if (c.size()) out -= tau * c.cwiseProduct(v);
    return w.cwiseProduct(out);
  };
  auto pre = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd { return factor.llt.solve(r); };
  if (x.grid != g || x.v.size() != b.v.size()) x = b;
  return pcg(apply, pre, w.cwiseProduct(b.v), x.v, kLinearTolerance, cg_iteration_cap(g.nodes()), label);
}

// ---------------------------------------------------------------------------

struct ElasticitySolver::Factor {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
  Eigen::SparseMatrix<double> matrix;
};

namespace {

// Sparse matrix of a 1D derivative along x (axis 0) or y (axis 1) acting on
// all nodes; columns restricted later.
void add_derivative(const Grid& g, int axis, int row_offset, int col_component,
                    const std::vector<Eigen::Index>& col_of_node, double scale,
                    std::vector<Eigen::Triplet<double>>& out) {
  const int n = axis == 0 ? g.nx() : g.ny();
  const double h = axis == 0 ? g.hx() : g.hy();
  const Eigen::Index ncols = static_cast<Eigen::Index>(std::count_if(
      col_of_node.begin(), col_of_node.end(), [](Eigen::Index c) { return c >= 0; }));
  for (int j = 0; j <= g.ny(); ++j) {
    for (int i = 0; i <= g.nx(); ++i) {
      const int pos = axis == 0 ? i : j;
      auto node = [&](int p) {
        return axis == 0 ? g.index(p, j) : g.index(i, p);
      };
      const Eigen::Index row = row_offset + static_cast<Eigen::Index>(g.index(i, j));
      auto emit = [&](int p, double v) {
        const Eigen::Index col = col_of_node[node(p)];
        if (col >= 0) out.emplace_back(row, col + col_component * ncols, scale * v);
      };
      if (pos == 0) {
        emit(1, 1.0 / h);
        emit(0, -1.0 / h);
      } else if (pos == n) {
        emit(n, 1.0 / h);
        emit(n - 1, -1.0 / h);
      } else {
        emit(pos + 1, 0.5 / h);
        emit(pos - 1, -0.5 / h);
      }
    }
  }
}

}  // namespace

ElasticitySolver::ElasticitySolver(const Grid& grid, double mu_ref, double lam_ref)
    : grid_(grid), factor_(std::make_unique<Factor>()) {
  std::vector<Eigen::Index> col_of_node(grid.nodes(), -1);
  for (int j = 1; j < grid.ny(); ++j)
    for (int i = 1; i < grid.nx(); ++i) {
      col_of_node[grid.index(i, j)] = static_cast<Eigen::Index>(interior_.size());
      interior_.push_back(static_cast<Eigen::Index>(grid.index(i, j)));
    }
  const Eigen::Index nn = static_cast<Eigen::Index>(grid.nodes());
  const Eigen::Index m = static_cast<Eigen::Index>(interior_.size());

  // rows: e11 block, e22 block, e12 block; columns: u1 block, u2 block
  std::vector<Eigen::Triplet<double>> trips;
  add_derivative(grid, 0, 0, 0, col_of_node, 1.0, trips);        // e11 = dx u1
  add_derivative(grid, 1, nn, 1, col_of_node, 1.0, trips);       // e22 = dy u2
  add_derivative(grid, 1, 2 * nn, 0, col_of_node, 0.5, trips);   // e12 = (dy u1 + dx u2)/2
  add_derivative(grid, 0, 2 * nn, 1, col_of_node, 0.5, trips);
  Eigen::SparseMatrix<double> gmat(3 * nn, 2 * m);
  gmat.setFromTriplets(trips.begin(), trips.end());

  // W-weighted constitutive block per node in (e11, e22, e12) with the factor 2 of e12.
  std::vector<Eigen::Triplet<double>> ct;
  const Eigen::VectorXd& w = grid.weights();
  for (Eigen::Index k = 0; k < nn; ++k) {
    const double a = w[k] * (2.0 * mu_ref + lam_ref);
    ct.emplace_back(k, k, a);
    ct.emplace_back(nn + k, nn + k, a);
    ct.emplace_back(k, nn + k, w[k] * lam_ref);
    ct.emplace_back(nn + k, k, w[k] * lam_ref);
    ct.emplace_back(2 * nn + k, 2 * nn + k, w[k] * 4.0 * mu_ref);
  }
  Eigen::SparseMatrix<double> cmat(3 * nn, 3 * nn);
  cmat.setFromTriplets(ct.begin(), ct.end());

  factor_->matrix = Eigen::SparseMatrix<double>(gmat.transpose()) * cmat * gmat;
  factor_->llt.compute(factor_->matrix);
  if (factor_->llt.info() != Eigen::Success)
    throw SolverError("elasticity: reference operator factorization failed");
}

ElasticitySolver::~ElasticitySolver() = default;
ElasticitySolver::ElasticitySolver(ElasticitySolver&&) noexcept = default;
ElasticitySolver& ElasticitySolver::operator=(ElasticitySolver&&) noexcept = default;

Eigen::VectorXd ElasticitySolver::gather(const VectorField& u) const {
  const Eigen::Index m = static_cast<Eigen::Index>(interior_.size());
  Eigen::VectorXd x(2 * m);
  for (Eigen::Index c = 0; c < m; ++c) {
    x[c] = u.u1[interior_[static_cast<std::size_t>(c)]];
    x[m + c] = u.u2[interior_[static_cast<std::size_t>(c)]];
  }
  return x;
}

VectorField ElasticitySolver::scatter(const Eigen::VectorXd& x) const {
  const Eigen::Index m = static_cast<Eigen::Index>(interior_.size());
  VectorField u(grid_);
  for (Eigen::Index c = 0; c < m; ++c) {
    u.u1[interior_[static_cast<std::size_t>(c)]] = x[c];
    u.u2[interior_[static_cast<std::size_t>(c)]] = x[m + c];
  }
  return u;
}

VectorField ElasticitySolver::apply(const Eigen::VectorXd& mu, const Eigen::VectorXd& lam,
                                    const VectorField& u) const {
  return stress_transpose(isotropic_stress(mu, lam, sym_grad(u)));
}

CgResult ElasticitySolver::solve(const Eigen::VectorXd& mu, const Eigen::VectorXd& lam,
                                 const VectorField& rhs, VectorField& u, double rel_tol) const {
  if (u.grid != grid_) u = VectorField(grid_);
  Eigen::VectorXd x = gather(u);
  auto op = [&](const Eigen::VectorXd& v) { return gather(apply(mu, lam, scatter(v))); };
  auto pre = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd { return factor_->llt.solve(r); };
  const CgResult res = pcg(op, pre, gather(rhs), x, rel_tol, cg_iteration_cap(static_cast<std::size_t>(x.size())),
                           "elasticity");
  u = scatter(x);
  return res;
}

Eigen::MatrixXd ElasticitySolver::reference_matrix_dense() const { return Eigen::MatrixXd(factor_->matrix); }

SymTensorField isotropic_stress(const Eigen::VectorXd& mu, const Eigen::VectorXd& lam,
                                const SymTensorField& eps) {
  SymTensorField s(eps.grid);
  const Eigen::VectorXd tr = lam.cwiseProduct(eps.e11 + eps.e22);
  s.e11 = 2.0 * mu.cwiseProduct(eps.e11) + tr;
  s.e22 = 2.0 * mu.cwiseProduct(eps.e22) + tr;
  s.e12 = 2.0 * mu.cwiseProduct(eps.e12);
  return s;
}

VectorField weighted_load(const VectorField& f) {
  VectorField out(f.grid);
  out.u1 = f.grid.weights().cwiseProduct(f.u1);
  out.u2 = f.grid.weights().cwiseProduct(f.u2);
  return out;
}

}  // namespace tumorctl
