#pragma once

#include <Eigen/Dense>
#include <vector>

namespace brenier {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Pairwise transport costs between n source and k target points,
/// in squared-Euclidean units. Entries are finite and nonnegative.
struct CostMatrix {
  Matrix entries;  // n x k

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
};

/// A coupling in the scaled Birkhoff polytope B(n,k): nonnegative weights
/// with every row summing to 1/n and every column to 1/k.
struct TransportPlan {
  Matrix weights;  // n x k

  Eigen::Index rows() const { return weights.rows(); }
  Eigen::Index cols() const { return weights.cols(); }
  Vector row_marginal() const { return weights.rowwise().sum(); }
  Vector col_marginal() const { return weights.colwise().sum().transpose(); }
};

/// Kantorovich dual potentials: f on sources, g on targets, in cost units.
/// Feasible (f_i + g_j <= C_ij) and complementary-slack against the plan.
/// Normalized so that g[0] = 0.
struct DualPotentials {
  Vector f;  // length n
  Vector g;  // length k
};

struct OtSolution {
  TransportPlan plan;
  DualPotentials duals;
  double primal_cost = 0.0;
  double dual_value = 0.0;
};

struct MongeResult {
  std::vector<int> permutation;  // sigma: source i -> target sigma[i]
  double cost = 0.0;             // (1/n) * sum_i C(i, sigma[i])
};

/// C_ij = ||Z.row(i) - U.row(j)||^2. Throws on column-count mismatch or
/// non-finite input.
CostMatrix squared_l2_cost(const Matrix& Z, const Matrix& U);

/// Exact solver for min <C,P> over B(n,k) with uniform marginals
/// (transportation simplex; no entropic smoothing). The returned plan is a
/// basic solution, so for n = k it is 1/n times a permutation matrix.
/// Throws on non-finite costs; degenerate instances are handled, not errors.
OtSolution solve_discrete_ot(const CostMatrix& C);

/// Exhaustive Monge solver for square instances, n <= 9. Ties broken by the
/// lexicographically smallest permutation.
MongeResult brute_force_monge(const CostMatrix& C);

/// For a square solution, return an optimal vertex plan (1/n times a
/// permutation matrix) with the same cost. Plans already at a vertex are
/// returned unchanged; mixed plans are rounded by extracting a perfect
/// matching inside the support, which lies on the optimal face.
TransportPlan recover_vertex_plan(const OtSolution& solution);

}  // namespace brenier
