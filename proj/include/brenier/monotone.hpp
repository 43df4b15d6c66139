#pragma once

#include <optional>
#include <tuple>
#include <vector>

#include "brenier/ot.hpp"

namespace brenier {

/// A finite relation {(z_i, u_i)} in R^d x R^d, rows paired by index.
struct GraphSample {
  Matrix inputs;   // n x d
  Matrix outputs;  // n x d
};

struct CycleReport {
  bool holds = true;
  // Pair indices of the first violating cycle, in cycle order.
  std::optional<std::vector<int>> witness;
  double margin = 0.0;  // sum c(z_i,u_i) - sum c(z_i,u_{i+1}) of the witness
};

struct IopReport {
  bool holds = true;
  // (evaluation point index, coordinate i, coordinate j)
  std::optional<std::tuple<int, int, int>> witness;
};

/// Checks the cyclic-monotonicity inequality
///   sum_i c(z_i, u_i) <= sum_i c(z_i, u_{i+1})     (u_{m+1} = u_1)
/// with the squared-L2 cost, over every ordered cycle of length
/// 2..max_cycle_len drawn from the graph. Cycles are enumerated with the
/// smallest pair index first (rotations are equivalent), both orientations.
/// Returns the first violation whose margin exceeds tol.
///
/// Passing is necessary, not sufficient, for graphs larger than
/// max_cycle_len; for graphs of <= 5 pairs with max_cycle_len >= size the
/// check is complete. Guard: graphs of more than 30 pairs only admit
/// max_cycle_len <= 3.
CycleReport check_cyclic_monotone(const GraphSample& graph, int max_cycle_len = 4,
                                  double tol = 1e-8);

/// Verifies (x_i - x_j)(f_i(x) - f_j(x)) >= -tol for every evaluation point
/// (row of inputs, with outputs the value of f there) and coordinate pair.
IopReport check_weak_iop(const Matrix& inputs, const Matrix& outputs, double tol = 1e-8);

}  // namespace brenier
