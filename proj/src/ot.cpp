#include "brenier/ot.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace brenier {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + " contains non-finite entries");
  }
}

// Basis edge of the transportation tree: source i -- sink j, carrying `flow`
// units in the integer-scaled problem.
struct BasisEdge {
  int i;
  int j;
  std::int64_t flow;
};

// Exact transportation simplex on the bipartite graph of n sources and k
// sinks with uniform marginals 1/n and 1/k.
//
// Flows are integers: the problem is scaled by L = lcm(n,k) so that every
// supply is L/n and every demand L/k, then Charnes-perturbed
// (supply_i -> supply_i*M + 1, last demand += n, with M = n*k + n + 1).
// Every feasible basis of the perturbed problem is nondegenerate, so each
// pivot strictly decreases the cost and the method terminates; the final
// basis is feasible for the unperturbed marginals because M > n.
class TransportSimplex {
 public:
  explicit TransportSimplex(const Matrix& cost)
      : C_(cost),
        n_(static_cast<int>(cost.rows())),
        k_(static_cast<int>(cost.cols())),
        f_(n_),
        g_(k_) {
    const std::int64_t n = n_, k = k_;
    scale_ = n / std::gcd(n, k) * k;  // lcm
    const std::int64_t M = n * k + n + 1;
    supply_.assign(n_, (scale_ / n) * M + 1);
    demand_.assign(k_, (scale_ / k) * M);
    demand_.back() += n;
    edges_.reserve(n_ + k_ - 1);
    adj_.assign(n_ + k_, {});
  }

  void solve() {
    northwest_corner();
    const double eps_opt = 1e-11 * std::max(1.0, C_.cwiseAbs().maxCoeff());
    while (true) {
      compute_duals();
      int ei = -1, ej = -1;
      double best = -eps_opt;
      for (int i = 0; i < n_; ++i) {
        const double fi = f_[i];
        for (int j = 0; j < k_; ++j) {
          const double r = C_(i, j) - fi - g_[j];
          if (r < best) {
            best = r;
            ei = i;
            ej = j;
          }
        }
      }
      if (ei < 0) break;
      pivot(ei, ej);
    }
  }

  // Plan for the unperturbed marginals on the final tree, as weights in
  // B(n,k). Flows are recovered exactly by leaf elimination in int64.
  Matrix plan() const {
    std::vector<std::int64_t> residual(n_ + k_);
    for (int i = 0; i < n_; ++i) residual[i] = scale_ / n_;
    for (int j = 0; j < k_; ++j) residual[n_ + j] = scale_ / k_;

    std::vector<int> degree(n_ + k_, 0);
    std::vector<char> edge_done(edges_.size(), 0);
    for (const auto& e : edges_) {
      ++degree[e.i];
      ++degree[n_ + e.j];
    }
    std::vector<int> stack;
    for (int v = 0; v < n_ + k_; ++v) {
      if (degree[v] == 1) stack.push_back(v);
    }
    Matrix P = Matrix::Zero(n_, k_);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (degree[v] != 1) continue;
      for (const int eid : adj_[v]) {
        if (edge_done[eid]) continue;
        const auto& e = edges_[eid];
        const int other = (v == e.i) ? n_ + e.j : e.i;
        const std::int64_t x = residual[v];
        P(e.i, e.j) = static_cast<double>(x) / static_cast<double>(scale_);
        residual[v] = 0;
        residual[other] -= x;
        edge_done[eid] = 1;
        --degree[v];
        if (--degree[other] == 1) stack.push_back(other);
        break;
      }
    }
    return P;
  }

  Vector source_potentials() const { return f_; }
  Vector sink_potentials() const { return g_; }

 private:
  void northwest_corner() {
    std::vector<std::int64_t> s = supply_;
    std::vector<std::int64_t> d = demand_;
    int i = 0, j = 0;
    while (i < n_ && j < k_) {
      const std::int64_t x = std::min(s[i], d[j]);
      add_edge(i, j, x);
      s[i] -= x;
      d[j] -= x;
      // The perturbation rules out simultaneous exhaustion before the
      // final cell, so exactly n + k - 1 cells enter the basis.
      if (s[i] == 0 && i + 1 < n_) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void add_edge(int i, int j, std::int64_t flow) {
    const int id = static_cast<int>(edges_.size());
    edges_.push_back({i, j, flow});
    adj_[i].push_back(id);
    adj_[n_ + j].push_back(id);
  }

  void remove_edge(int eid) {
    const auto& e = edges_[eid];
    auto drop = [&](int v) {
      auto& lst = adj_[v];
      lst.erase(std::find(lst.begin(), lst.end(), eid));
    };
    drop(e.i);
    drop(n_ + e.j);
    if (eid != static_cast<int>(edges_.size()) - 1) {
      const int moved = static_cast<int>(edges_.size()) - 1;
      edges_[eid] = edges_[moved];
      for (int v : {edges_[eid].i, n_ + edges_[eid].j}) {
        for (auto& x : adj_[v]) {
          if (x == moved) x = eid;
        }
      }
    }
    edges_.pop_back();
  }

  // Potentials from the basis tree: f_i + g_j = C_ij on basic cells, f[0] = 0.
  void compute_duals() {
    std::vector<char> seen(n_ + k_, 0);
    std::vector<int> stack{0};
    f_[0] = 0.0;
    seen[0] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const int eid : adj_[v]) {
        const auto& e = edges_[eid];
        const int other = (v == e.i) ? n_ + e.j : e.i;
        if (seen[other]) continue;
        seen[other] = 1;
        if (other >= n_) {
          g_[other - n_] = C_(e.i, e.j) - f_[e.i];
        } else {
          f_[other] = C_(e.i, e.j) - g_[e.j];
        }
        stack.push_back(other);
      }
    }
  }

  void pivot(int ei, int ej) {
    // Tree path from source ei to sink n_+ej; with the entering edge it
    // closes the unique cycle.
    const int target = n_ + ej;
    std::vector<int> parent_edge(n_ + k_, -1);
    std::vector<char> seen(n_ + k_, 0);
    std::vector<int> stack{ei};
    seen[ei] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (v == target) break;
      for (const int eid : adj_[v]) {
        const auto& e = edges_[eid];
        const int other = (v == e.i) ? n_ + e.j : e.i;
        if (seen[other]) continue;
        seen[other] = 1;
        parent_edge[other] = eid;
        stack.push_back(other);
      }
    }

    // Walk back from the sink; edges alternate -, +, -, ... starting at the
    // edge incident to the entering sink.
    std::vector<int> path;
    for (int v = target; v != ei;) {
      const int eid = parent_edge[v];
      path.push_back(eid);
      const auto& e = edges_[eid];
      v = (v == e.i) ? n_ + e.j : e.i;
    }
    std::int64_t theta = std::numeric_limits<std::int64_t>::max();
    int leaving = -1;
    for (std::size_t t = 0; t < path.size(); t += 2) {
      if (edges_[path[t]].flow < theta) {
        theta = edges_[path[t]].flow;
        leaving = path[t];
      }
    }
    for (std::size_t t = 0; t < path.size(); ++t) {
      edges_[path[t]].flow += (t % 2 == 0) ? -theta : theta;
    }
    remove_edge(leaving);
    add_edge(ei, ej, theta);
  }

  const Matrix& C_;
  int n_;
  int k_;
  std::int64_t scale_;
  std::vector<std::int64_t> supply_;
  std::vector<std::int64_t> demand_;
  std::vector<BasisEdge> edges_;
  std::vector<std::vector<int>> adj_;
  Vector f_;
  Vector g_;
};

}  // namespace

CostMatrix squared_l2_cost(const Matrix& Z, const Matrix& U) {
  if (Z.cols() != U.cols()) {
    throw std::invalid_argument("squared_l2_cost: point dimensions differ (" +
                                std::to_string(Z.cols()) + " vs " + std::to_string(U.cols()) +
                                ")");
  }
  if (Z.cols() < 1 || Z.rows() < 1 || U.rows() < 1) {
    throw std::invalid_argument("squared_l2_cost: empty point set");
  }
  require_finite(Z, "squared_l2_cost: Z");
  require_finite(U, "squared_l2_cost: U");
  CostMatrix C;
  C.entries.resize(Z.rows(), U.rows());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    for (Eigen::Index j = 0; j < U.rows(); ++j) {
      C.entries(i, j) = (Z.row(i) - U.row(j)).squaredNorm();
    }
  }
  return C;
}

namespace {

// Moves the tree duals toward the relative interior of the optimal dual
// face. The basis duals put zero slack on every basic cell, including
// degenerate zero-flow ones, which ties Laguerre scores spuriously on
// clustered data. Support components of the plan may be shifted against
// each other without leaving the optimal face (component row and column
// masses balance, so the dual value is unchanged); centering each shift
// leaves genuine geometric ties at zero and everything else strictly slack.
void center_duals(const Matrix& C, const Matrix& P, Vector& f, Vector& g) {
  const Eigen::Index n = C.rows();
  const Eigen::Index k = C.cols();
  std::vector<int> parent(n + k);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (P(i, j) > 0.0) parent[find(static_cast<int>(i))] = find(static_cast<int>(n + j));
    }
  }
  bool single = true;
  for (Eigen::Index v = 1; v < n + k && single; ++v) {
    single = find(static_cast<int>(v)) == find(0);
  }
  if (single) return;

  std::vector<int> row_comp(n), col_comp(k);
  for (Eigen::Index i = 0; i < n; ++i) row_comp[i] = find(static_cast<int>(i));
  for (Eigen::Index j = 0; j < k; ++j) col_comp[j] = find(static_cast<int>(n + j));

  for (int pass = 0; pass < 4; ++pass) {
    for (Eigen::Index v = 0; v < n + k; ++v) {
      const int comp = find(static_cast<int>(v));
      if (comp != static_cast<int>(v)) continue;  // one shift per component
      double out_margin = std::numeric_limits<double>::infinity();
      double in_margin = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        const bool row_in = row_comp[i] == comp;
        for (Eigen::Index j = 0; j < k; ++j) {
          if (row_in == (col_comp[j] == comp)) continue;
          const double slack = C(i, j) - f[i] - g[j];
          if (row_in) {
            out_margin = std::min(out_margin, slack);
          } else {
            in_margin = std::min(in_margin, slack);
          }
        }
      }
      const double delta = 0.5 * (out_margin - in_margin);
      if (delta == 0.0 || !std::isfinite(delta)) continue;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (row_comp[i] == comp) f[i] += delta;
      }
      for (Eigen::Index j = 0; j < k; ++j) {
        if (col_comp[j] == comp) g[j] -= delta;
      }
    }
  }
}

}  // namespace

OtSolution solve_discrete_ot(const CostMatrix& C) {
  if (C.rows() < 1 || C.cols() < 1) {
    throw std::invalid_argument("solve_discrete_ot: empty cost matrix");
  }
  require_finite(C.entries, "solve_discrete_ot: cost");

  TransportSimplex simplex(C.entries);
  simplex.solve();

  OtSolution sol;
  sol.plan.weights = simplex.plan();
  sol.duals.f = simplex.source_potentials();
  sol.duals.g = simplex.sink_potentials();
  center_duals(C.entries, sol.plan.weights, sol.duals.f, sol.duals.g);
  // Duals are unique up to a shift; pin g[0] = 0 for reproducibility.
  const double shift = sol.duals.g[0];
  sol.duals.g.array() -= shift;
  sol.duals.f.array() += shift;

  sol.primal_cost = (sol.plan.weights.array() * C.entries.array()).sum();
  sol.dual_value = sol.duals.f.mean() + sol.duals.g.mean();
  return sol;
}

MongeResult brute_force_monge(const CostMatrix& C) {
  const Eigen::Index n = C.rows();
  if (n != C.cols()) {
    throw std::invalid_argument("brute_force_monge: cost matrix must be square");
  }
  if (n > 9) {
    throw std::invalid_argument("brute_force_monge: n > 9 (factorial enumeration guard)");
  }
  require_finite(C.entries, "brute_force_monge: cost");

  std::vector<int> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0);
  std::vector<int> best = sigma;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) cost += C.entries(i, sigma[i]);
    if (cost < best_cost) {  // strict: keeps the lexicographically first optimum
      best_cost = cost;
      best = sigma;
    }
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return {best, best_cost / static_cast<double>(n)};
}

TransportPlan recover_vertex_plan(const OtSolution& solution) {
  const Eigen::Index n = solution.plan.rows();
  const Eigen::Index k = solution.plan.cols();
  if (n != k) {
    throw std::invalid_argument("recover_vertex_plan: requires a square plan (n = k)");
  }
  constexpr double support_tol = 1e-12;
  const Matrix& P = solution.plan.weights;

  bool already_vertex = true;
  for (Eigen::Index i = 0; i < n && already_vertex; ++i) {
    int positives = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (P(i, j) > support_tol) ++positives;
    }
    if (positives != 1) already_vertex = false;
  }
  if (already_vertex) return solution.plan;

  // Birkhoff: the support of a coupling in B(n,n) contains a perfect
  // matching, and any matching in the support of an optimal plan is itself
  // optimal by complementary slackness. Kuhn's augmenting paths, rows and
  // columns scanned in increasing order for determinism.
  std::vector<int> match_col(k, -1);
  std::vector<char> visited(k);
  std::function<bool(int)> augment = [&](int row) -> bool {
    for (int j = 0; j < k; ++j) {
      if (P(row, j) <= support_tol || visited[j]) continue;
      visited[j] = 1;
      if (match_col[j] < 0 || augment(match_col[j])) {
        match_col[j] = row;
        return true;
      }
    }
    return false;
  };
  for (int i = 0; i < n; ++i) {
    std::fill(visited.begin(), visited.end(), 0);
    if (!augment(i)) {
      throw std::runtime_error("recover_vertex_plan: support admits no perfect matching");
    }
  }

  TransportPlan vertex;
  vertex.weights = Matrix::Zero(n, k);
  for (int j = 0; j < k; ++j) {
    vertex.weights(match_col[j], j) = 1.0 / static_cast<double>(n);
  }
  return vertex;
}

}  // namespace brenier
