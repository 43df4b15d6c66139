#include "brenier/monotone.hpp"

#include <algorithm>
#include <stdexcept>

namespace brenier {

namespace {

// Depth-first enumeration of ordered cycles with the smallest member first;
// rotations of a cycle evaluate the same sums, reflections do not.
class CycleEnumerator {
 public:
  CycleEnumerator(const Matrix& cross_cost, int max_len, double tol)
      : c_(cross_cost), n_(static_cast<int>(cross_cost.rows())), max_len_(max_len), tol_(tol) {}

  CycleReport run() {
    CycleReport report;
    std::vector<int> cycle;
    std::vector<char> used(n_, 0);
    for (int start = 0; start < n_ && report.holds; ++start) {
      cycle.assign(1, start);
      used[start] = 1;
      extend(cycle, used, start, report);
      used[start] = 0;
    }
    return report;
  }

 private:
  void extend(std::vector<int>& cycle, std::vector<char>& used, int start, CycleReport& report) {
    if (cycle.size() >= 2 && violates(cycle, report)) return;
    if (static_cast<int>(cycle.size()) == max_len_) return;
    for (int next = start + 1; next < n_ && report.holds; ++next) {
      if (used[next]) continue;
      used[next] = 1;
      cycle.push_back(next);
      extend(cycle, used, start, report);
      cycle.pop_back();
      used[next] = 0;
    }
  }

  bool violates(const std::vector<int>& cycle, CycleReport& report) {
    double self = 0.0, shifted = 0.0;
    const std::size_t m = cycle.size();
    for (std::size_t t = 0; t < m; ++t) {
      self += c_(cycle[t], cycle[t]);
      shifted += c_(cycle[t], cycle[(t + 1) % m]);
    }
    const double margin = self - shifted;
    if (margin > tol_) {
      report.holds = false;
      report.witness = cycle;
      report.margin = margin;
      return true;
    }
    return false;
  }

  const Matrix& c_;
  int n_;
  int max_len_;
  double tol_;
};

}  // namespace

CycleReport check_cyclic_monotone(const GraphSample& graph, int max_cycle_len, double tol) {
  if (graph.inputs.rows() != graph.outputs.rows()) {
    throw std::invalid_argument("check_cyclic_monotone: pair counts differ");
  }
  if (graph.inputs.cols() != graph.outputs.cols()) {
    throw std::invalid_argument("check_cyclic_monotone: input/output dimensions differ");
  }
  if (max_cycle_len < 2) {
    throw std::invalid_argument("check_cyclic_monotone: max_cycle_len must be >= 2");
  }
  const int n = static_cast<int>(graph.inputs.rows());
  if (n > 30 && max_cycle_len > 3) {
    throw std::invalid_argument(
        "check_cyclic_monotone: graphs of more than 30 pairs only admit max_cycle_len <= 3");
  }
  if (n == 0) return {};

  // All pairwise squared-L2 costs c(z_a, u_b); cycle sums are then lookups.
  Matrix cross(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      cross(a, b) = (graph.inputs.row(a) - graph.outputs.row(b)).squaredNorm();
    }
  }
  return CycleEnumerator(cross, std::min(max_cycle_len, n), tol).run();
}

IopReport check_weak_iop(const Matrix& inputs, const Matrix& outputs, double tol) {
  if (inputs.rows() != outputs.rows() || inputs.cols() != outputs.cols()) {
    throw std::invalid_argument("check_weak_iop: inputs and outputs must have equal shape");
  }
  const Eigen::Index n = inputs.rows();
  const Eigen::Index d = inputs.cols();
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j) {
        const double prod =
            (inputs(p, i) - inputs(p, j)) * (outputs(p, i) - outputs(p, j));
        if (prod < -tol) {
          IopReport report;
          report.holds = false;
          report.witness = {static_cast<int>(p), static_cast<int>(i), static_cast<int>(j)};
          return report;
        }
      }
    }
  }
  return {};
}

}  // namespace brenier
