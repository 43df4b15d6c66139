#include "brenier/pav.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace brenier {

Vector pav_fit(const Vector& z, const Vector& y) {
  if (z.size() != y.size()) {
    throw std::invalid_argument("pav_fit: z and y lengths differ");
  }
  if (z.size() < 1) {
    throw std::invalid_argument("pav_fit: empty input");
  }
  if (!z.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("pav_fit: non-finite input");
  }
  const Eigen::Index n = z.size();

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return z[a] < z[b]; });

  // Collapse equal z into weighted points (pre-averaged responses).
  struct Block {
    double mean;
    double weight;
    Eigen::Index last;  // index into `groups` of the last group in the block
  };
  std::vector<double> group_mean;
  std::vector<double> group_weight;
  std::vector<Eigen::Index> group_of(n);  // original index -> group
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index idx = order[t];
    if (t > 0 && z[idx] == z[order[t - 1]]) {
      const auto g = group_mean.size() - 1;
      group_mean[g] += (y[idx] - group_mean[g]) / (group_weight[g] + 1.0);
      group_weight[g] += 1.0;
    } else {
      group_mean.push_back(y[idx]);
      group_weight.push_back(1.0);
    }
    group_of[idx] = static_cast<Eigen::Index>(group_mean.size()) - 1;
  }

  // Stack-based PAV on the weighted groups.
  std::vector<Block> stack;
  for (std::size_t g = 0; g < group_mean.size(); ++g) {
    Block b{group_mean[g], group_weight[g], static_cast<Eigen::Index>(g)};
    while (!stack.empty() && stack.back().mean > b.mean) {
      const Block& top = stack.back();
      b.mean = (top.mean * top.weight + b.mean * b.weight) / (top.weight + b.weight);
      b.weight += top.weight;
      stack.pop_back();
    }
    stack.push_back(b);
  }

  std::vector<double> fitted(group_mean.size());
  Eigen::Index g = 0;
  for (const Block& b : stack) {
    for (; g <= b.last; ++g) fitted[g] = b.mean;
  }

  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = fitted[group_of[i]];
  return out;
}

}  // namespace brenier
