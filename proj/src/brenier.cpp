#include "brenier/brenier.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace brenier {

std::string to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::response_subsample: return "response_subsample";
    case InitStrategy::random_simplex: return "random_simplex";
    case InitStrategy::provided: return "provided";
  }
  return "response_subsample";
}

std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged_objective: return "converged-objective";
    case FitStatus::converged_step: return "converged-step";
    case FitStatus::max_iters: return "max-iters";
    case FitStatus::stalled_at_kink: return "stalled-at-kink";
  }
  return "max-iters";
}

InitStrategy init_strategy_from_string(const std::string& s) {
  if (s == "response_subsample") return InitStrategy::response_subsample;
  if (s == "random_simplex") return InitStrategy::random_simplex;
  if (s == "provided") return InitStrategy::provided;
  throw std::invalid_argument("unknown init strategy: " + s);
}

FitStatus fit_status_from_string(const std::string& s) {
  if (s == "converged-objective") return FitStatus::converged_objective;
  if (s == "converged-step") return FitStatus::converged_step;
  if (s == "max-iters") return FitStatus::max_iters;
  if (s == "stalled-at-kink") return FitStatus::stalled_at_kink;
  throw std::invalid_argument("unknown fit status: " + s);
}

void FitConfig::validate() const {
  if (k < 1) throw std::invalid_argument("FitConfig: k must be >= 1");
  if (max_outer_iters < 1) throw std::invalid_argument("FitConfig: max_outer_iters must be >= 1");
  if (!(fd_epsilon > 0)) throw std::invalid_argument("FitConfig: fd_epsilon must be > 0");
  if (!(step_tolerance > 0)) throw std::invalid_argument("FitConfig: step_tolerance must be > 0");
  if (!(objective_tolerance > 0)) {
    throw std::invalid_argument("FitConfig: objective_tolerance must be > 0");
  }
}

void LabeledDataset::validate() const {
  if (Z.rows() != Y.rows()) {
    throw std::invalid_argument("LabeledDataset: Z and Y row counts differ");
  }
  if (Z.rows() < 1) throw std::invalid_argument("LabeledDataset: empty data");
  if (Z.cols() != Y.cols()) {
    throw std::invalid_argument(
        "LabeledDataset: input and response dimensions must match (inputs " +
        std::to_string(Z.cols()) + ", responses " + std::to_string(Y.cols()) + ")");
  }
  if (!Z.allFinite() || !Y.allFinite()) {
    throw std::invalid_argument("LabeledDataset: non-finite values in data");
  }
  if (response_kind == ResponseKind::one_hot) {
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
      int ones = 0;
      for (Eigen::Index c = 0; c < Y.cols(); ++c) {
        if (Y(i, c) == 1.0) {
          ++ones;
        } else if (Y(i, c) != 0.0) {
          throw std::invalid_argument("LabeledDataset: row " + std::to_string(i) +
                                      " is not one-hot");
        }
      }
      if (ones != 1) {
        throw std::invalid_argument("LabeledDataset: row " + std::to_string(i) +
                                    " is not one-hot");
      }
    }
  }
}

Vector project_row_to_simplex(const Vector& v) {
  if (!v.allFinite()) {
    throw std::invalid_argument("project_row_to_simplex: non-finite input");
  }
  const Eigen::Index d = v.size();
  std::vector<double> sorted(v.data(), v.data() + d);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) {
      tau = candidate;
    }
  }
  return (v.array() - tau).cwiseMax(0.0);
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vector uniform_simplex(std::mt19937_64& rng, Eigen::Index d) {
  Vector e(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    e[c] = -std::log(1.0 - uniform01(rng));
  }
  return e / e.sum();
}

std::vector<Eigen::Index> distinct_row_indices(const Matrix& Y) {
  std::vector<Eigen::Index> idx(Y.rows());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
      if (Y(a, c) != Y(b, c)) return Y(a, c) < Y(b, c);
    }
    return a < b;
  });
  std::vector<Eigen::Index> distinct;
  for (std::size_t t = 0; t < idx.size(); ++t) {
    if (t == 0 || Y.row(idx[t]) != Y.row(idx[t - 1])) distinct.push_back(idx[t]);
  }
  return distinct;
}

}  // namespace

QuantileSet initialize_quantiles(const LabeledDataset& data, const FitConfig& config) {
  const Eigen::Index d = data.Y.cols();
  const Eigen::Index k = config.k;
  QuantileSet U;
  U.simplex_constrained = config.simplex_constrained;
  if (config.init_strategy == InitStrategy::provided) {
    if (config.initial_quantiles.rows() != k || config.initial_quantiles.cols() != d) {
      throw std::invalid_argument("fit: provided initial quantiles have wrong shape");
    }
    U.points = config.initial_quantiles;
    if (U.simplex_constrained) {
      for (Eigen::Index j = 0; j < k; ++j) {
        U.points.row(j) = project_row_to_simplex(U.points.row(j).transpose()).transpose();
      }
    }
    return U;
  }

  std::mt19937_64 rng(config.seed);
  Vector lo = data.Y.colwise().minCoeff().transpose();
  Vector hi = data.Y.colwise().maxCoeff().transpose();
  Vector range = (hi - lo).cwiseMax(1e-3);

  U.points.resize(k, d);
  if (config.init_strategy == InitStrategy::random_simplex) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (U.simplex_constrained) {
        U.points.row(j) = uniform_simplex(rng, d).transpose();
      } else {
        for (Eigen::Index c = 0; c < d; ++c) {
          U.points(j, c) = lo[c] + uniform01(rng) * (hi[c] - lo[c]);
        }
      }
    }
    return U;
  }

  // response_subsample: rows drawn from the distinct responses (without
  // replacement while they last) plus jitter to keep duplicates apart.
  const std::vector<Eigen::Index> distinct = distinct_row_indices(data.Y);
  const std::size_t m = distinct.size();
  std::vector<Eigen::Index> pool = distinct;
  for (std::size_t t = m - 1; t > 0; --t) {  // Fisher-Yates, fixed for reproducibility
    std::swap(pool[t], pool[rng() % (t + 1)]);
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Index src =
        (static_cast<std::size_t>(j) < m) ? pool[j] : distinct[rng() % m];
    const Vector row = data.Y.row(src).transpose();
    if (U.simplex_constrained) {
      const double gamma = 0.1;
      U.points.row(j) = ((1.0 - gamma) * row + gamma * uniform_simplex(rng, d)).transpose();
    } else {
      Vector jitter(d);
      for (Eigen::Index c = 0; c < d; ++c) {
        jitter[c] = 0.02 * range[c] * (2.0 * uniform01(rng) - 1.0);
      }
      U.points.row(j) = (row + jitter).transpose();
    }
  }
  return U;
}

namespace {

QuantileSet project_quantiles(const QuantileSet& U) {
  if (!U.simplex_constrained) return U;
  QuantileSet out = U;
  for (Eigen::Index j = 0; j < out.points.rows(); ++j) {
    out.points.row(j) = project_row_to_simplex(out.points.row(j).transpose()).transpose();
  }
  return out;
}

// Exact minimizer of the outer quadratic for the current (fixed) plan:
// n (P^T P) U = P^T Y, rows projected back when constrained. Used as an
// additional step candidate; the piecewise-quadratic objective makes this
// the strongest move available between plan switches.
bool fixed_plan_minimizer(const QuantileSet& U, const LabeledDataset& data,
                          const TransportPlan& plan, QuantileSet& out) {
  const Matrix& P = plan.weights;
  const double n = static_cast<double>(data.size());
  const Matrix gram = n * (P.transpose() * P);
  const Matrix rhs = P.transpose() * data.Y;
  const Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return false;
  Matrix solved = ldlt.solve(rhs);
  if (!solved.allFinite()) return false;
  out = U;
  out.points = std::move(solved);
  out = project_quantiles(out);
  return true;
}

// Single-linkage clusters of quantiles at radius rho, each group moved to
// the plan-weighted mean of its matched responses. Column masses are
// uniform, so the group mean is the fixed-plan optimum of a group-constant
// quantile set whenever plan columns separate the groups.
QuantileSet grouped_quantile_means(const QuantileSet& U, const LabeledDataset& data,
                                   const TransportPlan& plan, double rho) {
  const Eigen::Index k = U.points.rows();
  std::vector<Eigen::Index> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<Eigen::Index(Eigen::Index)> find = [&](Eigen::Index v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) {
      if ((U.points.row(a) - U.points.row(b)).norm() <= rho) {
        parent[find(a)] = find(b);
      }
    }
  }

  QuantileSet out = U;
  std::vector<char> handled(k, 0);
  for (Eigen::Index a = 0; a < k; ++a) {
    if (handled[a]) continue;
    const Eigen::Index root = find(a);
    std::vector<Eigen::Index> group;
    for (Eigen::Index b = a; b < k; ++b) {
      if (!handled[b] && find(b) == root) {
        group.push_back(b);
        handled[b] = 1;
      }
    }
    if (group.size() < 2) continue;
    Vector mean = Vector::Zero(U.dim());
    double mass = 0.0;
    for (const Eigen::Index j : group) {
      mean += (plan.weights.col(j).transpose() * data.Y).transpose();
      mass += plan.weights.col(j).sum();
    }
    if (mass <= 0.0) continue;
    mean /= mass;
    for (const Eigen::Index j : group) out.points.row(j) = mean.transpose();
  }
  return out;
}

}  // namespace

std::pair<double, OtSolution> outer_objective(const QuantileSet& U, const LabeledDataset& data) {
  if (U.dim() != data.Z.cols()) {
    throw std::invalid_argument("outer_objective: quantile dimension does not match data");
  }
  const CostMatrix C = squared_l2_cost(data.Z, U.points);
  OtSolution sol = solve_discrete_ot(C);
  const double n = static_cast<double>(data.Z.rows());
  const Matrix fitted = n * (sol.plan.weights * U.points);
  const double value = (data.Y - fitted).squaredNorm() / n;
  return {value, std::move(sol)};
}

Matrix fd_gradient(const LabeledDataset& data, const QuantileSet& U, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("fd_gradient: eps must be > 0");
  Matrix G(U.points.rows(), U.points.cols());
  QuantileSet probe = U;
  for (Eigen::Index j = 0; j < U.points.rows(); ++j) {
    for (Eigen::Index l = 0; l < U.points.cols(); ++l) {
      const double saved = probe.points(j, l);
      probe.points(j, l) = saved + eps;
      const double up = outer_objective(probe, data).first;
      probe.points(j, l) = saved - eps;
      const double down = outer_objective(probe, data).first;
      probe.points(j, l) = saved;
      G(j, l) = (up - down) / (2.0 * eps);
    }
  }
  return G;
}

BrenierModel fit(const LabeledDataset& data, const FitConfig& config) {
  config.validate();
  data.validate();
  const Eigen::Index n = data.size();
  const Eigen::Index d = data.Y.cols();
  if (config.k > n) {
    throw std::invalid_argument("fit: k (" + std::to_string(config.k) +
                                ") exceeds the number of samples (" + std::to_string(n) + ")");
  }
  if (config.k < d) {
    std::cerr << "warning: k = " << config.k << " is below the response dimension " << d
              << "; predictions may be too coarse\n";
  }

  QuantileSet U = initialize_quantiles(data, config);
  auto [objective, solution] = outer_objective(U, data);

  FitStatus status = FitStatus::max_iters;
  int iterations = 0;
  constexpr double alpha_floor = 1e-8;
  constexpr double alpha_cap = 1e6;
  double alpha_init = 1.0;

  const double response_scale = std::max(
      1e-3, (data.Y.colwise().maxCoeff() - data.Y.colwise().minCoeff()).maxCoeff());

  for (int iter = 0; iter < config.max_outer_iters; ++iter) {
    const Matrix G = fd_gradient(data, U, config.fd_epsilon);

    bool accepted = false;
    bool accepted_via_line_search = false;
    QuantileSet candidate = U;
    double candidate_objective = objective;
    OtSolution candidate_solution;

    auto consider = [&](QuantileSet trial) {
      auto [value, sol] = outer_objective(trial, data);
      if (value <= objective && (!accepted || value < candidate_objective)) {
        candidate = std::move(trial);
        candidate_objective = value;
        candidate_solution = std::move(sol);
        accepted = true;
        return true;
      }
      return false;
    };

    double alpha = alpha_init;
    while (alpha >= alpha_floor) {
      QuantileSet trial = U;
      trial.points -= alpha * G;
      if (consider(project_quantiles(trial))) {
        accepted_via_line_search = true;
        break;
      }
      alpha *= 0.5;
    }

    // The fixed-plan minimizer competes with the line-search result and
    // rescues iterations where every gradient step crosses a kink; damping
    // along its direction guards against projection overshoot.
    QuantileSet exact;
    if (fixed_plan_minimizer(U, data, solution.plan, exact)) {
      const Matrix direction = exact.points - U.points;
      for (double t = 1.0; t >= 1.0 / 64.0; t *= 0.5) {
        QuantileSet trial = U;
        trial.points += t * direction;
        if (consider(project_quantiles(trial))) break;
      }
    }

    // Pooling candidates: near-coincident quantiles merged (single linkage
    // at a ladder of radii) and moved to the mean of their matched
    // responses. Gradient steps only approach coincident bin levels
    // asymptotically; these moves let them collapse outright. Tried only
    // once the regular steps are exhausted or below the stopping threshold,
    // so they rescue the endgame without steering the early trajectory.
    if (!accepted || objective - candidate_objective <= config.objective_tolerance) {
      for (const double rho : {1e-4, 1e-3, 1e-2, 5e-2}) {
        QuantileSet trial = grouped_quantile_means(U, data, solution.plan, rho * response_scale);
        if (trial.points == U.points) continue;
        consider(project_quantiles(trial));
      }
    }

    if (!accepted) {
      status = FitStatus::stalled_at_kink;
      break;
    }

    const double decrease = objective - candidate_objective;
    const double step_norm = (candidate.points - U.points).norm();
    U = std::move(candidate);
    objective = candidate_objective;
    solution = std::move(candidate_solution);
    iterations = iter + 1;
    if (accepted_via_line_search) {
      alpha_init = std::min(alpha_cap, 2.0 * alpha);
    }

    if (decrease <= config.objective_tolerance) {
      status = FitStatus::converged_objective;
      break;
    }
    if (step_norm <= config.step_tolerance) {
      status = FitStatus::converged_step;
      break;
    }
  }

  BrenierModel model;
  model.quantiles = U;
  model.dual_g = solution.duals.g;
  model.train_objective = objective;
  model.iterations_used = iterations;
  model.status = status;
  model.config = config;
  model.input_dim = static_cast<int>(data.Z.cols());
  return model;
}

Matrix barycentric_map(const TransportPlan& plan, const QuantileSet& U) {
  Matrix out(plan.rows(), U.dim());
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    Eigen::Index support = -1;
    int positives = 0;
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
      if (plan.weights(i, j) > 0.0) {
        support = j;
        ++positives;
      }
    }
    if (positives == 1) {
      out.row(i) = U.points.row(support);  // vertex row: exactly one quantile
    } else {
      const double mass = plan.weights.row(i).sum();
      out.row(i) = (plan.weights.row(i) * U.points) / mass;
    }
  }
  return out;
}

Matrix barycentric_predict_train(const BrenierModel& model, const LabeledDataset& data) {
  if (data.Z.cols() != model.input_dim) {
    throw std::invalid_argument("barycentric_predict_train: dimension mismatch");
  }
  const CostMatrix C = squared_l2_cost(data.Z, model.quantiles.points);
  const OtSolution sol = solve_discrete_ot(C);
  return barycentric_map(sol.plan, model.quantiles);
}

LaguerrePrediction laguerre_assign(const QuantileSet& U, const Vector& g, const Vector& z) {
  if (z.size() != U.dim()) {
    throw std::invalid_argument("laguerre_assign: query dimension mismatch");
  }
  int best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < U.points.rows(); ++j) {
    const double score = (z.transpose() - U.points.row(j)).squaredNorm() - g[j];
    if (score < best_score) {
      best_score = score;
      best = static_cast<int>(j);
    }
  }
  return {U.points.row(best).transpose(), best};
}

LaguerrePrediction laguerre_predict(const BrenierModel& model, const Vector& z) {
  return laguerre_assign(model.quantiles, model.dual_g, z);
}

Matrix laguerre_predict_rows(const BrenierModel& model, const Matrix& Z) {
  Matrix out(Z.rows(), model.quantiles.dim());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    out.row(i) = laguerre_predict(model, Z.row(i).transpose()).u.transpose();
  }
  return out;
}

double brenier_potential(const BrenierModel& model, const Vector& z) {
  const Matrix& U = model.quantiles.points;
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < U.rows(); ++j) {
    const double value =
        z.dot(U.row(j).transpose()) - 0.5 * U.row(j).squaredNorm() + 0.5 * model.dual_g[j];
    best = std::max(best, value);
  }
  return best;
}

}  // namespace brenier
