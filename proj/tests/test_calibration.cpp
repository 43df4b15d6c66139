#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "brenier/calibration.hpp"
#include "test_util.hpp"

using namespace brenier;

namespace {

struct Synthetic {
  Matrix probs;
  Matrix labels;
};

Matrix sharpen(const Matrix& P, double temperature) {
  Matrix out(P.rows(), P.cols());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    const Eigen::ArrayXd powered = P.row(i).array().pow(temperature);
    out.row(i) = (powered / powered.sum()).matrix();
  }
  return out;
}

// Cluster generator: scores take one of the given rows, labels sampled from
// the matching true categorical. Clusters round-robin when balanced.
Synthetic sample_clusters(std::mt19937_64& rng, const Matrix& true_probs, const Matrix& scores,
                          int n, bool balanced = false) {
  const Eigen::Index d = true_probs.cols();
  Synthetic out;
  out.probs.resize(n, d);
  out.labels = Matrix::Zero(n, d);
  for (int i = 0; i < n; ++i) {
    const Eigen::Index c = balanced
                               ? static_cast<Eigen::Index>(i % true_probs.rows())
                               : static_cast<Eigen::Index>(rng() % true_probs.rows());
    out.probs.row(i) = scores.row(c);
    const double r = test_util::uniform01(rng);
    double acc = 0.0;
    Eigen::Index label = d - 1;
    for (Eigen::Index j = 0; j < d; ++j) {
      acc += true_probs(c, j);
      if (r < acc) {
        label = j;
        break;
      }
    }
    out.labels(i, label) = 1.0;
  }
  return out;
}

Matrix cluster_rows_3class() {
  Matrix P(6, 3);
  P << 0.60, 0.30, 0.10,
       0.10, 0.60, 0.30,
       0.30, 0.10, 0.60,
       0.45, 0.45, 0.10,
       0.10, 0.45, 0.45,
       1.0 / 3, 1.0 / 3, 1.0 / 3;
  return P;
}

// Independent scalar binary ECE used as an oracle for classwise_ce at d = 2.
double scalar_binary_ece(const Vector& scores, const Vector& outcomes, int bins) {
  std::vector<double> count(bins, 0.0), sum_s(bins, 0.0), sum_y(bins, 0.0);
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    int b = static_cast<int>(std::ceil(scores[i] * bins)) - 1;
    b = std::min(bins - 1, std::max(0, b));
    count[b] += 1.0;
    sum_s[b] += scores[i];
    sum_y[b] += outcomes[i];
  }
  double total = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0.0) continue;
    total += count[b] / static_cast<double>(scores.size()) *
             std::abs(sum_y[b] / count[b] - sum_s[b] / count[b]);
  }
  return total;
}

}  // namespace

TEST_CASE("l1 calibration error is zero for exact one-hot predictions") {
  Matrix probs(3, 3), labels(3, 3);
  probs << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  labels = probs;
  CHECK(l1_calibration_error(probs, labels) == 0.0);
}

TEST_CASE("l1 calibration error matches the hand-computed one-bin value") {
  Matrix probs(2, 2), labels(2, 2);
  probs << 0.6, 0.4, 0.6, 0.4;
  labels << 1, 0, 0, 1;
  CHECK(l1_calibration_error(probs, labels) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("l1 calibration error is invariant to sample order") {
  std::mt19937_64 rng(211);
  const Matrix P = cluster_rows_3class();
  const Synthetic data = sample_clusters(rng, P, P, 80);
  const double base = l1_calibration_error(data.probs, data.labels);

  Matrix probs = data.probs, labels = data.labels;
  for (Eigen::Index i = 0; i < probs.rows() / 2; ++i) {
    probs.row(i).swap(probs.row(probs.rows() - 1 - i));
    labels.row(i).swap(labels.row(labels.rows() - 1 - i));
  }
  CHECK(l1_calibration_error(probs, labels) == base);
}

TEST_CASE("l1 error vanishes whenever bin label means equal bin prob means") {
  // Two clusters, each internally balanced so the label mean equals the
  // (constant) prediction inside its bin.
  Matrix probs(4, 2), labels(4, 2);
  probs << 0.75, 0.25, 0.75, 0.25, 0.75, 0.25, 0.75, 0.25;
  labels << 1, 0, 1, 0, 1, 0, 0, 1;
  // 3 of 4 labels hit class 0: mean (0.75, 0.25) matches the scores exactly.
  CHECK(l1_calibration_error(probs, labels) == 0.0);
}

TEST_CASE("classwise error: perfect predictions and the one-bin case") {
  Matrix probs(2, 2), labels(2, 2);
  probs << 1, 0, 0, 1;
  labels = probs;
  CHECK(classwise_ce(probs, labels, 15) == 0.0);

  Matrix scores(2, 1), outcomes(2, 1);
  scores << 0.7, 0.7;
  outcomes << 1, 0;
  CHECK(classwise_ce(scores, outcomes, 15) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("classwise error agrees with the scalar binary oracle at d = 2") {
  std::mt19937_64 rng(223);
  const int n = 200;
  Matrix probs(n, 2), labels = Matrix::Zero(n, 2);
  for (int i = 0; i < n; ++i) {
    const double p = test_util::uniform01(rng);
    probs.row(i) << p, 1 - p;
    labels(i, test_util::uniform01(rng) < p ? 0 : 1) = 1.0;
  }
  const double expected = 0.5 * (scalar_binary_ece(probs.col(0), labels.col(0), 15) +
                                 scalar_binary_ece(probs.col(1), labels.col(1), 15));
  CHECK(classwise_ce(probs, labels, 15) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("confidence error: perfect, one-bin, and uniform-random cases") {
  Matrix probs(2, 2), labels(2, 2);
  probs << 1, 0, 0, 1;
  labels = probs;
  CHECK(confidence_ce(probs, labels, 15) == 0.0);

  const int n = 10;
  Matrix conf(n, 2), lab = Matrix::Zero(n, 2);
  for (int i = 0; i < n; ++i) {
    conf.row(i) << 0.9, 0.1;
    lab(i, i < 6 ? 0 : 1) = 1.0;  // accuracy 0.6 at confidence 0.9
  }
  CHECK(confidence_ce(conf, lab, 15) == doctest::Approx(0.3).epsilon(1e-12));

  // Labels independent of a constant-confidence prediction: the error
  // approaches |confidence - 1/d|.
  std::mt19937_64 rng(227);
  const int m = 3000;
  Matrix p(m, 3), y = Matrix::Zero(m, 3);
  for (int i = 0; i < m; ++i) {
    p.row(i) << 0.6, 0.2, 0.2;
    y(i, static_cast<Eigen::Index>(rng() % 3)) = 1.0;
  }
  CHECK(confidence_ce(p, y, 15) == doctest::Approx(0.6 - 1.0 / 3.0).epsilon(0.1));
}

TEST_CASE("accuracy with the lowest-index tie rule") {
  Matrix probs(2, 2), labels(2, 2);
  probs << 1, 0, 0, 1;
  labels = probs;
  CHECK(accuracy(probs, labels) == 1.0);

  Matrix wrong(2, 2);
  wrong << 0, 1, 1, 0;
  CHECK(accuracy(wrong, labels) == 0.0);

  Matrix tied(4, 2), tied_labels(4, 2);
  tied << 0.5, 0.5,   // tie -> argmax 0, label 0: correct
          0.9, 0.1,   // correct
          0.2, 0.8,   // correct
          0.8, 0.2;   // wrong
  tied_labels << 1, 0, 1, 0, 0, 1, 0, 1;
  CHECK(accuracy(tied, tied_labels) == 0.75);
}

TEST_CASE("metrics are invariant under class relabeling") {
  std::mt19937_64 rng(229);
  // Tie-free scores: argmax-based metrics are only relabel-invariant when no
  // row has exactly tied coordinates.
  Matrix P(6, 3);
  P << 0.60, 0.30, 0.10,
       0.10, 0.62, 0.28,
       0.30, 0.10, 0.60,
       0.46, 0.44, 0.10,
       0.10, 0.44, 0.46,
       0.35, 0.34, 0.31;
  const Synthetic data = sample_clusters(rng, P, sharpen(P, 2.0), 120);

  // Any permutation for the argmax-based and per-class metrics.
  const int perm[3] = {2, 0, 1};
  Matrix probs(120, 3), labels(120, 3);
  for (int c = 0; c < 3; ++c) {
    probs.col(perm[c]) = data.probs.col(c);
    labels.col(perm[c]) = data.labels.col(c);
  }
  CHECK(classwise_ce(probs, labels, 15) ==
        doctest::Approx(classwise_ce(data.probs, data.labels, 15)).epsilon(1e-12));
  CHECK(confidence_ce(probs, labels, 15) ==
        doctest::Approx(confidence_ce(data.probs, data.labels, 15)).epsilon(1e-12));
  CHECK(accuracy(probs, labels) == accuracy(data.probs, data.labels));

  // Permuting the binned axes (the first d-1 classes) preserves the L1 CE.
  Matrix swapped_p = data.probs, swapped_l = data.labels;
  swapped_p.col(0).swap(swapped_p.col(1));
  swapped_l.col(0).swap(swapped_l.col(1));
  CHECK(l1_calibration_error(swapped_p, swapped_l) ==
        doctest::Approx(l1_calibration_error(data.probs, data.labels)).epsilon(1e-12));
}

TEST_CASE("simplex binning assigns boundaries to the lower interval") {
  const SimplexBinning binning{15};
  CHECK(binning.axis_index(0.0) == 0);
  CHECK(binning.axis_index(1.0) == 14);
  CHECK(binning.axis_index(1.0 / 15.0 + 1e-12) == 1);
  CHECK(binning.axis_index(0.5) == 7);  // 0.5 * 15 = 7.5 -> interval 7
}

TEST_CASE("recalibrator outputs are quantile rows on the simplex") {
  std::mt19937_64 rng(233);
  const Matrix P = cluster_rows_3class();
  const Synthetic data = sample_clusters(rng, P, sharpen(P, 3.0), 90);
  CalibrationSet cal{data.probs, data.labels};
  FitConfig config;
  config.k = 6;
  config.seed = 12;
  config.max_outer_iters = 30;
  const BrenierModel model = fit_recalibrator(cal, config);

  const Matrix recal = recalibrate(model, data.probs);
  std::set<int> bins_used;
  for (Eigen::Index i = 0; i < recal.rows(); ++i) {
    const LaguerrePrediction pred = laguerre_predict(model, data.probs.row(i).transpose());
    CHECK(recal.row(i) == model.quantiles.points.row(pred.bin_index));
    bins_used.insert(pred.bin_index);
    CHECK(recal.row(i).minCoeff() >= 0.0);
    CHECK(std::abs(recal.row(i).sum() - 1.0) <= 1e-9);
  }
  CHECK(static_cast<int>(bins_used.size()) <= config.k);
}

TEST_CASE("perfectly calibrated data stays calibrated after refitting") {
  std::mt19937_64 rng(239);
  Matrix P(8, 3);  // k = 8 distinct values, balanced so 2000 divides evenly
  P << 0.60, 0.30, 0.10,
       0.10, 0.60, 0.30,
       0.30, 0.10, 0.60,
       0.45, 0.45, 0.10,
       0.10, 0.45, 0.45,
       0.45, 0.10, 0.45,
       0.70, 0.15, 0.15,
       0.15, 0.15, 0.70;
  const Synthetic data = sample_clusters(rng, P, P, 2000, /*balanced=*/true);
  CalibrationSet cal{data.probs, data.labels};
  FitConfig config;
  config.k = 8;
  config.seed = 0;
  config.init_strategy = InitStrategy::random_simplex;
  config.max_outer_iters = 25;
  const BrenierModel model = fit_recalibrator(cal, config);
  const Matrix recal = recalibrate(model, data.probs);

  const double before = l1_calibration_error(data.probs, data.labels);
  const double after = l1_calibration_error(recal, data.labels);
  CHECK(after <= before + 0.02);
}

TEST_CASE("two-class recalibration is monotone in the positive score") {
  std::mt19937_64 rng(241);
  const int n = 120;
  Matrix probs(n, 2), labels = Matrix::Zero(n, 2);
  for (int i = 0; i < n; ++i) {
    const double p = test_util::uniform01(rng);
    const double sharp = p * p / (p * p + (1 - p) * (1 - p));  // overconfident
    probs.row(i) << sharp, 1 - sharp;
    labels(i, test_util::uniform01(rng) < p ? 0 : 1) = 1.0;
  }
  CalibrationSet cal{probs, labels};
  FitConfig config;
  config.k = 8;
  config.seed = 3;
  config.max_outer_iters = 30;
  const BrenierModel model = fit_recalibrator(cal, config);
  const Matrix recal = recalibrate(model, probs);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return probs(a, 0) < probs(b, 0); });
  for (int t = 0; t + 1 < n; ++t) {
    CHECK(recal(order[t + 1], 0) - recal(order[t], 0) >= -1e-9);
  }
}

TEST_CASE("overconfident scores get strictly better after recalibration") {
  std::mt19937_64 rng(251);
  const Matrix P = cluster_rows_3class();
  const Synthetic data = sample_clusters(rng, P, sharpen(P, 3.0), 300);
  CalibrationSet cal{data.probs, data.labels};
  FitConfig config;
  config.k = 15;
  config.seed = 1;
  config.init_strategy = InitStrategy::random_simplex;
  const BrenierModel model = fit_recalibrator(cal, config);
  const Matrix recal = recalibrate(model, data.probs);

  const double before = l1_calibration_error(data.probs, data.labels);
  const double after = l1_calibration_error(recal, data.labels);
  CHECK(after < before);
}

TEST_CASE("calibration set validation names the offending row") {
  Matrix probs(2, 2), labels(2, 2);
  probs << 0.7, 0.28, 0.5, 0.5;  // first row sums to 0.98
  labels << 1, 0, 0, 1;
  CalibrationSet cal{probs, labels};
  CHECK_THROWS_WITH_AS(cal.validate(),
                       doctest::Contains("row 0"), std::invalid_argument);
}

TEST_CASE("map grid has the documented size and emits quantile rows") {
  std::mt19937_64 rng(257);
  Matrix U(4, 3);
  for (int j = 0; j < 4; ++j) {
    Vector e(3);
    for (int c = 0; c < 3; ++c) e[c] = -std::log(1.0 - test_util::uniform01(rng));
    U.row(j) = (e / e.sum()).transpose();
  }
  BrenierModel model;
  model.quantiles = {U, true};
  model.input_dim = 3;
  model.dual_g = Vector::Zero(4);

  const auto grid = calibration_map_grid(model, 2);
  CHECK(grid.size() == 6);
  for (const GridPoint& p : grid) {
    CHECK(p.output == U.row(p.bin_index).transpose());
    CHECK(std::abs(p.q.sum() - 1.0) <= 1e-12);
  }

  const auto fine = calibration_map_grid(model, 15);
  CHECK(fine.size() == 16 * 17 / 2);

  BrenierModel low_dim = model;
  low_dim.input_dim = 2;
  low_dim.quantiles.points = U.leftCols(2);
  CHECK_THROWS_AS(calibration_map_grid(low_dim, 2), std::invalid_argument);
}

TEST_CASE("a separable fit concentrates the map grid on vertices") {
  const int n = 30, d = 3;
  Matrix probs(n, d), labels(n, d);
  for (int i = 0; i < n; ++i) {
    probs.row(i).setZero();
    probs(i, i % d) = 1.0;
    labels.row(i) = probs.row(i);
  }
  CalibrationSet cal{probs, labels};
  FitConfig config;
  config.k = 3;
  config.seed = 5;
  const BrenierModel model = fit_recalibrator(cal, config);
  REQUIRE(model.train_objective <= 1e-6);
  const auto grid = calibration_map_grid(model, 4);
  for (const GridPoint& p : grid) {
    CHECK(p.output.maxCoeff() >= 0.99);  // quantiles sit at the corners
  }
}

TEST_CASE("metrics reject empty input") {
  CHECK_THROWS_AS(l1_calibration_error(Matrix(), Matrix()), std::invalid_argument);
  CHECK_THROWS_AS(classwise_ce(Matrix(), Matrix(), 15), std::invalid_argument);
  CHECK_THROWS_AS(confidence_ce(Matrix(), Matrix(), 15), std::invalid_argument);
  CHECK_THROWS_AS(accuracy(Matrix(), Matrix()), std::invalid_argument);
}
