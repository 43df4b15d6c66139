#include "brenier/calibration.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace brenier {

void CalibrationSet::validate() const {
  if (probs.rows() != labels.rows() || probs.cols() != labels.cols()) {
    throw std::invalid_argument("CalibrationSet: probs and labels shapes differ");
  }
  if (probs.rows() < 1) throw std::invalid_argument("CalibrationSet: empty data");
  if (!probs.allFinite() || !labels.allFinite()) {
    throw std::invalid_argument("CalibrationSet: non-finite values");
  }
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (probs.row(i).minCoeff() < 0.0) {
      throw std::invalid_argument("CalibrationSet: negative probability at row " +
                                  std::to_string(i));
    }
    if (std::abs(probs.row(i).sum() - 1.0) > 1e-6) {
      throw std::invalid_argument("CalibrationSet: row " + std::to_string(i) +
                                  " is off the simplex (sum " + std::to_string(probs.row(i).sum()) +
                                  ")");
    }
  }
  LabeledDataset as_labels{probs, labels, LabeledDataset::ResponseKind::one_hot};
  as_labels.validate();
}

int SimplexBinning::axis_index(double p) const {
  // Interval boundaries belong to the lower interval; the top edge of the
  // last interval is closed.
  const int idx = static_cast<int>(std::ceil(p * bins_per_axis)) - 1;
  return std::min(bins_per_axis - 1, std::max(0, idx));
}

long SimplexBinning::bin_id(const Eigen::Ref<const Eigen::RowVectorXd>& prob_row) const {
  long id = 0;
  for (Eigen::Index c = 0; c + 1 < prob_row.size(); ++c) {
    id = id * bins_per_axis + axis_index(prob_row[c]);
  }
  return id;
}

BrenierModel fit_recalibrator(const CalibrationSet& cal, FitConfig config) {
  cal.validate();
  config.simplex_constrained = true;
  LabeledDataset data{cal.probs, cal.labels, LabeledDataset::ResponseKind::one_hot};
  return fit(data, config);
}

Matrix recalibrate(const BrenierModel& model, const Matrix& probs) {
  return laguerre_predict_rows(model, probs);
}

namespace {

struct BinStats {
  long count = 0;
  Vector sum_probs;
  Vector sum_labels;
};

void require_metric_input(const Matrix& probs, const Matrix& labels) {
  if (probs.rows() < 1) throw std::invalid_argument("calibration metric: empty input");
  if (probs.rows() != labels.rows() || probs.cols() != labels.cols()) {
    throw std::invalid_argument("calibration metric: probs and labels shapes differ");
  }
}

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (Eigen::Index c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace

double l1_calibration_error(const Matrix& probs, const Matrix& labels,
                            const SimplexBinning& binning) {
  require_metric_input(probs, labels);
  const Eigen::Index n = probs.rows();
  const Eigen::Index d = probs.cols();

  std::unordered_map<long, BinStats> bins;
  for (Eigen::Index i = 0; i < n; ++i) {
    BinStats& b = bins[binning.bin_id(probs.row(i))];
    if (b.count == 0) {
      b.sum_probs = Vector::Zero(d);
      b.sum_labels = Vector::Zero(d);
    }
    ++b.count;
    b.sum_probs += probs.row(i).transpose();
    b.sum_labels += labels.row(i).transpose();
  }

  double error = 0.0;
  for (const auto& [id, b] : bins) {
    const double w = static_cast<double>(b.count);
    error += w / static_cast<double>(n) * ((b.sum_labels - b.sum_probs) / w).lpNorm<1>();
  }
  return error;
}

double classwise_ce(const Matrix& probs, const Matrix& labels, int bins) {
  require_metric_input(probs, labels);
  if (bins < 1) throw std::invalid_argument("classwise_ce: bins must be >= 1");
  const Eigen::Index n = probs.rows();
  const Eigen::Index d = probs.cols();
  const SimplexBinning axis{bins};

  double total = 0.0;
  std::vector<double> count(bins), sum_p(bins), sum_y(bins);
  for (Eigen::Index c = 0; c < d; ++c) {
    std::fill(count.begin(), count.end(), 0.0);
    std::fill(sum_p.begin(), sum_p.end(), 0.0);
    std::fill(sum_y.begin(), sum_y.end(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int b = axis.axis_index(probs(i, c));
      count[b] += 1.0;
      sum_p[b] += probs(i, c);
      sum_y[b] += labels(i, c);
    }
    double class_error = 0.0;
    for (int b = 0; b < bins; ++b) {
      if (count[b] == 0.0) continue;
      class_error += count[b] / static_cast<double>(n) *
                     std::abs(sum_y[b] / count[b] - sum_p[b] / count[b]);
    }
    total += class_error;
  }
  return total / static_cast<double>(d);
}

double confidence_ce(const Matrix& probs, const Matrix& labels, int bins) {
  require_metric_input(probs, labels);
  if (bins < 1) throw std::invalid_argument("confidence_ce: bins must be >= 1");
  const Eigen::Index n = probs.rows();
  const SimplexBinning axis{bins};

  std::vector<double> count(bins), sum_conf(bins), sum_correct(bins);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int predicted = argmax_lowest(probs.row(i));
    const double conf = probs(i, predicted);
    const int b = axis.axis_index(conf);
    count[b] += 1.0;
    sum_conf[b] += conf;
    sum_correct[b] += labels(i, predicted);
  }
  double error = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0.0) continue;
    error += count[b] / static_cast<double>(n) *
             std::abs(sum_correct[b] / count[b] - sum_conf[b] / count[b]);
  }
  return error;
}

double accuracy(const Matrix& probs, const Matrix& labels) {
  require_metric_input(probs, labels);
  long correct = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (labels(i, argmax_lowest(probs.row(i))) == 1.0) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.rows());
}

std::vector<GridPoint> calibration_map_grid(const BrenierModel& model, int resolution) {
  if (model.quantiles.dim() != 3) {
    throw std::invalid_argument("calibration_map_grid: requires a 3-class model");
  }
  if (resolution < 1) {
    throw std::invalid_argument("calibration_map_grid: resolution must be >= 1");
  }
  std::vector<GridPoint> grid;
  const double r = static_cast<double>(resolution);
  for (int a = 0; a <= resolution; ++a) {
    for (int b = 0; a + b <= resolution; ++b) {
      Vector q(3);
      q << a / r, b / r, (resolution - a - b) / r;
      const LaguerrePrediction pred = laguerre_predict(model, q);
      grid.push_back({q, pred.u, pred.bin_index});
    }
  }
  return grid;
}

}  // namespace brenier
