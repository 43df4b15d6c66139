#pragma once

#include <vector>

#include "brenier/brenier.hpp"

namespace brenier {

/// Base-model outputs on the simplex paired with one-hot labels.
struct CalibrationSet {
  Matrix probs;   // n x d, rows on the simplex (tolerance 1e-6)
  Matrix labels;  // n x d, one-hot rows

  Eigen::Index size() const { return probs.rows(); }
  Eigen::Index classes() const { return probs.cols(); }
  void validate() const;
};

/// Uniform binning of the simplex by the first d-1 coordinates, each axis
/// split into bins_per_axis intervals. Interval boundaries belong to the
/// lower interval; the top edge of the last interval is closed.
struct SimplexBinning {
  int bins_per_axis = 15;

  int axis_index(double p) const;
  /// Flat bin identifier of a probability row (first d-1 coordinates).
  long bin_id(const Eigen::Ref<const Eigen::RowVectorXd>& prob_row) const;
};

/// Fits a simplex-constrained BrenierIR recalibrator on (probs, labels).
/// The returned model predicts through the Laguerre map, so recalibrated
/// outputs are exact quantile rows.
BrenierModel fit_recalibrator(const CalibrationSet& cal, FitConfig config);

/// Applies the recalibration (Laguerre) map to every row of probs.
Matrix recalibrate(const BrenierModel& model, const Matrix& probs);

/// Binned L1 calibration error: per non-empty bin ||mean(labels) - mean(probs)||_1,
/// averaged with bin-mass weights.
double l1_calibration_error(const Matrix& probs, const Matrix& labels,
                            const SimplexBinning& binning = SimplexBinning{});

/// Per-class binned calibration error on [0,1] scores, averaged over classes.
double classwise_ce(const Matrix& probs, const Matrix& labels, int bins = 15);

/// Expected calibration error of the top-class confidence.
double confidence_ce(const Matrix& probs, const Matrix& labels, int bins = 15);

/// Fraction of rows whose argmax (lowest index on ties) matches the label.
double accuracy(const Matrix& probs, const Matrix& labels);

struct GridPoint {
  Vector q;       // query on the 2-simplex
  Vector output;  // Laguerre-map value (a quantile row)
  int bin_index = 0;
};

/// Evaluates the Laguerre map over the barycentric grid
/// {(a/R, b/R, (R-a-b)/R) : a+b <= R} for external plotting. Requires d = 3.
std::vector<GridPoint> calibration_map_grid(const BrenierModel& model, int resolution);

}  // namespace brenier
