#pragma once

#include <string>
#include <variant>

#include "brenier/calibration.hpp"
#include "brenier/sim.hpp"

namespace brenier {

/// Parsed CSV with header. Cells are doubles; parse errors name the
/// offending row and column.
struct CsvTable {
  std::vector<std::string> header;
  Matrix values;  // rows x columns

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

enum class DatasetSchema { zy_pairs, probs_labels, covariates_labels };

struct CovariateDataset {
  Matrix X;       // n x D covariates
  Matrix Y;       // n x d one-hot labels
  Eigen::Index classes() const { return Y.cols(); }
};

/// Loads a dataset from CSV under one of the documented schemas:
///   zy_pairs:          z0..z{d-1}, y0..y{d-1}
///   probs_labels:      p0..p{d-1}, label            (label in [0, d))
///   covariates_labels: x0..x{D-1}, label
/// Row order is preserved; labels are one-hot expanded; probability rows are
/// checked against the simplex at tolerance 1e-6.
std::variant<LabeledDataset, CalibrationSet, CovariateDataset> load_dataset(
    const std::string& path, DatasetSchema schema);

LabeledDataset load_zy_pairs(const std::string& path);
CalibrationSet load_probs_labels(const std::string& path);
CovariateDataset load_covariates_labels(const std::string& path);

/// Reads the z0..z{d-1} columns of a CSV as query points (other columns are
/// ignored so prediction can reuse training files).
Matrix load_points(const std::string& path, const std::string& prefix, int dim);

/// Versioned JSON model persistence. Numeric fields round-trip bitwise.
void save_model(const std::string& path, const BrenierModel& model);
void save_model(const std::string& path, const SimModel& model);
std::string model_to_json(const BrenierModel& model);
std::string model_to_json(const SimModel& model);

std::variant<BrenierModel, SimModel> load_model(const std::string& path);
BrenierModel load_brenier_model(const std::string& path);
SimModel load_sim_model(const std::string& path);

}  // namespace brenier
