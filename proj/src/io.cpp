#include "brenier/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace brenier {

namespace {

using nlohmann::json;

constexpr int kModelVersion = 1;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  return cells;
}

double parse_cell(const std::string& cell, const std::string& path, std::size_t row,
                  const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw std::runtime_error(path + ": row " + std::to_string(row) + ", column '" + column +
                             "': cannot parse '" + cell + "' as a number");
  }
  return value;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Columns named <prefix>0..<prefix>{dim-1}; throws when the run has gaps.
std::vector<int> prefixed_columns(const CsvTable& table, const std::string& prefix,
                                  const std::string& path) {
  std::vector<int> cols;
  for (int c = 0;; ++c) {
    const int idx = table.column(prefix + std::to_string(c));
    if (idx < 0) break;
    cols.push_back(idx);
  }
  if (cols.empty()) {
    throw std::runtime_error(path + ": missing column '" + prefix + "0'");
  }
  return cols;
}

Matrix select_columns(const CsvTable& table, const std::vector<int>& cols) {
  Matrix out(table.values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = table.values.col(cols[c]);
  }
  return out;
}

Matrix one_hot_labels(const CsvTable& table, int label_col, Eigen::Index classes,
                      const std::string& path) {
  const Eigen::Index n = table.values.rows();
  Matrix Y = Matrix::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double raw = table.values(i, label_col);
    const long label = std::lround(raw);
    if (raw != static_cast<double>(label) || label < 0 || label >= classes) {
      throw std::runtime_error(path + ": row " + std::to_string(i + 1) +
                               ", column 'label': value " + format_double(raw) +
                               " is not an integer in [0, " + std::to_string(classes) + ")");
    }
    Y(i, label) = 1.0;
  }
  return Y;
}

json config_to_json(const FitConfig& config) {
  return json{{"k", config.k},
              {"max_outer_iters", config.max_outer_iters},
              {"fd_epsilon", config.fd_epsilon},
              {"step_tolerance", config.step_tolerance},
              {"objective_tolerance", config.objective_tolerance},
              {"seed", config.seed},
              {"simplex_constrained", config.simplex_constrained},
              {"init_strategy", to_string(config.init_strategy)}};
}

FitConfig config_from_json(const json& j) {
  FitConfig config;
  config.k = j.at("k").get<int>();
  config.max_outer_iters = j.at("max_outer_iters").get<int>();
  config.fd_epsilon = j.at("fd_epsilon").get<double>();
  config.step_tolerance = j.at("step_tolerance").get<double>();
  config.objective_tolerance = j.at("objective_tolerance").get<double>();
  config.seed = j.at("seed").get<std::uint64_t>();
  config.simplex_constrained = j.at("simplex_constrained").get<bool>();
  config.init_strategy = init_strategy_from_string(j.at("init_strategy").get<std::string>());
  return config;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows.push_back(m(i, j));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                        const std::string& field) {
  if (static_cast<Eigen::Index>(j.size()) != rows * cols) {
    throw std::runtime_error("model file: field '" + field + "' has " +
                             std::to_string(j.size()) + " entries, expected " +
                             std::to_string(rows * cols));
  }
  Matrix m(rows, cols);
  Eigen::Index t = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(t++).get<double>();
  }
  return m;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

json parse_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": malformed model file (" + e.what() + ")");
  }
  if (!j.contains("version") || !j.at("version").is_number_integer()) {
    throw std::runtime_error(path + ": missing model version");
  }
  if (j.at("version").get<int>() != kModelVersion) {
    throw std::runtime_error(path + ": unsupported model version " +
                             j.at("version").dump() + " (expected " +
                             std::to_string(kModelVersion) + ")");
  }
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return static_cast<int>(c);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  CsvTable table;
  table.header = split_csv_line(line);

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row_number;
    const auto cells = split_csv_line(line);
    if (cells.size() != table.header.size()) {
      throw std::runtime_error(path + ": row " + std::to_string(row_number) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(table.header.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      row[c] = parse_cell(cells[c], path, row_number, table.header[c]);
    }
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
  }
  return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ostringstream out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c) out << ',';
    out << table.header[c];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      if (c) out << ',';
      out << format_double(table.values(i, c));
    }
    out << '\n';
  }
  write_text(path, out.str());
}

LabeledDataset load_zy_pairs(const std::string& path) {
  const CsvTable table = read_csv(path);
  const auto z_cols = prefixed_columns(table, "z", path);
  const auto y_cols = prefixed_columns(table, "y", path);
  if (z_cols.size() != y_cols.size()) {
    throw std::runtime_error(path + ": z and y column counts differ (" +
                             std::to_string(z_cols.size()) + " vs " +
                             std::to_string(y_cols.size()) + ")");
  }
  LabeledDataset data;
  data.Z = select_columns(table, z_cols);
  data.Y = select_columns(table, y_cols);
  data.response_kind = LabeledDataset::ResponseKind::real;
  data.validate();
  return data;
}

CalibrationSet load_probs_labels(const std::string& path) {
  const CsvTable table = read_csv(path);
  const auto p_cols = prefixed_columns(table, "p", path);
  const int label_col = table.column("label");
  if (label_col < 0) throw std::runtime_error(path + ": missing column 'label'");

  CalibrationSet cal;
  cal.probs = select_columns(table, p_cols);
  cal.labels = one_hot_labels(table, label_col, cal.probs.cols(), path);
  for (Eigen::Index i = 0; i < cal.probs.rows(); ++i) {
    if (cal.probs.row(i).minCoeff() < 0.0 || std::abs(cal.probs.row(i).sum() - 1.0) > 1e-6) {
      throw std::runtime_error(path + ": row " + std::to_string(i + 1) +
                               ": probabilities are off the simplex (sum " +
                               format_double(cal.probs.row(i).sum()) + ")");
    }
  }
  cal.validate();
  return cal;
}

CovariateDataset load_covariates_labels(const std::string& path) {
  const CsvTable table = read_csv(path);
  const auto x_cols = prefixed_columns(table, "x", path);
  const int label_col = table.column("label");
  if (label_col < 0) throw std::runtime_error(path + ": missing column 'label'");

  Eigen::Index classes = 0;
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    classes = std::max(classes, static_cast<Eigen::Index>(std::lround(table.values(i, label_col))) + 1);
  }
  CovariateDataset data;
  data.X = select_columns(table, x_cols);
  data.Y = one_hot_labels(table, label_col, classes, path);
  return data;
}

std::variant<LabeledDataset, CalibrationSet, CovariateDataset> load_dataset(
    const std::string& path, DatasetSchema schema) {
  switch (schema) {
    case DatasetSchema::zy_pairs: return load_zy_pairs(path);
    case DatasetSchema::probs_labels: return load_probs_labels(path);
    case DatasetSchema::covariates_labels: return load_covariates_labels(path);
  }
  throw std::logic_error("load_dataset: unknown schema");
}

Matrix load_points(const std::string& path, const std::string& prefix, int dim) {
  const CsvTable table = read_csv(path);
  std::vector<int> cols;
  for (int c = 0; c < dim; ++c) {
    const int idx = table.column(prefix + std::to_string(c));
    if (idx < 0) {
      throw std::runtime_error(path + ": missing column '" + prefix + std::to_string(c) + "'");
    }
    cols.push_back(idx);
  }
  return select_columns(table, cols);
}

std::string model_to_json(const BrenierModel& model) {
  json j{{"version", kModelVersion},
         {"model_type", "brenier"},
         {"d", model.input_dim},
         {"k", static_cast<int>(model.quantiles.bins())},
         {"simplex_constrained", model.quantiles.simplex_constrained},
         {"quantiles", matrix_to_json(model.quantiles.points)},
         {"dual_g", matrix_to_json(model.dual_g)},
         {"config", config_to_json(model.config)},
         {"train_objective", model.train_objective},
         {"iterations_used", model.iterations_used},
         {"status", to_string(model.status)}};
  return j.dump(2) + "\n";
}

std::string model_to_json(const SimModel& model) {
  json j{{"version", kModelVersion},
         {"model_type", "sim"},
         {"d", static_cast<int>(model.W.rows())},
         {"D", model.covariate_dim},
         {"k", static_cast<int>(model.quantiles.bins())},
         {"W", matrix_to_json(model.W)},
         {"quantiles", matrix_to_json(model.quantiles.points)},
         {"dual_g", matrix_to_json(model.dual_g)},
         {"lambda_w", model.lambda_W},
         {"history", model.history},
         {"config", config_to_json(model.config)}};
  return j.dump(2) + "\n";
}

void save_model(const std::string& path, const BrenierModel& model) {
  write_text(path, model_to_json(model));
}

void save_model(const std::string& path, const SimModel& model) {
  write_text(path, model_to_json(model));
}

BrenierModel load_brenier_model(const std::string& path) {
  const json j = parse_model_file(path);
  if (j.at("model_type").get<std::string>() != "brenier") {
    throw std::runtime_error(path + ": not a BrenierIR model file");
  }
  BrenierModel model;
  model.input_dim = j.at("d").get<int>();
  const int k = j.at("k").get<int>();
  model.quantiles.simplex_constrained = j.at("simplex_constrained").get<bool>();
  model.quantiles.points = matrix_from_json(j.at("quantiles"), k, model.input_dim, "quantiles");
  model.dual_g = vector_from_json(j.at("dual_g"));
  if (model.dual_g.size() != k) {
    throw std::runtime_error(path + ": dual_g length does not match k");
  }
  model.config = config_from_json(j.at("config"));
  model.train_objective = j.at("train_objective").get<double>();
  model.iterations_used = j.at("iterations_used").get<int>();
  model.status = fit_status_from_string(j.at("status").get<std::string>());
  return model;
}

SimModel load_sim_model(const std::string& path) {
  const json j = parse_model_file(path);
  if (j.at("model_type").get<std::string>() != "sim") {
    throw std::runtime_error(path + ": not a SIM model file");
  }
  SimModel model;
  const int d = j.at("d").get<int>();
  const int D = j.at("D").get<int>();
  const int k = j.at("k").get<int>();
  model.W = matrix_from_json(j.at("W"), d, D, "W");
  model.quantiles.points = matrix_from_json(j.at("quantiles"), k, d, "quantiles");
  model.quantiles.simplex_constrained = true;
  model.dual_g = vector_from_json(j.at("dual_g"));
  model.lambda_W = j.at("lambda_w").get<double>();
  model.history = j.at("history").get<std::vector<double>>();
  model.config = config_from_json(j.at("config"));
  model.covariate_dim = D;
  return model;
}

std::variant<BrenierModel, SimModel> load_model(const std::string& path) {
  const json j = parse_model_file(path);
  const std::string type = j.at("model_type").get<std::string>();
  if (type == "brenier") return load_brenier_model(path);
  if (type == "sim") return load_sim_model(path);
  throw std::runtime_error(path + ": unknown model type '" + type + "'");
}

}  // namespace brenier
