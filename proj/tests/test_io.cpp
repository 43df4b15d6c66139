#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "brenier/io.hpp"
#include "test_util.hpp"

using namespace brenier;
using test_util::random_matrix;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("brenierir_io_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("zy_pairs loads with the documented shape") {
  TempDir tmp;
  const std::string path = tmp.file("zy.csv");
  write_file(path, "z0,z1,y0,y1\n0.5,1.5,1,0\n-1,0,0,1\n2,2,1,0\n");
  const LabeledDataset data = load_zy_pairs(path);
  CHECK(data.Z.rows() == 3);
  CHECK(data.Z.cols() == 2);
  CHECK(data.Y.rows() == 3);
  CHECK(data.Y.cols() == 2);
  CHECK(data.Z(0, 1) == 1.5);
  CHECK(data.Y(2, 0) == 1.0);
}

TEST_CASE("csv errors name the offending row and column") {
  TempDir tmp;
  const std::string path = tmp.file("bad.csv");
  write_file(path, "z0,y0\n1,2\nfoo,3\n");
  CHECK_THROWS_WITH_AS(load_zy_pairs(path), doctest::Contains("row 2"), std::runtime_error);
  CHECK_THROWS_WITH_AS(load_zy_pairs(path), doctest::Contains("z0"), std::runtime_error);

  write_file(path, "z0,y0\n1\n");
  CHECK_THROWS_WITH_AS(load_zy_pairs(path), doctest::Contains("row 1"), std::runtime_error);
}

TEST_CASE("label columns must be integers in range") {
  TempDir tmp;
  const std::string path = tmp.file("probs.csv");
  write_file(path, "p0,p1,p2,label\n0.2,0.3,0.5,2\n0.1,0.8,0.1,3\n");
  CHECK_THROWS_WITH_AS(load_probs_labels(path), doctest::Contains("row 2"), std::runtime_error);

  write_file(path, "p0,p1,p2,label\n0.2,0.3,0.5,1.5\n");
  CHECK_THROWS_AS(load_probs_labels(path), std::runtime_error);
}

TEST_CASE("off-simplex probability rows are rejected with their index") {
  TempDir tmp;
  const std::string path = tmp.file("probs.csv");
  write_file(path, "p0,p1,label\n0.5,0.48,0\n0.5,0.5,1\n");
  CHECK_THROWS_WITH_AS(load_probs_labels(path), doctest::Contains("row 1"), std::runtime_error);
}

TEST_CASE("covariates load and one-hot expand") {
  TempDir tmp;
  const std::string path = tmp.file("cov.csv");
  write_file(path, "x0,x1,label\n1,2,0\n3,4,2\n5,6,1\n");
  const CovariateDataset data = load_covariates_labels(path);
  CHECK(data.X.rows() == 3);
  CHECK(data.classes() == 3);
  CHECK(data.Y(1, 2) == 1.0);
  CHECK(data.Y.row(1).sum() == 1.0);
}

TEST_CASE("quoted cells and CRLF endings parse") {
  TempDir tmp;
  const std::string path = tmp.file("quoted.csv");
  write_file(path, "z0,y0\r\n\"1.25\",2\r\n3,\"4\"\r\n");
  const LabeledDataset data = load_zy_pairs(path);
  CHECK(data.Z(0, 0) == 1.25);
  CHECK(data.Y(1, 0) == 4.0);
}

TEST_CASE("brenier model JSON round-trips bitwise") {
  std::mt19937_64 rng(401);
  const Matrix Z = random_matrix(rng, 12, 2, -1.0, 1.0);
  const Matrix Y = random_matrix(rng, 12, 2, -1.0, 1.0);
  FitConfig config;
  config.k = 4;
  config.simplex_constrained = false;
  config.seed = 77;
  config.max_outer_iters = 10;
  const BrenierModel model = fit({Z, Y, LabeledDataset::ResponseKind::real}, config);

  TempDir tmp;
  const std::string path = tmp.file("model.json");
  save_model(path, model);
  const BrenierModel loaded = load_brenier_model(path);

  CHECK(loaded.quantiles.points == model.quantiles.points);
  CHECK(loaded.dual_g == model.dual_g);
  CHECK(loaded.train_objective == model.train_objective);
  CHECK(loaded.iterations_used == model.iterations_used);
  CHECK(loaded.config.seed == model.config.seed);
  CHECK(loaded.config.fd_epsilon == model.config.fd_epsilon);
  CHECK(loaded.input_dim == model.input_dim);

  // Laguerre predictions agree exactly on random queries.
  for (int t = 0; t < 100; ++t) {
    const Vector z = random_matrix(rng, 1, 2, -2.0, 2.0).row(0).transpose();
    const LaguerrePrediction a = laguerre_predict(model, z);
    const LaguerrePrediction b = laguerre_predict(loaded, z);
    CHECK(a.bin_index == b.bin_index);
    CHECK(a.u == b.u);
  }

  // Saving the loaded model reproduces the file byte for byte.
  const std::string again = tmp.file("model2.json");
  save_model(again, loaded);
  CHECK(read_file(path) == read_file(again));
}

TEST_CASE("sim model JSON round-trips bitwise") {
  std::mt19937_64 rng(409);
  const int n = 24;
  Matrix X = random_matrix(rng, n, 2, -3.0, 3.0);
  Matrix Y = Matrix::Zero(n, 3);
  for (int i = 0; i < n; ++i) Y(i, i % 3) = 1.0;
  FitConfig config;
  config.k = 3;
  config.seed = 5;
  const SimModel model = fit_sim(X, Y, config, 1e-3, 2, 5);

  TempDir tmp;
  const std::string path = tmp.file("sim.json");
  save_model(path, model);
  const SimModel loaded = load_sim_model(path);
  CHECK(loaded.W == model.W);
  CHECK(loaded.quantiles.points == model.quantiles.points);
  CHECK(loaded.dual_g == model.dual_g);
  CHECK(loaded.history == model.history);
  CHECK(loaded.lambda_W == model.lambda_W);

  const auto variant = load_model(path);
  CHECK(std::holds_alternative<SimModel>(variant));
}

TEST_CASE("tampered version and malformed files are rejected") {
  std::mt19937_64 rng(419);
  const Matrix Z = random_matrix(rng, 6, 1, -1.0, 1.0);
  FitConfig config;
  config.k = 2;
  config.simplex_constrained = false;
  config.max_outer_iters = 3;
  const BrenierModel model = fit({Z, Z, LabeledDataset::ResponseKind::real}, config);

  TempDir tmp;
  const std::string path = tmp.file("model.json");
  save_model(path, model);

  std::string text = read_file(path);
  const auto pos = text.find("\"version\": 1");
  REQUIRE(pos != std::string::npos);
  std::string tampered = text;
  tampered.replace(pos, 12, "\"version\": 9");
  write_file(path, tampered);
  CHECK_THROWS_WITH_AS(load_brenier_model(path), doctest::Contains("version"),
                       std::runtime_error);

  write_file(path, text.substr(0, text.size() / 2));  // truncated
  CHECK_THROWS_AS(load_brenier_model(path), std::runtime_error);

  write_file(path, "not json at all");
  CHECK_THROWS_AS(load_model(path), std::runtime_error);
}

TEST_CASE("load_points picks the requested columns and ignores the rest") {
  TempDir tmp;
  const std::string path = tmp.file("mixed.csv");
  write_file(path, "y0,z1,z0,extra\n9,2,1,0\n8,4,3,0\n");
  const Matrix Z = load_points(path, "z", 2);
  CHECK(Z.rows() == 2);
  CHECK(Z(0, 0) == 1.0);
  CHECK(Z(0, 1) == 2.0);
  CHECK_THROWS_WITH_AS(load_points(path, "q", 1), doctest::Contains("q0"), std::runtime_error);
}
