#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "falkon/baselines.hpp"
#include "falkon/solver.hpp"
#include "support.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

using namespace falkon;
using namespace falkon::testing;
namespace fs = std::filesystem;

namespace {

struct Problem {
  Features x;
  RowMatrix dense;
  Vector y;
};

Problem make_problem(Index n, Index d, std::uint64_t seed) {
  Problem p;
  p.dense = gaussian_points(n, d, seed);
  p.x = Features(p.dense);
  p.y = smooth_labels(p.dense, seed + 1);
  return p;
}

FalkonConfig config(const KernelSpec& k, double lambda, Index m, int t) {
  FalkonConfig c;
  c.kernel = k;
  c.lambda = lambda;
  c.num_centers = m;
  c.iterations = t;
  c.seed = 3;
  return c;
}

double rel_rms(const Matrix& a, const Matrix& b) { return rel_diff(a, b); }

}  // namespace

TEST_CASE("FALKON with all points as centers reproduces dense KRR") {
  const auto p = make_problem(50, 3, 1);
  const auto k = KernelSpec::gaussian(2.0);
  auto cfg = config(k, 1e-3, 50, 60);
  const auto res = falkon_fit(p.x, Matrix(p.y), all_points(50), cfg);
  const Matrix knn = oracle_kernel_matrix(k, p.dense, p.dense);
  const Matrix oracle = knn * oracle_krr_alpha(knn, Matrix(p.y), 1e-3);
  CHECK(rel_rms(falkon_predict(res.model, p.x), oracle) < 1e-6);
}

TEST_CASE("FALKON converges to the exact Nystrom solution") {
  const auto p = make_problem(500, 4, 2);
  const auto k = KernelSpec::gaussian(2.0);
  const auto res = falkon_train(p.x, Matrix(p.y), config(k, 1e-4, 100, 40));
  const RowMatrix c = res.model.centers.dense();
  const Matrix knm = oracle_kernel_matrix(k, p.dense, c);
  const Matrix kmm = oracle_kernel_matrix(k, c, c);
  const Matrix oracle = knm * oracle_nystrom_alpha(knm, kmm, Matrix(p.y), 1e-4);
  CHECK(rel_rms(falkon_predict(res.model, p.x), oracle) < 1e-6);
}

TEST_CASE("oracle equivalence over lambda and kernel at t = M") {
  const auto p = make_problem(200, 5, 3);
  for (const auto& k : {KernelSpec::gaussian(2.5), KernelSpec::linear()}) {
    for (double lambda : {1e-2, 1e-4, 1e-6}) {
      CAPTURE(k.name());
      CAPTURE(lambda);
      const auto res = falkon_train(p.x, Matrix(p.y), config(k, lambda, 40, 40));
      const RowMatrix c = res.model.centers.dense();
      const Matrix knm = oracle_kernel_matrix(k, p.dense, c);
      const Matrix kmm = oracle_kernel_matrix(k, c, c);
      const Matrix oracle = knm * oracle_nystrom_alpha(knm, kmm, Matrix(p.y), lambda);
      CHECK(rel_rms(falkon_predict(res.model, p.x), oracle) < 1e-6);
      const auto direct = nystrom_direct(p.x, Matrix(p.y), res.model.centers, k, lambda);
      CHECK(rel_rms(falkon_predict(res.model, p.x), falkon_predict(direct.model, p.x)) <
            1e-6);
    }
  }
}

TEST_CASE("stationarity of the trained coefficients") {
  const auto p = make_problem(300, 3, 4);
  const auto k = KernelSpec::gaussian(1.5);
  const double lambda = 1e-3;
  const auto res = falkon_train(p.x, Matrix(p.y), config(k, lambda, 60, 60));
  const RowMatrix c = res.model.centers.dense();
  const Matrix knm = oracle_kernel_matrix(k, p.dense, c);
  const Matrix kmm = oracle_kernel_matrix(k, c, c);
  const Matrix a = res.model.alpha;
  const double n = 300.0;
  const Matrix grad = knm.transpose() * (knm * a - p.y) / n + lambda * kmm * a;
  CHECK(grad.norm() <= 1e-8 * (knm.transpose() * p.y / n).norm());
}

TEST_CASE("one CG step points along the preconditioned gradient") {
  const auto p = make_problem(80, 2, 5);
  const auto res = falkon_train(p.x, Matrix(p.y), config(KernelSpec::gaussian(1.0), 1e-3, 20, 1));
  const Matrix b = res.preconditioner.dense_b();
  const RowMatrix c = res.model.centers.dense();
  const Matrix knm = oracle_kernel_matrix(KernelSpec::gaussian(1.0), p.dense, c);
  const Vector dir = b * b.transpose() * knm.transpose() * p.y;
  const Vector a = res.model.alpha.col(0);
  const double scale = a.dot(dir) / dir.squaredNorm();
  CHECK(scale > 0.0);
  CHECK((a - scale * dir).norm() <= 1e-10 * a.norm());
  CHECK(res.report.trace.records.size() == 1);

  auto bad = config(KernelSpec::gaussian(1.0), 1e-3, 20, 0);
  CHECK_THROWS_AS(falkon_train(p.x, Matrix(p.y), bad), ArgumentError);
}

TEST_CASE("results do not depend on block size or thread count") {
  const auto p = make_problem(120, 3, 6);
  auto cfg = config(KernelSpec::gaussian(1.2), 1e-4, 30, 15);
  cfg.block_rows = 30;
  const Matrix ref = falkon_train(p.x, Matrix(p.y), cfg).model.alpha;
  for (Index b : {Index{1}, Index{7}, Index{120}}) {
    cfg.block_rows = b;
    CHECK(rel_diff(falkon_train(p.x, Matrix(p.y), cfg).model.alpha, ref) <= 1e-12);
  }
  cfg.block_rows = 7;
  cfg.threads = 1;
  const Matrix one = falkon_train(p.x, Matrix(p.y), cfg).model.alpha;
  cfg.threads = 4;
  CHECK(falkon_train(p.x, Matrix(p.y), cfg).model.alpha == one);
  cfg.cache_kernel = true;
  CHECK(falkon_train(p.x, Matrix(p.y), cfg).model.alpha == one);
}

TEST_CASE("several outputs are solved column by column") {
  const auto p = make_problem(100, 3, 7);
  Matrix y(100, 2);
  y.col(0) = p.y;
  y.col(1) = smooth_labels(p.dense, 99, 0.5);
  const auto cfg = config(KernelSpec::gaussian(1.0), 1e-3, 25, 10);
  const auto both = falkon_train(p.x, y, cfg);
  for (Index c = 0; c < 2; ++c) {
    const auto single = falkon_train(p.x, Matrix(y.col(c)), cfg);
    CHECK(rel_diff(both.model.alpha.col(c), single.model.alpha) < 1e-13);
  }
}

TEST_CASE("leverage-score sampling") {
  const auto p = make_problem(150, 3, 8);
  auto cfg = config(KernelSpec::gaussian(1.5), 1e-3, 40, 40);
  cfg.sampling = LeverageExact{1e-3};
  const auto res = falkon_train(p.x, Matrix(p.y), cfg);
  CHECK(res.report.draws == 40);
  CHECK(res.report.kept_centers <= 40);
  CHECK(res.report.path != PrecondPath::full_rank);
  const auto direct =
      nystrom_direct(p.x, Matrix(p.y), res.model.centers, cfg.kernel, cfg.lambda);
  CHECK(rel_diff(falkon_predict(res.model, p.x), falkon_predict(direct.model, p.x)) < 1e-6);

  const auto scores = fs::temp_directory_path() / "falkon_test_solver_scores.txt";
  {
    std::ofstream f(scores);
    for (Index i = 0; i < 150; ++i) f << 1.0 + (i % 3) << '\n';
  }
  cfg.sampling = LeverageFromFile{scores, 2.0};
  CHECK(falkon_train(p.x, Matrix(p.y), cfg).report.draws == 40);

  cfg.sampling = UniformSampling{};
  cfg.num_centers = 151;
  CHECK_THROWS_AS(falkon_train(p.x, Matrix(p.y), cfg), ArgumentError);
}

TEST_CASE("prediction") {
  RowMatrix x(3, 2), c(1, 2);
  x << 1, 0, 0, 1, 2, 3;
  c << 1, 1;
  FalkonModel m;
  m.centers = Features(c);
  m.kernel = KernelSpec::linear();
  m.alpha = Matrix::Constant(1, 1, 2.0);
  const Matrix pred = falkon_predict(m, Features(x));
  CHECK(pred(0, 0) == 2.0);
  CHECK(pred(2, 0) == 10.0);
  m.alpha.setZero();
  CHECK(falkon_predict(m, Features(x)).isZero());

  const auto p = make_problem(40, 3, 9);
  const auto res = falkon_train(p.x, Matrix(p.y), config(KernelSpec::gaussian(1.0), 1e-3, 10, 5));
  const Matrix dense = oracle_kernel_matrix(res.model.kernel, p.dense,
                                            res.model.centers.dense()) *
                       res.model.alpha;
  CHECK(rel_diff(falkon_predict(res.model, p.x, 3), dense) < 1e-13);

  FalkonModel normed = res.model;
  normed.norm_stats = NormStats{Vector::Constant(3, 1.0), Vector::Constant(3, 2.0)};
  RowMatrix shifted = (p.dense.array() * 2.0 + 1.0).matrix();
  CHECK(rel_diff(falkon_predict(normed, Features(shifted)), falkon_predict(res.model, p.x)) <
        1e-13);
}

TEST_CASE("basic gradient variant") {
  const auto p = make_problem(90, 3, 10);
  auto cfg = config(KernelSpec::gaussian(1.3), 1e-3, 20, 1);
  const auto sel = sample_uniform(90, 20, 4);
  const double tau = 0.7;
  const auto one = falkon_train_basic_gradient(p.x, Matrix(p.y), sel, cfg, tau);
  const Matrix b = one.preconditioner.dense_b();
  const Matrix knm = oracle_kernel_matrix(cfg.kernel, p.dense, one.model.centers.dense());
  const Vector want = b * ((tau / 90.0) * b.transpose() * knm.transpose() * p.y);
  CHECK(rel_diff(one.model.alpha, want) < 1e-12);

  const auto zero = falkon_train_basic_gradient(p.x, Matrix(p.y), sel, cfg, 0.0);
  CHECK(zero.model.alpha.isZero(0.0));

  cfg.iterations = 500;
  const auto gd = falkon_train_basic_gradient(p.x, Matrix(p.y), sel, cfg);
  CHECK(gd.report.tau > 0.0);
  cfg.iterations = 20;
  const auto cg = falkon_fit(p.x, Matrix(p.y), sel, cfg);
  CHECK(rel_diff(falkon_predict(gd.model, p.x), falkon_predict(cg.model, p.x)) < 1e-4);

  CHECK_THROWS_AS(falkon_train_basic_gradient(p.x, Matrix(p.y), sel, cfg, -1.0),
                  ArgumentError);
}

TEST_CASE("objective trace is recorded per iteration") {
  const auto p = make_problem(100, 2, 11);
  int calls = 0;
  const Evaluator eval = [&](const Matrix& alpha) -> std::optional<double> {
    ++calls;
    return alpha.norm();
  };
  const auto res =
      falkon_train(p.x, Matrix(p.y), config(KernelSpec::gaussian(1.0), 1e-3, 20, 8), eval);
  REQUIRE(res.report.trace.records.size() == 8);
  CHECK(calls == 8);
  const RowMatrix c = res.model.centers.dense();
  const Matrix knm = oracle_kernel_matrix(res.model.kernel, p.dense, c);
  const Matrix kmm = oracle_kernel_matrix(res.model.kernel, c, c);
  const Matrix& a = res.model.alpha;
  const double direct =
      (knm * a - p.y).squaredNorm() / 100.0 + 1e-3 * (a.transpose() * kmm * a)(0, 0);
  CHECK(res.report.trace.records.back().objective == doctest::Approx(direct).epsilon(1e-9));
  for (std::size_t i = 1; i < 8; ++i)
    CHECK(res.report.trace.records[i].objective <=
          res.report.trace.records[i - 1].objective + 1e-12);
}

TEST_CASE("model files") {
  const auto p = make_problem(60, 3, 12);
  auto res = falkon_train(p.x, Matrix(p.y), config(KernelSpec::gaussian(0.8), 1e-3, 15, 10));
  res.model.norm_stats = NormStats{Vector::Constant(3, 0.25), Vector::Constant(3, 1.5)};
  const auto path = fs::temp_directory_path() / "falkon_test_model.bin";
  save_model(res.model, path);
  const auto back = load_model(path);
  CHECK(back.alpha == res.model.alpha);
  CHECK(back.centers == res.model.centers);
  CHECK(back.kernel == res.model.kernel);
  REQUIRE(back.norm_stats.has_value());
  CHECK(back.norm_stats->std == res.model.norm_stats->std);
  CHECK(falkon_predict(back, p.x) == falkon_predict(res.model, p.x));

  FalkonModel sp;
  sp.centers = Features(std::vector<SparseRow>{{{1, 4}, {0.5, -2.0}}, {{0}, {3.0}}}, 6);
  sp.alpha = Matrix::Constant(2, 3, 0.125);
  Vector w(6);
  w << 1, 2, 3, 4, 5, 6;
  sp.kernel = KernelSpec::gaussian_diag(w);
  save_model(sp, path);
  const auto sback = load_model(path);
  CHECK(sback.centers == sp.centers);
  CHECK(sback.kernel == sp.kernel);
  CHECK(sback.alpha == sp.alpha);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  std::string bad = bytes;
  bad[0] = 'X';
  std::ofstream(path, std::ios::binary) << bad;
  CHECK_THROWS_AS(load_model(path), FormatError);
  std::ofstream(path, std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  CHECK_THROWS_AS(load_model(path), FormatError);
  std::ofstream(path, std::ios::binary) << bytes << 'z';
  CHECK_THROWS_AS(load_model(path), FormatError);
}
