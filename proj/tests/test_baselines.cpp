#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "falkon/baselines.hpp"
#include "support.hpp"

#include <cmath>

using namespace falkon;
using namespace falkon::testing;

namespace {

struct Problem {
  RowMatrix dense;
  Features x;
  Vector y;
};

Problem make_problem(Index n, Index d, std::uint64_t seed) {
  Problem p;
  p.dense = gaussian_points(n, d, seed);
  p.x = Features(p.dense);
  p.y = smooth_labels(p.dense, seed + 1);
  return p;
}

}  // namespace

TEST_CASE("krr_direct") {
  // Points 10 apart with sigma 0.1: every off-diagonal kernel value underflows.
  RowMatrix far(4, 1);
  far << 0, 10, 20, 30;
  Vector y(4);
  y << 1, -2, 3, 0.5;
  const auto k = KernelSpec::gaussian(0.1);
  REQUIRE(oracle_kernel_matrix(k, far, far) == Matrix::Identity(4, 4));
  const auto m = krr_direct(Features(far), Matrix(y), k, 0.25);
  CHECK(rel_diff(m.alpha, Matrix(y / 2.0)) < 1e-15);

  const auto p = make_problem(60, 3, 1);
  const double big = 1e6;
  const auto ridge = krr_direct(p.x, Matrix(p.y), KernelSpec::gaussian(1.0), big);
  CHECK(ridge.alpha.norm() <= p.y.norm() / (big * 60));

  const auto kg = KernelSpec::gaussian(1.5);
  const auto fit = krr_direct(p.x, Matrix(p.y), kg, 1e-3);
  Matrix s = oracle_kernel_matrix(kg, p.dense, p.dense);
  s.diagonal().array() += 1e-3 * 60;
  CHECK((s * fit.alpha - p.y).norm() <= 1e-10 * p.y.norm());

  CHECK_THROWS_AS(krr_direct(p.x, Matrix(p.y), kg, 1e-3, 59), CapExceeded);
}

TEST_CASE("nystrom_direct") {
  const auto p = make_problem(80, 3, 2);
  const auto k = KernelSpec::gaussian(1.5);
  const double lambda = 1e-3;

  const auto full = nystrom_direct(p.x, Matrix(p.y), p.x, k, lambda);
  const auto krr = krr_direct(p.x, Matrix(p.y), k, lambda);
  CHECK(rel_diff(falkon_predict(full.model, p.x), falkon_predict(krr, p.x)) < 1e-8);

  const std::vector<Index> one{17};
  const Features c = p.x.select(one);
  const auto single = nystrom_direct(p.x, Matrix(p.y), c, k, lambda);
  const Vector kc = oracle_kernel_matrix(k, p.dense, c.dense()).col(0);
  const double want = kc.dot(p.y) / (kc.squaredNorm() + lambda * 80 * 1.0);
  CHECK(single.model.alpha(0, 0) == doctest::Approx(want).epsilon(1e-13));
  CHECK(!single.pseudo_inverse);

  const std::vector<Index> sub{1, 5, 9, 13, 40, 41, 77};
  CHECK_THROWS_AS(nystrom_direct(p.x, Matrix(p.y), p.x.select(sub), k, lambda, 6),
                  CapExceeded);
}

TEST_CASE("nystrom_direct falls back to the minimum-norm solution") {
  const auto p = make_problem(50, 2, 3);
  const auto k = KernelSpec::linear();
  const std::vector<Index> idx{0, 1, 2, 3, 4, 5};
  const Features c = p.x.select(idx);
  const auto res = nystrom_direct(p.x, Matrix(p.y), c, k, 1e-3);
  const Matrix knm = oracle_kernel_matrix(k, p.dense, c.dense());
  const Matrix kmm = oracle_kernel_matrix(k, c.dense(), c.dense());
  const Matrix oracle = knm * oracle_nystrom_alpha(knm, kmm, Matrix(p.y), 1e-3);
  CHECK(res.pseudo_inverse);
  CHECK(rel_diff(falkon_predict(res.model, p.x), oracle) < 1e-8);
}

TEST_CASE("gradient descent on the Nystrom system") {
  const auto p = make_problem(70, 3, 4);
  const auto k = KernelSpec::gaussian(1.0);
  const std::vector<Index> idx{3, 8, 12, 30, 31, 50, 66};
  const Features c = p.x.select(idx);
  const double tau = 0.3;
  const auto one = gd_nystrom(p.x, Matrix(p.y), c, k, 1e-2, 1, tau);
  const Matrix knm = oracle_kernel_matrix(k, p.dense, c.dense());
  CHECK(rel_diff(one.model.alpha, tau * knm.transpose() * p.y / 70.0) < 1e-14);

  CHECK(gd_nystrom(p.x, Matrix(p.y), c, k, 1e-2, 3, 0.0).model.alpha.isZero(0.0));

  const auto direct = nystrom_direct(p.x, Matrix(p.y), c, k, 1e-2);
  const auto many = gd_nystrom(p.x, Matrix(p.y), c, k, 1e-2, 3000);
  CHECK(many.tau > 0.0);
  CHECK(rel_diff(falkon_predict(many.model, p.x), falkon_predict(direct.model, p.x)) < 1e-4);
  const auto& rec = many.trace.records;
  REQUIRE(rec.size() == 3000);
  for (std::size_t i = 1; i < rec.size(); ++i)
    CHECK(rec[i].objective <= rec[i - 1].objective + 1e-15);
}

TEST_CASE("unpreconditioned conjugate gradient") {
  const auto p = make_problem(90, 3, 5);
  // Moderately conditioned H, so finite-precision CG terminates in M steps.
  const auto k = KernelSpec::gaussian(0.8);
  const std::vector<Index> idx{0, 10, 20, 30, 40, 50, 60, 70, 80};
  const Features c = p.x.select(idx);
  const double lambda = 1e-2;
  const auto direct = nystrom_direct(p.x, Matrix(p.y), c, k, lambda);
  const auto cg = cg_nystrom_unpreconditioned(p.x, Matrix(p.y), c, k, lambda, 9);
  CHECK(rel_diff(falkon_predict(cg.model, p.x), falkon_predict(direct.model, p.x)) < 1e-6);
  CHECK(cg.trace.records.size() == 9);

  // Finite termination on a well-conditioned 2 x 2 system.
  RowMatrix x(2, 1), cc(2, 1);
  x << 0, 10;
  cc << 0, 10;
  Vector y(2);
  y << 1, 2;
  const auto tiny =
      cg_nystrom_unpreconditioned(Features(x), Matrix(y), Features(cc), KernelSpec::gaussian(0.1), 0.5, 2);
  const auto tiny_direct =
      nystrom_direct(Features(x), Matrix(y), Features(cc), KernelSpec::gaussian(0.1), 0.5);
  CHECK(rel_diff(tiny.model.alpha, tiny_direct.model.alpha) < 1e-14);
}

TEST_CASE("iterative baselines ignore block size") {
  const auto p = make_problem(64, 2, 6);
  const auto k = KernelSpec::gaussian(1.0);
  const std::vector<Index> idx{1, 2, 3, 4, 5};
  const Features c = p.x.select(idx);
  IterativeOptions a, b;
  a.block_rows = 1;
  b.block_rows = 13;
  b.cache_kernel = true;
  CHECK(gd_nystrom(p.x, Matrix(p.y), c, k, 1e-3, 10, 0.5, {}, a).model.alpha ==
        gd_nystrom(p.x, Matrix(p.y), c, k, 1e-3, 10, 0.5, {}, b).model.alpha);
  CHECK(cg_nystrom_unpreconditioned(p.x, Matrix(p.y), c, k, 1e-3, 5, {}, a).model.alpha ==
        cg_nystrom_unpreconditioned(p.x, Matrix(p.y), c, k, 1e-3, 5, {}, b).model.alpha);
}
