#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "falkon/kernels.hpp"
#include "falkon/preconditioner.hpp"
#include "support.hpp"

#include <cmath>

using namespace falkon;
using namespace falkon::testing;

namespace {

Matrix bbt(const Preconditioner& p) {
  const Matrix b = p.dense_b();
  return b * b.transpose();
}

Matrix gaussian_gram(Index m, std::uint64_t seed, double sigma) {
  const RowMatrix c = gaussian_points(m, 3, seed);
  return oracle_kernel_matrix(KernelSpec::gaussian(sigma), c, c);
}

}  // namespace

TEST_CASE("full-rank build on the identity") {
  const Index n = 9;
  const auto p = Preconditioner::build_full_rank(Matrix::Identity(4, 4), 1.0, n);
  CHECK(p.path() == PrecondPath::full_rank);
  CHECK(!p.fell_back());
  CHECK(rel_diff(p.t().matrix(), Matrix::Identity(4, 4)) < 1e-14);
  CHECK(rel_diff(p.a().matrix(), std::sqrt(1.25) * Matrix::Identity(4, 4)) < 1e-14);
  const Vector u = gaussian_vector(4, 1);
  CHECK(rel_diff(p.apply_b(u), u / (std::sqrt(9.0) * std::sqrt(1.25))) < 1e-14);

  const auto z = Preconditioner::build_full_rank(Matrix::Identity(4, 4), 0.0, n);
  CHECK(rel_diff(z.a().matrix(), Matrix::Identity(4, 4) / 2.0) < 1e-14);
}

TEST_CASE("identity factors apply B as a scaling") {
  // lambda = 1 - 1/M makes A = I when K_MM = I.
  const auto p = Preconditioner::build_full_rank(Matrix::Identity(4, 4), 0.75, 4);
  const Vector beta = gaussian_vector(4, 2);
  CHECK(rel_diff(p.apply_b(beta), beta / 2.0) < 1e-14);
  const Vector e1 = Vector::Unit(4, 0);
  CHECK(rel_diff(p.apply_bt(p.apply_b(e1)), e1 / 4.0) < 1e-14);

  const auto one = Preconditioner::build_full_rank(Matrix::Identity(3, 3), 2.0 / 3.0, 1);
  const Vector v = gaussian_vector(3, 3);
  CHECK(rel_diff(one.apply_bt(v), v) < 1e-14);
}

TEST_CASE("factor invariants on a random Gaussian gram") {
  const Index m = 40, n = 500;
  const double lambda = 1e-3;
  const Matrix k = gaussian_gram(m, 4, 2.0);
  const auto p = Preconditioner::build_full_rank(k, lambda, n);
  const Matrix t = p.t().matrix();
  const Matrix a = p.a().matrix();
  Matrix kj = k;
  kj.diagonal().array() += p.jitter();
  CHECK(rel_diff(t.transpose() * t, kj) < 1e-12);
  Matrix s = t * t.transpose() / static_cast<double>(m);
  s.diagonal().array() += lambda;
  CHECK(rel_diff(a.transpose() * a, s) < 1e-12);

  // B B^T = ((n/M) K^2 + lambda n K)^{-1}.
  const Matrix target =
      (static_cast<double>(n) / m * k * k + lambda * n * k).inverse();
  CHECK(rel_diff(bbt(p), target) < 1e-6);
}

TEST_CASE("apply_b and apply_bt against the explicit B") {
  const Index m = 30, n = 200;
  const Matrix k = gaussian_gram(m, 5, 1.5);
  Vector d(m);
  for (Index i = 0; i < m; ++i) d(i) = 0.5 + 0.05 * static_cast<double>(i);
  for (auto backend : {PrecondBackend::pivoted_qr, PrecondBackend::eigendecomposition}) {
    const auto p = Preconditioner::build_rank_deficient(k, d, 1e-3, n, backend);
    const Matrix b = p.dense_b();
    const Vector beta = gaussian_vector(p.rank(), 6);
    const Vector v = gaussian_vector(m, 7);
    CHECK(rel_diff(p.apply_b(beta), b * beta) < 1e-12);
    CHECK(rel_diff(p.apply_bt(v), b.transpose() * v) < 1e-12);
    const double lhs = p.apply_bt(v).dot(beta);
    const double rhs = v.dot(p.apply_b(beta));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs) + 1e-300);
    // D K D = Q T^T T Q^T on the kept range.
    const Matrix q = p.q();
    const Matrix t = p.t().matrix();
    const Matrix dkd = d.asDiagonal() * k * d.asDiagonal();
    CHECK(rel_diff(q * t.transpose() * t * q.transpose(), dkd) < 1e-8);
  }
}

TEST_CASE("rank-deficient paths") {
  // Two duplicated centers: rank M - 1.
  RowMatrix c = gaussian_points(10, 3, 8);
  c.row(7) = c.row(3);
  const Matrix k = oracle_kernel_matrix(KernelSpec::gaussian(1.0), c, c);
  for (auto backend : {PrecondBackend::pivoted_qr, PrecondBackend::eigendecomposition}) {
    const auto p = Preconditioner::build_rank_deficient(k, Vector::Ones(10), 1e-3, 50, backend);
    CHECK(p.rank() == 9);
    CHECK(rel_diff(p.q().transpose() * p.q(), Matrix::Identity(9, 9)) < 1e-12);
  }

  // The eps M jitter absorbs exact singularity; a negative direction beyond it
  // makes the first Cholesky fail and the build fall through.
  Matrix indef = Matrix::Identity(3, 3);
  indef(2, 2) = -1e-6;
  const auto fb = Preconditioner::build_full_rank(indef, 1e-3, 50,
                                                  PrecondBackend::eigendecomposition);
  CHECK(fb.fell_back());
  CHECK(fb.path() == PrecondPath::eigendecomposition);
  CHECK(fb.rank() == 2);

  CHECK_THROWS_AS(Preconditioner::build_rank_deficient(Matrix::Zero(3, 3), Vector::Ones(3),
                                                       1e-3, 5, PrecondBackend::pivoted_qr),
                  ArgumentError);
}

TEST_CASE("cross-path and cross-backend agreement") {
  const Index m = 25, n = 300;
  const Matrix k = gaussian_gram(m, 9, 2.5);
  const auto full = Preconditioner::build_full_rank(k, 1e-2, n);
  const auto qr = Preconditioner::build_rank_deficient(k, Vector::Ones(m), 1e-2, n,
                                                       PrecondBackend::pivoted_qr, 1e-14);
  const auto eig = Preconditioner::build_rank_deficient(k, Vector::Ones(m), 1e-2, n,
                                                        PrecondBackend::eigendecomposition,
                                                        1e-14);
  REQUIRE(qr.rank() == m);
  REQUIRE(eig.rank() == m);
  CHECK(rel_diff(bbt(qr), bbt(full)) < 1e-8);
  CHECK(rel_diff(bbt(eig), bbt(qr)) < 1e-8);
}

TEST_CASE("eigendecomposition backend on diag(4, 1, 0)") {
  Matrix k = Matrix::Zero(3, 3);
  k(0, 0) = 4;
  k(1, 1) = 1;
  const double lambda = 0.1;
  const auto p = Preconditioner::build_rank_deficient(k, Vector::Ones(3), lambda, 7,
                                                      PrecondBackend::eigendecomposition);
  REQUIRE(p.rank() == 2);
  const Matrix q = p.q();
  CHECK(std::abs(q(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(q(1, 1)) == doctest::Approx(1.0));
  CHECK(q(2, 0) == 0.0);
  CHECK(q(2, 1) == 0.0);
  CHECK(p.t()(0, 0) == doctest::Approx(2.0));
  CHECK(p.t()(1, 1) == doctest::Approx(1.0));
  CHECK(p.a()(0, 0) == doctest::Approx(std::sqrt(lambda + 4.0 / 3.0)));
  CHECK(p.a()(1, 1) == doctest::Approx(std::sqrt(lambda + 1.0 / 3.0)));
}

TEST_CASE("backend names") {
  CHECK(parse_backend("qr") == PrecondBackend::pivoted_qr);
  CHECK(parse_backend("eig") == PrecondBackend::eigendecomposition);
  CHECK_THROWS_AS(parse_backend("lu"), ArgumentError);
}
