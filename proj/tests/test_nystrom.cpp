#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "falkon/nystrom.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace falkon;
using namespace falkon::testing;

TEST_CASE("uniform sampling") {
  const auto all = sample_uniform(10, 10, 3);
  std::vector<Index> sorted = all.source_indices;
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < 10; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
  CHECK(all.d_diag.isOnes());
  CHECK(all.is_uniform());

  const auto one = sample_uniform(10, 1, 4);
  REQUIRE(one.kept() == 1);
  CHECK(one.source_indices[0] >= 0);
  CHECK(one.source_indices[0] < 10);

  const auto a = sample_uniform(100, 20, 5);
  const auto b = sample_uniform(100, 20, 5);
  CHECK(a.source_indices == b.source_indices);
  CHECK(std::set<Index>(a.source_indices.begin(), a.source_indices.end()).size() == 20);
  CHECK(a.draws() == 20);

  CHECK_THROWS_AS(sample_uniform(5, 6, 1), ArgumentError);
}

TEST_CASE("exact leverage scores") {
  const double lambda = 0.05;
  const auto id = exact_leverage_scores(Matrix::Identity(8, 8), lambda);
  for (Index i = 0; i < 8; ++i)
    CHECK(id.scores(i) == doctest::Approx(1.0 / (1.0 + lambda * 8)).epsilon(1e-14));

  const Matrix k = random_spd(15, 2, 0.0);
  const auto big = exact_leverage_scores(k, 1e8 / 15);
  CHECK(big.scores.maxCoeff() < 1e-6);

  const double lam = 1e-2;
  Matrix reg = k;
  reg.diagonal().array() += lam * 15;
  const double trace = (k * reg.llt().solve(Matrix::Identity(15, 15))).trace();
  CHECK(std::abs(exact_leverage_scores(k, lam).scores.sum() - trace) < 1e-8);

  CHECK_THROWS_AS(exact_leverage_scores(k, 0.0), ArgumentError);
}

TEST_CASE("multinomial draws") {
  std::vector<double> point(6, 0.0);
  point[0] = 1.0;
  const auto pm = multinomial_counts(17, point, 1);
  REQUIRE(pm.indices.size() == 1);
  CHECK(pm.indices[0] == 0);
  CHECK(pm.counts[0] == 17);

  const std::vector<double> flat(10, 1.0);
  const auto single = multinomial_counts(1, flat, 2);
  CHECK(single.indices.size() == 1);
  CHECK(single.counts[0] == 1);

  const Index m = 100000;
  const auto many = multinomial_counts(m, flat, 3);
  REQUIRE(many.indices.size() == 10);
  const double mean = m / 10.0;
  const double sd = std::sqrt(m * 0.1 * 0.9);
  for (Index c : many.counts) CHECK(std::abs(static_cast<double>(c) - mean) <= 5 * sd);

  CHECK_THROWS_AS(multinomial_counts(3, std::vector<double>(4, 0.0), 1), ArgumentError);
}

TEST_CASE("leverage sampling reweights by count") {
  const Index n = 12;
  LeverageScores eq{Vector::Ones(n), 0.1};
  const auto sel = sample_leverage(eq, 30, n, 7);
  CHECK(sel.draws() == 30);
  for (Index j = 0; j < sel.kept(); ++j)
    CHECK(sel.d_diag(j) ==
          doctest::Approx(1.0 / std::sqrt(static_cast<double>(
                                    sel.counts[static_cast<std::size_t>(j)])))
              .epsilon(1e-14));
  CHECK(!sel.is_uniform());

  LeverageScores dom{Vector::Constant(n, 1e-15), 0.1};
  dom.scores(4) = 1.0;
  const auto ds = sample_leverage(dom, 25, n, 8);
  REQUIRE(ds.kept() >= 1);
  const auto it = std::find(ds.source_indices.begin(), ds.source_indices.end(), 4);
  REQUIRE(it != ds.source_indices.end());
  const auto j = static_cast<std::size_t>(it - ds.source_indices.begin());
  const double p = 1.0 / (1.0 + 11e-15);
  CHECK(ds.counts[j] == 25);
  CHECK(ds.d_diag(static_cast<Index>(j)) ==
        doctest::Approx(std::sqrt(1.0 / (n * p * 25))).epsilon(1e-12));
}

TEST_CASE("scores file") {
  const auto p = std::filesystem::temp_directory_path() / "falkon_test_scores.txt";
  std::ofstream(p) << "0.5\n0.25\n0.25\n";
  const auto s = load_scores_file(p, 3);
  CHECK(s.scores(1) == 0.25);
  CHECK_THROWS(load_scores_file(p, 4));
}
