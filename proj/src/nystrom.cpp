#include "falkon/nystrom.hpp"

#include "falkon/linalg.hpp"
#include "falkon/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

namespace falkon {

Index CenterSelection::draws() const {
  return std::accumulate(counts.begin(), counts.end(), Index{0});
}

void CenterSelection::attach(const Features& x) { centers = x.select(source_indices); }

CenterSelection sample_uniform(Index n, Index m, std::uint64_t seed) {
  if (m < 1) throw ArgumentError("need at least one center");
  if (m > n)
    throw ArgumentError("cannot draw " + std::to_string(m) +
                        " distinct centers from " + std::to_string(n) + " points");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  for (Index i = 0; i < m; ++i) {
    const auto j = i + static_cast<Index>(rng.bounded(static_cast<std::uint64_t>(n - i)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  CenterSelection sel;
  sel.source_indices.assign(perm.begin(), perm.begin() + m);
  sel.counts.assign(static_cast<std::size_t>(m), 1);
  sel.d_diag = Vector::Ones(m);
  sel.scheme = UniformScheme{};
  return sel;
}

CenterSelection all_points(Index n) {
  CenterSelection sel;
  sel.source_indices.resize(static_cast<std::size_t>(n));
  std::iota(sel.source_indices.begin(), sel.source_indices.end(), Index{0});
  sel.counts.assign(static_cast<std::size_t>(n), 1);
  sel.d_diag = Vector::Ones(n);
  sel.scheme = UniformScheme{};
  return sel;
}

LeverageScores exact_leverage_scores(const Matrix& knn, double lambda) {
  if (!(lambda > 0.0)) throw ArgumentError("leverage scores need lambda > 0");
  if (knn.rows() != knn.cols()) throw ArgumentError("kernel matrix must be square");
  const Index n = knn.rows();
  const auto eig = linalg::sym_eig(knn);
  const double ln = lambda * static_cast<double>(n);
  // l_i = sum_j U_ij^2 mu_j / (mu_j + lambda n), negative mu clipped to 0.
  const Vector ratio =
      eig.values.unaryExpr([ln](double mu) {
        const double m = std::max(mu, 0.0);
        return m / (m + ln);
      });
  LeverageScores out;
  out.scores = eig.vectors.array().square().matrix() * ratio;
  out.lambda = lambda;
  return out;
}

Draws multinomial_counts(Index m, std::span<const double> probs,
                         std::uint64_t seed) {
  if (m < 1) throw ArgumentError("need at least one draw");
  if (probs.empty()) throw ArgumentError("empty probability vector");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw ArgumentError("probabilities must be finite and nonnegative");
    total += p;
  }
  if (!(total > 0.0)) throw ArgumentError("probabilities are all zero");

  std::vector<double> cum(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i] / total;
    cum[i] = acc;
  }
  // The last positive bin absorbs u beyond a cumulative sum rounded below 1.
  std::size_t last = probs.size() - 1;
  while (probs[last] == 0.0) --last;

  std::vector<Index> bins(probs.size(), 0);
  Rng rng(seed);
  for (Index k = 0; k < m; ++k) {
    const double u = rng.uniform();
    auto i = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) -
                                      cum.begin());
    if (i > last) i = last;
    ++bins[i];
  }
  Draws d;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i] > 0) {
      d.indices.push_back(static_cast<Index>(i));
      d.counts.push_back(bins[i]);
    }
  }
  return d;
}

CenterSelection sample_leverage(const LeverageScores& scores, Index m, Index n,
                                std::uint64_t seed, double q_factor) {
  if (scores.scores.size() != n)
    throw ArgumentError("expected " + std::to_string(n) + " leverage scores, got " +
                        std::to_string(scores.scores.size()));
  const double total = scores.scores.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    throw ArgumentError("leverage scores must have a positive finite sum");
  const Vector prob = scores.scores / total;
  const Draws draws = multinomial_counts(
      m, std::span<const double>(prob.data(), static_cast<std::size_t>(n)), seed);

  CenterSelection sel;
  sel.source_indices = draws.indices;
  sel.counts = draws.counts;
  sel.d_diag.resize(sel.kept());
  for (Index j = 0; j < sel.kept(); ++j) {
    const double p = prob(sel.source_indices[static_cast<std::size_t>(j)]);
    const auto c = static_cast<double>(sel.counts[static_cast<std::size_t>(j)]);
    sel.d_diag(j) = std::sqrt(1.0 / (static_cast<double>(n) * p * c));
  }
  sel.scheme = LeverageScheme{scores.lambda, q_factor};
  return sel;
}

LeverageScores load_scores_file(const std::filesystem::path& path, Index n) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<double> vals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    double v;
    const auto [ptr, ec] = std::from_chars(line.data() + b, line.data() + e + 1, v);
    if (ec != std::errc() || ptr != line.data() + e + 1 || !std::isfinite(v) || v < 0.0)
      throw ParseError("invalid leverage score", lineno);
    vals.push_back(v);
  }
  if (static_cast<Index>(vals.size()) != n)
    throw ParseError("scores file has " + std::to_string(vals.size()) +
                     " entries, expected " + std::to_string(n));
  LeverageScores out;
  out.scores = Eigen::Map<Vector>(vals.data(), n);
  out.lambda = 0.0;
  return out;
}

}  // namespace falkon
