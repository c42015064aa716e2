#pragma once

#include "falkon/data.hpp"
#include "falkon/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace falkon {

struct UniformScheme {
  bool operator==(const UniformScheme&) const = default;
};
struct LeverageScheme {
  double lambda = 0.0;    // regularization the scores were computed at
  double q_factor = 1.0;  // approximation factor of the scores
  bool operator==(const LeverageScheme&) const = default;
};
using SamplingScheme = std::variant<UniformScheme, LeverageScheme>;

/// The kept Nystrom centers and the diagonal reweighting D.
///
/// Leverage sampling draws with replacement, so several draws may land on the
/// same training row; such rows are kept once with their multiplicity in
/// `counts`, and `draws()` is the requested number of centers.
struct CenterSelection {
  Features centers;
  std::vector<Index> source_indices;
  std::vector<Index> counts;
  Vector d_diag;
  SamplingScheme scheme;

  Index kept() const { return static_cast<Index>(source_indices.size()); }
  Index draws() const;
  bool is_uniform() const { return std::holds_alternative<UniformScheme>(scheme); }

  /// Fills `centers` with the selected rows of `x`.
  void attach(const Features& x);
};

struct LeverageScores {
  Vector scores;
  double lambda = 0.0;
};

/// M distinct rows, drawn without replacement (partial Fisher-Yates).
CenterSelection sample_uniform(Index n, Index m, std::uint64_t seed);

/// Every row as a center, in order, with D = I.
CenterSelection all_points(Index n);

/// diag(K (K + lambda n I)^{-1}) through an eigendecomposition of K.
LeverageScores exact_leverage_scores(const Matrix& knn, double lambda);

struct Draws {
  std::vector<Index> indices;  // ascending, distinct
  std::vector<Index> counts;   // same length, each >= 1, sum = M
};

/// M independent draws from the discrete distribution `probs`, collapsed to
/// distinct indices with multiplicities. A draw u ~ U[0, 1) selects the bin i
/// with c_{i-1} <= u < c_i on the cumulative sums of the normalized probs.
Draws multinomial_counts(Index m, std::span<const double> probs,
                         std::uint64_t seed);

/// p_i = score_i / sum(scores); D_jj = sqrt(1 / (n p_{i_j} count_j)).
CenterSelection sample_leverage(const LeverageScores& scores, Index m, Index n,
                                std::uint64_t seed, double q_factor = 1.0);

/// One score per line, `n` lines.
LeverageScores load_scores_file(const std::filesystem::path& path, Index n);

}  // namespace falkon
