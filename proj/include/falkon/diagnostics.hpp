#pragma once

#include "falkon/data.hpp"
#include "falkon/kernels.hpp"
#include "falkon/preconditioner.hpp"
#include "falkon/types.hpp"

#include <optional>
#include <ostream>

namespace falkon {

/// The q x q matrix the solver's CG runs on,
///
///   W = A^{-T} ( T^{-T} Q^T D K_nM^T K_nM D Q T^{-1} / n + lambda I ) A^{-1},
///
/// formed column by column. Equals B^T (K_nM^T K_nM + lambda n K_MM) B up to
/// the jitter added to K_MM. Throws CapExceeded for q > cap.
Matrix explicit_w(const Features& x, const Features& centers, const KernelSpec& kernel,
                  const Preconditioner& pc, Index cap = 4000);

/// lambda_max / lambda_min of the symmetrized explicit W; infinity when the
/// smallest eigenvalue is not positive.
double condition_number_w(const Features& x, const Features& centers,
                          const KernelSpec& kernel, const Preconditioner& pc,
                          Index cap = 4000);

/// tr(K (K + lambda n I)^{-1}) = n - lambda n tr((K + lambda n I)^{-1}), with the
/// inverse trace taken from a Cholesky factor.
double effective_dimension(const Matrix& knn, double lambda);

/// n * max_i l_i(lambda) over the exact leverage scores.
double n_infinity_empirical(const Matrix& knn, double lambda);

/// ceil(5 (1 + 14 kappa^2 / lambda) ln(8 kappa^2 / (lambda delta))), at least 1.
Index suggested_m_uniform(double lambda, double kappa_sq, double delta);

/// ceil(215 (2 + q^2 N(lambda)) ln(8 kappa^2 / (lambda delta))), at least 1.
Index suggested_m_leverage(double lambda, double eff_dim, double q_factor,
                           double kappa_sq, double delta);

/// log(1 + 2 / (sqrt(cond) - 1)); infinity at cond = 1.
double convergence_rate_nu(double cond_w);

/// max_i K(x_i, x_i).
double kappa_squared(const KernelSpec& kernel, const Features& x);

struct TheoryReport {
  std::optional<double> cond_w;
  std::optional<double> nu;
  std::optional<double> eff_dim;
  std::optional<double> n_inf_emp;
  Index suggested_m_uniform = 0;
  std::optional<Index> suggested_m_leverage;
  double kappa_sq = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
  double q_factor = 1.0;

  /// "key = value" lines; unavailable entries read "n/a".
  void write_text(std::ostream& out) const;
};

struct TheoryOptions {
  double delta = 0.1;
  double q_factor = 1.0;
  /// Dense quantities (K_nn for N(lambda), W) are skipped above this size.
  Index cap = 4000;
};

TheoryReport theory_report(const Features& x, const Features& centers,
                           const KernelSpec& kernel, const Preconditioner& pc,
                           const TheoryOptions& opts = {});

}  // namespace falkon
