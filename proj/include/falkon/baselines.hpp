#pragma once

#include "falkon/data.hpp"
#include "falkon/kernels.hpp"
#include "falkon/nystrom.hpp"
#include "falkon/solver.hpp"
#include "falkon/trace.hpp"

#include <optional>

namespace falkon {

inline constexpr Index kDefaultDenseCap = 4000;

/// Exact kernel ridge regression, (K_nn + lambda n I) alpha = y, by Cholesky.
/// Every training point is a center. Throws CapExceeded for n > cap.
FalkonModel krr_direct(const Features& x, const Matrix& y, const KernelSpec& kernel,
                       double lambda, Index cap = kDefaultDenseCap);

struct NystromDirectResult {
  FalkonModel model;
  /// Set when H was singular in floating point and the minimum-norm solution
  /// over its numerical range was returned instead.
  bool pseudo_inverse = false;
};

/// Dense solve of the Nystrom system
///
///   (K_nM^T K_nM / n + lambda K_MM) alpha = K_nM^T y / n
///
/// on the selected centers. The D reweighting does not change this system
/// (it only changes the parameterization), so it is ignored here.
NystromDirectResult nystrom_direct(const Features& x, const Matrix& y,
                                   const Features& centers, const KernelSpec& kernel,
                                   double lambda, Index cap = kDefaultDenseCap);

struct IterativeOptions {
  Index block_rows = 0;
  int threads = 0;
  bool cache_kernel = false;
  std::uint64_t seed = 0;
};

struct IterativeResult {
  FalkonModel model;
  IterTrace trace;
  /// Step size used (gradient descent only).
  double tau = 0.0;
};

/// Gradient descent on the normalized Nystrom quadratic from alpha_0 = 0:
///   alpha_k = alpha_{k-1} - tau (H alpha_{k-1} - z),
///   H = K_nM^T K_nM / n + lambda K_MM, z = K_nM^T y / n.
/// Without `tau`, tau = 1 / L with L the 20-step power-iteration estimate of
/// lambda_max(H).
IterativeResult gd_nystrom(const Features& x, const Matrix& y, const Features& centers,
                           const KernelSpec& kernel, double lambda, int t,
                           std::optional<double> tau = std::nullopt,
                           const Evaluator& eval = {}, const IterativeOptions& opts = {});

/// Conjugate gradient on the same system without preconditioning.
IterativeResult cg_nystrom_unpreconditioned(const Features& x, const Matrix& y,
                                            const Features& centers,
                                            const KernelSpec& kernel, double lambda,
                                            int t, const Evaluator& eval = {},
                                            const IterativeOptions& opts = {});

}  // namespace falkon
