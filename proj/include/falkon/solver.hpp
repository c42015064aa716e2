#pragma once

#include "falkon/data.hpp"
#include "falkon/kernels.hpp"
#include "falkon/nystrom.hpp"
#include "falkon/preconditioner.hpp"
#include "falkon/trace.hpp"
#include "falkon/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>

namespace falkon {

struct UniformSampling {};
/// Approximate leverage scores supplied as a file, one score per row.
struct LeverageFromFile {
  std::filesystem::path path;
  double q_factor = 1.0;
};
/// Exact leverage scores at regularization `lambda` (O(n^3), capped).
struct LeverageExact {
  double lambda = 0.0;
};
using SamplingConfig = std::variant<UniformSampling, LeverageFromFile, LeverageExact>;

struct FalkonConfig {
  KernelSpec kernel = KernelSpec::gaussian(1.0);
  double lambda = 1e-6;
  Index num_centers = 100;
  int iterations = 20;
  SamplingConfig sampling = UniformSampling{};
  std::uint64_t seed = 0;
  /// Rows per kernel block; 0 means M.
  Index block_rows = 0;
  /// Worker threads for kernel blocks; 0 means every core.
  int threads = 0;
  /// Keep all of K_nM in memory between iterations.
  bool cache_kernel = false;
  PrecondBackend backend = PrecondBackend::pivoted_qr;
  double rank_tol = 1e-10;
  /// Optional relative residual stop for CG; 0 runs exactly `iterations`.
  double residual_tol = 0.0;
  Index exact_leverage_cap = 5000;

  void validate() const;
};

/// f(x) = sum_j alpha_j K(x, c_j), one column of alpha per output.
struct FalkonModel {
  Features centers;
  Matrix alpha;
  KernelSpec kernel = KernelSpec::linear();
  /// When present, predictions first z-score the inputs with these stats.
  std::optional<NormStats> norm_stats;

  Index outputs() const { return alpha.cols(); }
};

struct RunReport {
  IterTrace trace;
  Index kept_centers = 0;
  Index draws = 0;
  Index rank = 0;
  PrecondPath path = PrecondPath::full_rank;
  bool fell_back = false;
  int iterations_run = 0;
  /// Step size used by the basic gradient variant.
  double tau = 0.0;
  double seconds_centers = 0.0;
  double seconds_preconditioner = 0.0;
  double seconds_iterations = 0.0;
};

struct TrainResult {
  FalkonModel model;
  RunReport report;
  CenterSelection selection;
  Preconditioner preconditioner;
};

/// Center selection as configured (uniform, leverage file or exact leverage).
CenterSelection select_centers(const Features& x, const FalkonConfig& cfg);

/// Full-rank path for uniform selections (falling back to the rank-revealing
/// path if K_MM is numerically singular); rank-revealing path with D otherwise.
Preconditioner make_preconditioner(const CenterSelection& selection,
                                   const FalkonConfig& cfg, Index n);

/// FALKON on fixed centers: builds K_MM and the preconditioner, runs
/// `cfg.iterations` CG steps on
///
///   W u = A^{-T} ( T^{-T} Q^T D K_nM^T K_nM D Q T^{-1} A^{-1} u / n
///                  + lambda A^{-1} u ),
///   r   = A^{-T} T^{-T} Q^T D K_nM^T y / n,
///
/// and returns alpha = D Q T^{-1} A^{-1} beta. One CG recurrence runs per
/// column of `y` on the shared operator.
TrainResult falkon_fit(const Features& x, const Matrix& y, CenterSelection selection,
                       const FalkonConfig& cfg, const Evaluator& eval = {});

TrainResult falkon_train(const Features& x, const Matrix& y, const FalkonConfig& cfg,
                         const Evaluator& eval = {});
TrainResult falkon_train(const Dataset& train, const FalkonConfig& cfg,
                         const Evaluator& eval = {});

/// Preconditioned gradient descent:
///   beta_k = beta_{k-1} - (tau/n) B^T [K_nM^T (K_nM B beta - y) + lambda n K_MM B beta].
/// Without `tau`, tau = n / lambda_max(W) from 20 power iterations.
TrainResult falkon_train_basic_gradient(const Features& x, const Matrix& y,
                                        CenterSelection selection,
                                        const FalkonConfig& cfg,
                                        std::optional<double> tau = std::nullopt,
                                        const Evaluator& eval = {});
TrainResult falkon_train_basic_gradient(const Dataset& train, const FalkonConfig& cfg,
                                        std::optional<double> tau = std::nullopt,
                                        const Evaluator& eval = {});

/// n x outputs predictions, evaluated in blocks of `block_rows` rows.
Matrix falkon_predict(const FalkonModel& model, const Features& x,
                      Index block_rows = 0);

/// Model file: see docs/formats.md. Throws FormatError on a bad header,
/// unsupported version or truncated content.
void save_model(const FalkonModel& model, const std::filesystem::path& path);
FalkonModel load_model(const std::filesystem::path& path);

}  // namespace falkon
