#include "falkon/baselines.hpp"

#include "falkon/kernel_operator.hpp"
#include "falkon/linalg.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace falkon {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_problem(const Features& x, const Matrix& y, const KernelSpec& kernel,
                   double lambda) {
  if (y.rows() != x.rows())
    throw ArgumentError("labels and features have different row counts");
  if (x.rows() < 1) throw ArgumentError("empty training set");
  if (!(lambda > 0.0)) throw ArgumentError("lambda must be positive");
  kernel.check_dim(x.cols());
}

FalkonModel make_model(const Features& centers, Matrix alpha, const KernelSpec& kernel) {
  FalkonModel m;
  m.centers = centers;
  m.alpha = std::move(alpha);
  m.kernel = kernel;
  return m;
}

// (1/n)|K_nM a - y|^2 + lambda a^T K_MM a, summed over output columns.
double objective(const Matrix& alpha, const Matrix& h, const Matrix& z, double y_term) {
  return y_term + (alpha.array() * (h - 2.0 * z).array()).sum();
}

}  // namespace

FalkonModel krr_direct(const Features& x, const Matrix& y, const KernelSpec& kernel,
                       double lambda, Index cap) {
  check_problem(x, y, kernel, lambda);
  const Index n = x.rows();
  if (n > cap)
    throw CapExceeded("dense kernel ridge regression is limited to n <= " +
                      std::to_string(cap) + " (n = " + std::to_string(n) +
                      "); use the falkon solver");
  Matrix k = kernel_square(kernel, x);
  k.diagonal().array() += lambda * static_cast<double>(n);
  const auto r = linalg::cholesky_upper(k);
  const Matrix alpha =
      linalg::tri_solve(r, linalg::tri_solve(r, y, linalg::TriMode::transpose));
  return make_model(x, alpha, kernel);
}

NystromDirectResult nystrom_direct(const Features& x, const Matrix& y,
                                   const Features& centers, const KernelSpec& kernel,
                                   double lambda, Index cap) {
  check_problem(x, y, kernel, lambda);
  const Index m = centers.rows();
  if (m > cap)
    throw CapExceeded("dense Nystrom solve is limited to M <= " + std::to_string(cap));
  const auto n = static_cast<double>(x.rows());
  const KernelOperator op(x, centers, kernel);
  const Matrix knm = op.dense();
  Matrix h = knm.transpose() * knm / n;
  h.noalias() += lambda * kernel_square(kernel, centers);
  h = 0.5 * (h + h.transpose());
  const Matrix z = knm.transpose() * y / n;

  NystromDirectResult out;
  try {
    const auto r = linalg::cholesky_upper(h);
    const Matrix alpha =
        linalg::tri_solve(r, linalg::tri_solve(r, z, linalg::TriMode::transpose));
    out.model = make_model(centers, alpha, kernel);
    return out;
  } catch (const NotPositiveDefinite&) {
  }
  // Singular H (duplicated or numerically dependent centers): minimum-norm
  // solution over eigenvalues above eps * M * lambda_max.
  const auto eig = linalg::sym_eig(h);
  const double cut = std::numeric_limits<double>::epsilon() *
                     static_cast<double>(m) * std::max(eig.values(0), 0.0);
  Vector inv = Vector::Zero(m);
  for (Index i = 0; i < m; ++i)
    if (eig.values(i) > cut) inv(i) = 1.0 / eig.values(i);
  const Matrix alpha =
      eig.vectors * (inv.asDiagonal() * (eig.vectors.transpose() * z));
  out.model = make_model(centers, alpha, kernel);
  out.pseudo_inverse = true;
  return out;
}

IterativeResult gd_nystrom(const Features& x, const Matrix& y, const Features& centers,
                           const KernelSpec& kernel, double lambda, int t,
                           std::optional<double> tau, const Evaluator& eval,
                           const IterativeOptions& opts) {
  check_problem(x, y, kernel, lambda);
  if (t < 1) throw ArgumentError("iterations must be at least 1");
  if (tau && (!(*tau >= 0.0) || !std::isfinite(*tau)))
    throw ArgumentError("step size tau must be nonnegative and finite");
  const auto n = static_cast<double>(x.rows());
  const KernelOperator op(x, centers, kernel, opts.block_rows, opts.threads,
                          opts.cache_kernel);
  const Matrix kmm = kernel_square(kernel, centers);
  const linalg::BlockOperator h = [&](const Matrix& a) -> Matrix {
    Matrix out = op.apply(a) / n;
    out.noalias() += lambda * kmm * a;
    return out;
  };
  IterativeResult res;
  if (!tau) {
    const double l = linalg::estimate_lambda_max(h, centers.rows(), 20, opts.seed);
    if (!(l > 0.0)) throw ArgumentError("Nystrom operator is zero");
    tau = 1.0 / l;
  }
  res.tau = *tau;

  const Matrix z = op.transpose_times(y) / n;
  const double y_term = y.squaredNorm() / n;
  Matrix alpha = Matrix::Zero(centers.rows(), y.cols());
  Matrix ha = Matrix::Zero(alpha.rows(), alpha.cols());
  const auto t0 = Clock::now();
  for (int it = 1; it <= t; ++it) {
    alpha -= *tau * (ha - z);
    ha = h(alpha);
    if (!alpha.allFinite() || !ha.allFinite()) throw DivergenceError(it);
    IterRecord rec;
    rec.iteration = it;
    rec.objective = objective(alpha, ha, z, y_term);
    if (eval) rec.test_metric = eval(alpha);
    rec.seconds = seconds_since(t0);
    res.trace.records.push_back(rec);
  }
  res.model = make_model(centers, std::move(alpha), kernel);
  return res;
}

IterativeResult cg_nystrom_unpreconditioned(const Features& x, const Matrix& y,
                                            const Features& centers,
                                            const KernelSpec& kernel, double lambda,
                                            int t, const Evaluator& eval,
                                            const IterativeOptions& opts) {
  check_problem(x, y, kernel, lambda);
  if (t < 1) throw ArgumentError("iterations must be at least 1");
  const auto n = static_cast<double>(x.rows());
  const KernelOperator op(x, centers, kernel, opts.block_rows, opts.threads,
                          opts.cache_kernel);
  const Matrix kmm = kernel_square(kernel, centers);
  const linalg::BlockOperator h = [&](const Matrix& a) -> Matrix {
    Matrix out = op.apply(a) / n;
    out.noalias() += lambda * kmm * a;
    return out;
  };
  const Matrix z = op.transpose_times(y) / n;
  const double y_term = y.squaredNorm() / n;

  IterativeResult res;
  const auto t0 = Clock::now();
  linalg::CgOptions cg_opts;
  cg_opts.on_iteration = [&](int it, const Matrix& a, const Matrix& r) {
    IterRecord rec;
    rec.iteration = it;
    // r = z - H a, so a^T H a - 2 a^T z = -a^T (z + r).
    rec.objective = y_term - (a.array() * (z + r).array()).sum();
    if (eval) rec.test_metric = eval(a);
    rec.seconds = seconds_since(t0);
    res.trace.records.push_back(rec);
  };
  const auto cg = linalg::conjugate_gradient(h, z, t, cg_opts);
  res.model = make_model(centers, cg.x, kernel);
  return res;
}

}  // namespace falkon
