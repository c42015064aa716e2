#include "falkon/diagnostics.hpp"

#include "falkon/linalg.hpp"
#include "falkon/nystrom.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

namespace falkon {

Matrix explicit_w(const Features& x, const Features& centers, const KernelSpec& kernel,
                  const Preconditioner& pc, Index cap) {
  const Index q = pc.rank();
  if (q > cap) throw CapExceeded("explicit W is limited to rank <= " + std::to_string(cap));
  if (centers.rows() != pc.m())
    throw ArgumentError("centers do not match the preconditioner");
  const auto n = static_cast<double>(x.rows());
  // K_nM^T (K_nM L) over M-row blocks with dense products; a diagnostic, so
  // the order-independent operator path is not needed here.
  const Index m = centers.rows();
  const Matrix au = pc.solve_a(Matrix::Identity(q, q));
  const Matrix lifted = pc.lift_t(au);
  Matrix acc = Matrix::Zero(m, q);
  for (Index lo = 0; lo < x.rows(); lo += m) {
    const Matrix kb = kernel_block(kernel, x, lo, std::min(x.rows(), lo + m), centers);
    acc.noalias() += kb.transpose() * (kb * lifted);
  }
  Matrix inner = pc.lift_t_transpose(acc / n);
  inner += pc.lambda() * au;
  return pc.solve_at(inner);
}

double condition_number_w(const Features& x, const Features& centers,
                          const KernelSpec& kernel, const Preconditioner& pc, Index cap) {
  const Matrix w = explicit_w(x, centers, kernel, pc, cap);
  const auto eig = linalg::sym_eig(0.5 * (w + w.transpose()));
  const double lo = eig.values(eig.values.size() - 1);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return eig.values(0) / lo;
}

double effective_dimension(const Matrix& knn, double lambda) {
  if (!(lambda > 0.0)) throw ArgumentError("lambda must be positive");
  if (knn.rows() != knn.cols()) throw ArgumentError("kernel matrix must be square");
  const Index n = knn.rows();
  const double ln = lambda * static_cast<double>(n);
  Matrix s = knn;
  s.diagonal().array() += ln;
  const auto r = linalg::cholesky_upper(s);
  // (K + lambda n I)^{-1} = R^{-1} R^{-T}, whose trace is |R^{-1}|_F^2.
  const Matrix rinv = linalg::tri_solve(r, Matrix(Matrix::Identity(n, n)));
  return static_cast<double>(n) - ln * rinv.squaredNorm();
}

double n_infinity_empirical(const Matrix& knn, double lambda) {
  const LeverageScores s = exact_leverage_scores(knn, lambda);
  return static_cast<double>(knn.rows()) * s.scores.maxCoeff();
}

namespace {

void check_theory_args(double lambda, double kappa_sq, double delta) {
  if (!(lambda > 0.0)) throw ArgumentError("lambda must be positive");
  if (!(kappa_sq > 0.0)) throw ArgumentError("kappa^2 must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw ArgumentError("delta must lie in (0, 1]");
}

Index ceil_count(double v) {
  if (!std::isfinite(v) || v > 9.0e18) throw ArgumentError("suggested M overflows");
  return std::max<Index>(1, static_cast<Index>(std::ceil(v)));
}

}  // namespace

Index suggested_m_uniform(double lambda, double kappa_sq, double delta) {
  check_theory_args(lambda, kappa_sq, delta);
  return ceil_count(5.0 * (1.0 + 14.0 * kappa_sq / lambda) *
                    std::log(8.0 * kappa_sq / (lambda * delta)));
}

Index suggested_m_leverage(double lambda, double eff_dim, double q_factor,
                           double kappa_sq, double delta) {
  check_theory_args(lambda, kappa_sq, delta);
  if (!(eff_dim >= 0.0)) throw ArgumentError("effective dimension must be nonnegative");
  if (!(q_factor >= 1.0)) throw ArgumentError("q factor must be at least 1");
  return ceil_count(215.0 * (2.0 + q_factor * q_factor * eff_dim) *
                    std::log(8.0 * kappa_sq / (lambda * delta)));
}

double convergence_rate_nu(double cond_w) {
  if (!(cond_w >= 1.0)) throw ArgumentError("condition number must be at least 1");
  const double s = std::sqrt(cond_w) - 1.0;
  if (s <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log1p(2.0 / s);
}

double kappa_squared(const KernelSpec& kernel, const Features& x) {
  double k = 0.0;
  for (Index i = 0; i < x.rows(); ++i) k = std::max(k, kernel_eval(kernel, x, i, x, i));
  return k;
}

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string fmt_opt(const std::optional<T>& v) {
  if (!v) return "n/a";
  if constexpr (std::is_floating_point_v<T>)
    return fmt(*v);
  else
    return std::to_string(*v);
}

}  // namespace

void TheoryReport::write_text(std::ostream& out) const {
  out << "lambda = " << fmt(lambda) << '\n'
      << "delta = " << fmt(delta) << '\n'
      << "q_factor = " << fmt(q_factor) << '\n'
      << "kappa_sq = " << fmt(kappa_sq) << '\n'
      << "cond_W = " << fmt_opt(cond_w) << '\n'
      << "nu = " << fmt_opt(nu) << '\n'
      << "eff_dim = " << fmt_opt(eff_dim) << '\n'
      << "n_inf_emp = " << fmt_opt(n_inf_emp) << '\n'
      << "suggested_M_uniform = " << suggested_m_uniform << '\n'
      << "suggested_M_leverage = " << fmt_opt(suggested_m_leverage) << '\n';
}

TheoryReport theory_report(const Features& x, const Features& centers,
                           const KernelSpec& kernel, const Preconditioner& pc,
                           const TheoryOptions& opts) {
  TheoryReport r;
  r.lambda = pc.lambda();
  r.delta = opts.delta;
  r.q_factor = opts.q_factor;
  r.kappa_sq = kappa_squared(kernel, x);
  r.suggested_m_uniform = suggested_m_uniform(r.lambda, r.kappa_sq, r.delta);
  if (pc.rank() <= opts.cap) {
    r.cond_w = condition_number_w(x, centers, kernel, pc, opts.cap);
    if (std::isfinite(*r.cond_w)) r.nu = convergence_rate_nu(std::max(1.0, *r.cond_w));
  }
  if (x.rows() <= opts.cap) {
    const Matrix knn = kernel_square(kernel, x);
    r.eff_dim = effective_dimension(knn, r.lambda);
    r.n_inf_emp = n_infinity_empirical(knn, r.lambda);
    r.suggested_m_leverage =
        suggested_m_leverage(r.lambda, *r.eff_dim, r.q_factor, r.kappa_sq, r.delta);
  }
  return r;
}

}  // namespace falkon
