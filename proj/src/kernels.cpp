#include "falkon/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace falkon {

KernelSpec KernelSpec::gaussian(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ArgumentError("gaussian kernel needs sigma > 0");
  KernelSpec k;
  k.type_ = KernelType::gaussian;
  k.sigma_ = sigma;
  return k;
}

KernelSpec KernelSpec::gaussian_diag(Vector widths) {
  if (widths.size() == 0) throw ArgumentError("gaussian_diag needs widths");
  for (Index j = 0; j < widths.size(); ++j)
    if (!(widths(j) > 0.0) || !std::isfinite(widths(j)))
      throw ArgumentError("gaussian_diag widths must be positive");
  KernelSpec k;
  k.type_ = KernelType::gaussian_diag;
  k.widths_ = std::move(widths);
  return k;
}

KernelSpec KernelSpec::linear() { return KernelSpec(); }

std::string KernelSpec::name() const {
  switch (type_) {
    case KernelType::gaussian: return "gaussian";
    case KernelType::gaussian_diag: return "gaussian_diag";
    case KernelType::linear: return "linear";
  }
  return "unknown";
}

KernelType KernelSpec::parse_type(const std::string& name) {
  if (name == "gaussian") return KernelType::gaussian;
  if (name == "gaussian_diag") return KernelType::gaussian_diag;
  if (name == "linear") return KernelType::linear;
  throw ArgumentError("unknown kernel '" + name + "'");
}

void KernelSpec::check_dim(Index d) const {
  if (type_ == KernelType::gaussian_diag && widths_.size() != d)
    throw ArgumentError("gaussian_diag has " + std::to_string(widths_.size()) +
                        " widths for " + std::to_string(d) + " features");
}

namespace {

// Per-entry summation runs in feature-index order so every entry is
// reproducible regardless of how rows are blocked.

double sq_dist(const double* x, const double* y, Index d) {
  double s = 0.0;
  for (Index k = 0; k < d; ++k) {
    const double t = x[k] - y[k];
    s += t * t;
  }
  return s;
}

double sq_dist_weighted(const double* x, const double* y, const double* w,
                        Index d) {
  double s = 0.0;
  for (Index k = 0; k < d; ++k) {
    const double t = x[k] - y[k];
    s += t * t * w[k];
  }
  return s;
}

double dot_dense(const double* x, const double* y, Index d) {
  double s = 0.0;
  for (Index k = 0; k < d; ++k) s += x[k] * y[k];
  return s;
}

// w == nullptr means unit weights.
double dot_sparse_sparse(const SparseRow& a, const SparseRow& b,
                         const double* w) {
  double s = 0.0;
  Index i = 0, j = 0;
  while (i < a.nnz() && j < b.nnz()) {
    const Index ca = a.indices[i], cb = b.indices[j];
    if (ca == cb) {
      s += a.values[i] * b.values[j] * (w ? w[ca] : 1.0);
      ++i;
      ++j;
    } else if (ca < cb) {
      ++i;
    } else {
      ++j;
    }
  }
  return s;
}

double dot_sparse_dense(const SparseRow& a, const double* y, const double* w) {
  double s = 0.0;
  for (Index k = 0; k < a.nnz(); ++k) {
    const Index c = a.indices[k];
    s += a.values[k] * y[c] * (w ? w[c] : 1.0);
  }
  return s;
}

double sq_norm_sparse(const SparseRow& a, const double* w) {
  return dot_sparse_sparse(a, a, w);
}

double sq_norm_dense(const double* x, const double* w, Index d) {
  double s = 0.0;
  for (Index k = 0; k < d; ++k) s += x[k] * x[k] * (w ? w[k] : 1.0);
  return s;
}

/// Inverse squared widths scaled by 1/2, or a uniform 1/(2 sigma^2).
struct GaussianWeights {
  Vector w;        // per-feature 1/(2 w_j^2); empty for the scalar variant
  double scale{};  // 1/(2 sigma^2) for the scalar variant, else 1

  GaussianWeights(const KernelSpec& spec) {
    if (spec.type() == KernelType::gaussian_diag) {
      w = (2.0 * spec.widths().array().square()).inverse();
      scale = 1.0;
    } else {
      scale = 1.0 / (2.0 * spec.sigma() * spec.sigma());
    }
  }
  const double* ptr() const { return w.size() ? w.data() : nullptr; }
};

/// Accessor over one row of either representation.
struct RowRef {
  const SparseRow* sparse = nullptr;
  const double* dense = nullptr;
};

RowRef row_ref(const Features& f, Index i) {
  if (f.is_sparse()) return {&f.sparse()[static_cast<std::size_t>(i)], nullptr};
  return {nullptr, f.dense().data() + i * f.cols()};
}

double dot_rows(const RowRef& a, const RowRef& b, const double* w, Index d) {
  if (a.sparse && b.sparse) return dot_sparse_sparse(*a.sparse, *b.sparse, w);
  if (a.sparse) return dot_sparse_dense(*a.sparse, b.dense, w);
  if (b.sparse) return dot_sparse_dense(*b.sparse, a.dense, w);
  if (!w) return dot_dense(a.dense, b.dense, d);
  double s = 0.0;
  for (Index k = 0; k < d; ++k) s += a.dense[k] * b.dense[k] * w[k];
  return s;
}

double sq_norm_row(const RowRef& a, const double* w, Index d) {
  return a.sparse ? sq_norm_sparse(*a.sparse, w) : sq_norm_dense(a.dense, w, d);
}

void check_pair(const KernelSpec& spec, const Features& a, const Features& b) {
  if (a.cols() != b.cols())
    throw ArgumentError("dimension mismatch: " + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.cols()));
  spec.check_dim(a.cols());
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> xp) {
  if (x.size() != xp.size()) throw ArgumentError("dimension mismatch");
  const auto d = static_cast<Index>(x.size());
  spec.check_dim(d);
  switch (spec.type()) {
    case KernelType::linear:
      return dot_dense(x.data(), xp.data(), d);
    case KernelType::gaussian: {
      const GaussianWeights g(spec);
      return std::exp(-g.scale * sq_dist(x.data(), xp.data(), d));
    }
    case KernelType::gaussian_diag: {
      const GaussianWeights g(spec);
      return std::exp(-sq_dist_weighted(x.data(), xp.data(), g.ptr(), d));
    }
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& spec, const Features& a, Index i,
                   const Features& b, Index j) {
  check_pair(spec, a, b);
  const Index d = a.cols();
  const RowRef ra = row_ref(a, i), rb = row_ref(b, j);
  if (spec.type() == KernelType::linear) return dot_rows(ra, rb, nullptr, d);
  const GaussianWeights g(spec);
  double dist;
  if (ra.dense && rb.dense) {
    dist = g.ptr() ? sq_dist_weighted(ra.dense, rb.dense, g.ptr(), d)
                   : g.scale * sq_dist(ra.dense, rb.dense, d);
  } else {
    dist = sq_norm_row(ra, g.ptr(), d) + sq_norm_row(rb, g.ptr(), d) -
           2.0 * dot_rows(ra, rb, g.ptr(), d);
    dist = g.scale * std::max(dist, 0.0);
  }
  return std::exp(-dist);
}

Matrix kernel_block(const KernelSpec& spec, const Features& x, Index begin,
                    Index end, const Features& centers) {
  check_pair(spec, x, centers);
  if (begin < 0 || end > x.rows() || begin > end)
    throw ArgumentError("row range out of bounds");
  const Index rows = end - begin;
  const Index m = centers.rows();
  const Index d = x.cols();
  Matrix out(rows, m);

  if (spec.type() == KernelType::linear) {
    for (Index j = 0; j < m; ++j) {
      const RowRef c = row_ref(centers, j);
      for (Index i = 0; i < rows; ++i)
        out(i, j) = dot_rows(row_ref(x, begin + i), c, nullptr, d);
    }
    return out;
  }

  const GaussianWeights g(spec);
  if (!x.is_sparse() && !centers.is_sparse()) {
    for (Index j = 0; j < m; ++j) {
      const double* c = centers.dense().data() + j * d;
      for (Index i = 0; i < rows; ++i) {
        const double* r = x.dense().data() + (begin + i) * d;
        const double dist = g.ptr() ? sq_dist_weighted(r, c, g.ptr(), d)
                                    : g.scale * sq_dist(r, c, d);
        out(i, j) = std::exp(-dist);
      }
    }
    return out;
  }

  // Any sparse operand: |x|^2 + |c|^2 - 2<x, c>, clamped at zero.
  Vector cnorm(m);
  for (Index j = 0; j < m; ++j) cnorm(j) = sq_norm_row(row_ref(centers, j), g.ptr(), d);
  for (Index i = 0; i < rows; ++i) {
    const RowRef r = row_ref(x, begin + i);
    const double rn = sq_norm_row(r, g.ptr(), d);
    for (Index j = 0; j < m; ++j) {
      const double dist =
          rn + cnorm(j) - 2.0 * dot_rows(r, row_ref(centers, j), g.ptr(), d);
      out(i, j) = std::exp(-g.scale * std::max(dist, 0.0));
    }
  }
  return out;
}

Matrix kernel_square(const KernelSpec& spec, const Features& centers) {
  if (centers.rows() < 1) throw ArgumentError("need at least one center");
  Matrix k = kernel_block(spec, centers, centers);
  // Mirror the upper triangle so the result is exactly symmetric.
  k.triangularView<Eigen::StrictlyLower>() = k.transpose();
  return k;
}

}  // namespace falkon
