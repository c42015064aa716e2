#include "falkon/kernel_operator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace falkon {

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

KernelOperator::KernelOperator(const Features& x, const Features& centers,
                               KernelSpec kernel, Index block_rows, int threads,
                               bool cache)
    : x_(&x), centers_(&centers), kernel_(std::move(kernel)),
      threads_(resolve_threads(threads)) {
  if (x.cols() != centers.cols())
    throw ArgumentError("data and centers have different dimensions");
  kernel_.check_dim(x.cols());
  const Index n = x.rows();
  const Index m = centers.rows();
  if (m < 1) throw ArgumentError("need at least one center");
  const Index rows = block_rows > 0 ? block_rows : m;
  const Index blocks = std::max<Index>(1, (n + rows - 1) / rows);
  bounds_.resize(static_cast<std::size_t>(blocks + 1));
  for (Index i = 0; i <= blocks; ++i)
    bounds_[static_cast<std::size_t>(i)] = (i * n + blocks - 1) / blocks;
  if (cache) {
    cache_.resize(static_cast<std::size_t>(blocks));
    for (Index b = 0; b < blocks; ++b)
      cache_[static_cast<std::size_t>(b)] =
          kernel_block(kernel_, x, bounds_[static_cast<std::size_t>(b)],
                       bounds_[static_cast<std::size_t>(b) + 1], centers);
  }
}

const Matrix& KernelOperator::block(Index b, Matrix& scratch) const {
  if (!cache_.empty()) return cache_[static_cast<std::size_t>(b)];
  scratch = kernel_block(kernel_, *x_, bounds_[static_cast<std::size_t>(b)],
                         bounds_[static_cast<std::size_t>(b) + 1], *centers_);
  return scratch;
}

Matrix KernelOperator::apply(const Matrix& u, const Matrix& v) const {
  Vector unused;
  return apply(u, v, unused);
}

namespace {

// out(j, c) += sum_i w(i, c) k(i, j), one scalar accumulator per entry running
// over the rows in order, so the sum is the same sequence of additions however
// the rows are cut into blocks. Column ranges are split across threads.
void accumulate_rows(const std::vector<const Matrix*>& ks,
                     const std::vector<Matrix>& ws, Matrix& out, int threads) {
  const Index m = out.rows();
  const Index k = out.cols();
  // Eight independent accumulators per pass keep the add pipeline busy.
  constexpr Index kStrip = 8;
  const Index strips = (m + kStrip - 1) / kStrip;
#pragma omp parallel for schedule(static) num_threads(threads)
  for (Index s = 0; s < strips; ++s) {
    const Index j0 = s * kStrip;
    const Index width = std::min(kStrip, m - j0);
    for (Index c = 0; c < k; ++c) {
      double acc[kStrip] = {};
      for (Index j = 0; j < width; ++j) acc[j] = out(j0 + j, c);
      for (std::size_t b = 0; b < ks.size(); ++b) {
        const Matrix& kb = *ks[b];
        const double* wc = ws[b].col(c).data();
        const Index rows = kb.rows();
        const Index ld = kb.outerStride();
        const double* base = kb.data() + j0 * ld;
        if (width == kStrip) {
          for (Index i = 0; i < rows; ++i) {
            const double w = wc[i];
            const double* p = base + i;
            for (Index j = 0; j < kStrip; ++j) acc[j] += w * p[j * ld];
          }
        } else {
          for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < width; ++j) acc[j] += wc[i] * base[j * ld + i];
        }
      }
      for (Index j = 0; j < width; ++j) out(j0 + j, c) = acc[j];
    }
  }
}

// t = k u as axpy updates over the columns of k; each entry accumulates over j
// in order, independent of which block holds its row.
Matrix times_block(const Matrix& kb, const Matrix& u) {
  Matrix t = Matrix::Zero(kb.rows(), u.cols());
  for (Index c = 0; c < u.cols(); ++c)
    for (Index j = 0; j < kb.cols(); ++j) t.col(c) += u(j, c) * kb.col(j);
  return t;
}

}  // namespace

template <class PerBlock, class PerWave>
void KernelOperator::for_each_wave(PerBlock&& per_block, PerWave&& per_wave) const {
  // One block per worker is held at a time.
  const Index blocks = num_blocks();
  const Index wave = std::max<Index>(1, threads_);
  std::vector<Matrix> scratch(static_cast<std::size_t>(wave));
  std::vector<const Matrix*> ks(static_cast<std::size_t>(wave));
  std::vector<Matrix> ws(static_cast<std::size_t>(wave));
  for (Index first = 0; first < blocks; first += wave) {
    const Index count = std::min(wave, blocks - first);
    ks.resize(static_cast<std::size_t>(count));
    ws.resize(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads_)
    for (Index s = 0; s < count; ++s) {
      const auto us = static_cast<std::size_t>(s);
      const Index b = first + s;
      const Index lo = bounds_[static_cast<std::size_t>(b)];
      const Index hi = bounds_[static_cast<std::size_t>(b) + 1];
      ks[us] = &block(b, scratch[us]);
      ws[us] = per_block(*ks[us], lo, hi);
    }
    per_wave(ks, ws);
  }
}

Matrix KernelOperator::apply(const Matrix& u, const Matrix& v,
                             Vector& sq_norms) const {
  if (u.rows() != m()) throw ArgumentError("apply: u must have M rows");
  const bool has_v = v.size() > 0;
  if (has_v && (v.rows() != n() || v.cols() != u.cols()))
    throw ArgumentError("apply: v must be n x columns(u)");
  Matrix out = Matrix::Zero(m(), u.cols());
  sq_norms = Vector::Zero(u.cols());
  for_each_wave(
      [&](const Matrix& kb, Index lo, Index hi) {
        Matrix t = times_block(kb, u);
        if (has_v) t += v.middleRows(lo, hi - lo);
        return t;
      },
      [&](const std::vector<const Matrix*>& ks, const std::vector<Matrix>& ws) {
        for (const Matrix& t : ws)
          for (Index c = 0; c < t.cols(); ++c)
            for (Index i = 0; i < t.rows(); ++i) sq_norms(c) += t(i, c) * t(i, c);
        accumulate_rows(ks, ws, out, threads_);
      });
  return out;
}

Matrix KernelOperator::times(const Matrix& u) const {
  if (u.rows() != m()) throw ArgumentError("times: u must have M rows");
  Matrix out(n(), u.cols());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads_)
  for (Index b = 0; b < num_blocks(); ++b) {
    const Index lo = bounds_[static_cast<std::size_t>(b)];
    const Index hi = bounds_[static_cast<std::size_t>(b) + 1];
    Matrix scratch;
    out.middleRows(lo, hi - lo) = times_block(block(b, scratch), u);
  }
  return out;
}

Matrix KernelOperator::transpose_times(const Matrix& v) const {
  if (v.rows() != n()) throw ArgumentError("transpose_times: v must have n rows");
  Matrix out = Matrix::Zero(m(), v.cols());
  for_each_wave(
      [&](const Matrix&, Index lo, Index hi) { return Matrix(v.middleRows(lo, hi - lo)); },
      [&](const std::vector<const Matrix*>& ks, const std::vector<Matrix>& ws) {
        accumulate_rows(ks, ws, out, threads_);
      });
  return out;
}

Matrix KernelOperator::dense() const {
  Matrix out(n(), m());
  for (Index b = 0; b < num_blocks(); ++b) {
    const Index lo = bounds_[static_cast<std::size_t>(b)];
    const Index hi = bounds_[static_cast<std::size_t>(b) + 1];
    Matrix scratch;
    out.middleRows(lo, hi - lo) = block(b, scratch);
  }
  return out;
}

Vector knm_times_vector(const Features& x, const Features& centers,
                        const KernelSpec& kernel, const Vector& u,
                        const Vector& v, Index block_rows) {
  if (v.size() != x.rows()) throw ArgumentError("v must have n entries");
  const KernelOperator op(x, centers, kernel, block_rows, 1, false);
  return op.apply(Matrix(u), Matrix(v)).col(0);
}

}  // namespace falkon
