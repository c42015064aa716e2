#pragma once

#include "falkon/data.hpp"
#include "falkon/kernels.hpp"
#include "falkon/types.hpp"

#include <vector>

namespace falkon {

/// Blocked products with the n x M kernel matrix K_nM, never holding more
/// than `block_rows` x M kernel entries per worker.
///
/// Rows are cut into ceil(n / block_rows) contiguous blocks with boundaries
/// ceil(i n / blocks). Blocks are evaluated concurrently, one per worker, and
/// every output entry is accumulated over the rows in global row order, so
/// results are bitwise independent of both `block_rows` and the thread count.
class KernelOperator {
 public:
  /// `block_rows` <= 0 selects M. `threads` <= 0 uses every available core.
  /// With `cache` set the whole K_nM is evaluated once and kept. `x` and
  /// `centers` are referenced, not copied, and must outlive the operator.
  KernelOperator(const Features& x, const Features& centers, KernelSpec kernel,
                 Index block_rows = 0, int threads = 0, bool cache = false);

  Index n() const { return x_->rows(); }
  Index m() const { return centers_->rows(); }
  Index num_blocks() const { return static_cast<Index>(bounds_.size()) - 1; }
  const KernelSpec& kernel() const { return kernel_; }

  /// K_nM^T (K_nM u + v), column-wise; `v` may be empty (treated as zero).
  Matrix apply(const Matrix& u, const Matrix& v = Matrix()) const;

  /// As apply(), and also writes the column-wise squared norms of
  /// K_nM u + v into `sq_norms`.
  Matrix apply(const Matrix& u, const Matrix& v, Vector& sq_norms) const;

  /// K_nM u.
  Matrix times(const Matrix& u) const;
  /// K_nM^T v.
  Matrix transpose_times(const Matrix& v) const;

  /// Explicit K_nM.
  Matrix dense() const;

 private:
  // Cached block, or a fresh evaluation written into `scratch`.
  const Matrix& block(Index b, Matrix& scratch) const;

  // Evaluates up to `threads_` blocks at once; per_block(k, lo, hi) maps each
  // to a matrix, then per_wave(blocks, results) consumes them in block order.
  template <class PerBlock, class PerWave>
  void for_each_wave(PerBlock&& per_block, PerWave&& per_wave) const;

  const Features* x_;
  const Features* centers_;
  KernelSpec kernel_;
  int threads_;
  std::vector<Index> bounds_;
  std::vector<Matrix> cache_;
};

/// K_nM^T (K_nM u + v) evaluated block by block with fresh kernel blocks.
Vector knm_times_vector(const Features& x, const Features& centers,
                        const KernelSpec& kernel, const Vector& u,
                        const Vector& v, Index block_rows);

}  // namespace falkon
