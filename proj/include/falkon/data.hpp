#pragma once

#include "falkon/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace falkon {

/// One sparse row: strictly increasing 0-based column indices and values.
struct SparseRow {
  std::vector<Index> indices;
  std::vector<double> values;

  Index nnz() const { return static_cast<Index>(indices.size()); }
  bool operator==(const SparseRow&) const = default;
};

/// Feature matrix held either densely (row-major) or as sparse rows.
class Features {
 public:
  Features() = default;
  explicit Features(RowMatrix dense);
  Features(std::vector<SparseRow> rows, Index cols);

  bool is_sparse() const { return std::holds_alternative<SparseRows>(data_); }
  Index rows() const;
  Index cols() const { return cols_; }

  /// Throws ArgumentError when the representation does not match.
  const RowMatrix& dense() const;
  const std::vector<SparseRow>& sparse() const;

  /// Rows `idx` in the given order (duplicates allowed).
  Features select(std::span<const Index> idx) const;
  RowMatrix to_dense() const;

  /// Widens a sparse representation to `cols` columns (no-op for dense rows
  /// of equal width).
  Features with_cols(Index cols) const;

  bool operator==(const Features& other) const;

 private:
  using SparseRows = std::vector<SparseRow>;
  std::variant<RowMatrix, SparseRows> data_{RowMatrix()};
  Index cols_ = 0;
};

/// Sample (x_i, y_i), i < n. Labels are stored as reals; class ids are
/// integral reals.
struct Dataset {
  Features x;
  Vector y;

  Dataset() = default;
  Dataset(Features features, Vector labels);

  Index n() const { return x.rows(); }
  Index d() const { return x.cols(); }

  Dataset subset(std::span<const Index> idx) const;
};

/// Per-feature z-score statistics from a training set.
struct NormStats {
  Vector mean;
  Vector std;
};

struct CsvOptions {
  /// Column holding the label; negative counts from the end (-1 = last).
  Index label_column = -1;
  bool skip_header = false;
};

Dataset load_dense_csv(const std::filesystem::path& path,
                       const CsvOptions& opts = {});

/// Reads "label idx:val idx:val ..." lines with 1-based ascending indices.
/// The dimension is the largest index seen, or `min_cols` if larger.
Dataset load_sparse_index_value(const std::filesystem::path& path,
                                Index min_cols = 0);

/// Writers emit shortest round-trip decimal representations so that a
/// subsequent load reproduces every value exactly.
void write_dense_csv(const Dataset& ds, const std::filesystem::path& path);
void write_sparse_index_value(const Dataset& ds,
                              const std::filesystem::path& path);

NormStats zscore_fit(const Dataset& train);
Dataset zscore_apply(const Dataset& ds, const NormStats& stats);
RowMatrix zscore_apply(const RowMatrix& x, const NormStats& stats);

/// Seeded Fisher-Yates shuffle, then the first n - round(f n) shuffled rows
/// form the training part and the rest the test part. Both parts keep their
/// rows in original order.
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds,
                                             double test_fraction,
                                             std::uint64_t seed);

/// The index partition behind split_train_test: {train rows, test rows}.
std::pair<std::vector<Index>, std::vector<Index>> split_indices(
    Index n, double test_fraction, std::uint64_t seed);

}  // namespace falkon
