#pragma once

#include "falkon/types.hpp"

#include <optional>
#include <ostream>
#include <string>

namespace falkon {

struct RegressionMetrics {
  double mse = 0.0;
  double rmse = 0.0;
  /// rmse / mean(y); absent when mean(y) == 0.
  std::optional<double> relative_error;
  /// |yhat - y| / |y|; absent when y == 0.
  std::optional<double> relative_error_norm;
};

RegressionMetrics regression_metrics(const Vector& y, const Vector& yhat);

/// Fraction of sign(score) != y for labels in {-1, +1}. A zero score
/// predicts +1.
double classification_error(const Vector& y, const Vector& scores);

/// Fraction of rows whose argmax column differs from the class id in `y`
/// (ids 0 .. k-1). Ties go to the lowest column.
double multiclass_error(const Vector& y, const Matrix& scores);

/// Probability that a random positive outscores a random negative, ties
/// counted one half, via the rank-sum statistic with midranks. Labels are
/// {-1, +1}; throws ArgumentError unless both classes are present.
double auc(const Vector& y, const Vector& scores);

struct EvalReport {
  Index n_test = 0;
  std::optional<double> mse;
  std::optional<double> rmse;
  std::optional<double> relative_error;
  std::optional<double> relative_error_norm;
  std::optional<double> c_err;
  std::optional<double> auc;

  static std::string csv_header();
  /// One CSV row matching csv_header(); absent values are empty fields.
  std::string csv_row() const;
  /// Aligned two-column "metric value" table of the present values.
  void write_table(std::ostream& out) const;
};

}  // namespace falkon
