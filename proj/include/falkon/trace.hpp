#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "falkon/types.hpp"

namespace falkon {

struct IterRecord {
  int iteration = 0;
  /// Regularized empirical risk (1/n)|K_nM a - y|^2 + lambda a^T K_MM a.
  double objective = 0.0;
  std::optional<double> test_metric;
  /// Wall-clock seconds since the first iteration started.
  double seconds = 0.0;
};

/// Per-iteration history of an iterative solver.
struct IterTrace {
  std::vector<IterRecord> records;

  /// CSV with header "iteration,objective,test_metric,seconds". Absent test
  /// metrics are empty fields; `with_time = false` writes 0 for seconds.
  void write_csv(std::ostream& out, bool with_time = true) const;
};

/// Computes a test metric from the current coefficient matrix (M x outputs).
using Evaluator = std::function<std::optional<double>(const Matrix& alpha)>;

}  // namespace falkon
