#pragma once

#include "falkon/data.hpp"
#include "falkon/types.hpp"

#include <span>
#include <string>

namespace falkon {

enum class KernelType { gaussian, gaussian_diag, linear };

/// Kernel family and parameters.
///
/// Gaussian width convention: K(x, x') = exp(-|x - x'|^2 / (2 sigma^2)); the
/// diagonal variant uses one width per feature.
class KernelSpec {
 public:
  static KernelSpec gaussian(double sigma);
  static KernelSpec gaussian_diag(Vector widths);
  static KernelSpec linear();

  KernelType type() const { return type_; }
  double sigma() const { return sigma_; }
  const Vector& widths() const { return widths_; }

  /// "gaussian", "gaussian_diag" or "linear".
  std::string name() const;
  static KernelType parse_type(const std::string& name);

  /// Throws ArgumentError when the kernel cannot act on `d` features.
  void check_dim(Index d) const;

  bool operator==(const KernelSpec&) const = default;

 private:
  KernelSpec() = default;
  KernelType type_ = KernelType::linear;
  double sigma_ = 0.0;
  Vector widths_;
};

double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> xp);

/// K(a_i, b_j) for rows of two feature sets of any representation.
double kernel_eval(const KernelSpec& spec, const Features& a, Index i,
                   const Features& b, Index j);

/// Rows [begin, end) of `x` against every center: a (end-begin) x M matrix.
Matrix kernel_block(const KernelSpec& spec, const Features& x, Index begin,
                    Index end, const Features& centers);

inline Matrix kernel_block(const KernelSpec& spec, const Features& x,
                           const Features& centers) {
  return kernel_block(spec, x, 0, x.rows(), centers);
}

/// Symmetric M x M kernel matrix of the centers.
Matrix kernel_square(const KernelSpec& spec, const Features& centers);

}  // namespace falkon
