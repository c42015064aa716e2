#pragma once

#include "falkon/data.hpp"

#include <cstdint>
#include <string>

namespace falkon {

/// Seeded synthetic problems. All draws come from one Rng(seed) stream in a
/// fixed order: features row by row, then target parameters, then noise.
struct SyntheticSpec {
  /// "rkhs", "eigendecay", "illcond", "binary" or "multiclass".
  std::string kind = "rkhs";
  Index n = 2000;
  Index d = 5;
  double noise = 0.1;
  std::uint64_t seed = 0;
};

/// rkhs: x ~ N(0, I_d); y = sum_j c_j exp(-|x - z_j|^2 / (2 d)) + noise e over
///   20 anchors z_j ~ N(0, I_d), c_j ~ N(0, 1). The target lies in the span of
///   a Gaussian RKHS with sigma = sqrt(d).
/// eigendecay: x_k ~ N(0, k^{-2}) for feature k = 1..d, so kernel spectra decay
///   quickly; y = sin(sum_k x_k) + noise e.
/// illcond: x ~ U[0, 1]^d with d capped at 2; y = sin(2 pi x_1) cos(pi x_2)
///   + noise e. With sigma >= 1 and small lambda the kernel system has a
///   condition number far above 1e6.
/// binary: rkhs target f; y = +1 where f + noise e >= 0, else -1.
/// multiclass: three rkhs-style scores, each centered and scaled to unit
///   variance, plus noise e; y = argmax class id in {0, 1, 2}.
Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace falkon
