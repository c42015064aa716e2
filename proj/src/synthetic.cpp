#include "falkon/synthetic.hpp"

#include "falkon/rng.hpp"

#include <cmath>
#include <numbers>

namespace falkon {

namespace {

RowMatrix gaussian_rows(Rng& rng, Index n, Index d) {
  RowMatrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) x(i, k) = rng.normal();
  return x;
}

// sum_j c_j exp(-|x_i - z_j|^2 / (2 d)) with 20 fresh anchors.
Vector rkhs_target(Rng& rng, const RowMatrix& x) {
  constexpr Index kAnchors = 20;
  const Index d = x.cols();
  const RowMatrix z = gaussian_rows(rng, kAnchors, d);
  Vector c(kAnchors);
  for (Index j = 0; j < kAnchors; ++j) c(j) = rng.normal();
  Vector f = Vector::Zero(x.rows());
  const double s2 = 2.0 * static_cast<double>(d);
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < kAnchors; ++j)
      f(i) += c(j) * std::exp(-(x.row(i) - z.row(j)).squaredNorm() / s2);
  return f;
}

void add_noise(Rng& rng, Vector& y, double noise) {
  for (Index i = 0; i < y.size(); ++i) y(i) += noise * rng.normal();
}

}  // namespace

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 2) throw ArgumentError("synthetic n must be at least 2");
  if (spec.d < 1) throw ArgumentError("synthetic d must be at least 1");
  if (!(spec.noise >= 0.0)) throw ArgumentError("noise must be nonnegative");
  Rng rng(spec.seed);
  const Index n = spec.n;

  if (spec.kind == "rkhs" || spec.kind == "binary") {
    RowMatrix x = gaussian_rows(rng, n, spec.d);
    Vector y = rkhs_target(rng, x);
    add_noise(rng, y, spec.noise);
    if (spec.kind == "binary")
      for (Index i = 0; i < n; ++i) y(i) = y(i) >= 0.0 ? 1.0 : -1.0;
    return Dataset(Features(std::move(x)), std::move(y));
  }
  if (spec.kind == "eigendecay") {
    RowMatrix x = gaussian_rows(rng, n, spec.d);
    for (Index k = 0; k < spec.d; ++k) x.col(k) /= static_cast<double>(k + 1);
    Vector y(n);
    for (Index i = 0; i < n; ++i) y(i) = std::sin(x.row(i).sum());
    add_noise(rng, y, spec.noise);
    return Dataset(Features(std::move(x)), std::move(y));
  }
  if (spec.kind == "illcond") {
    const Index d = std::min<Index>(spec.d, 2);
    RowMatrix x(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < d; ++k) x(i, k) = rng.uniform();
    Vector y(n);
    constexpr double pi = std::numbers::pi;
    for (Index i = 0; i < n; ++i)
      y(i) = std::sin(2.0 * pi * x(i, 0)) * (d > 1 ? std::cos(pi * x(i, 1)) : 1.0);
    add_noise(rng, y, spec.noise);
    return Dataset(Features(std::move(x)), std::move(y));
  }
  if (spec.kind == "multiclass") {
    RowMatrix x = gaussian_rows(rng, n, spec.d);
    Matrix scores(n, 3);
    for (Index c = 0; c < 3; ++c) {
      // Standardized so that no class wins by offset or scale alone.
      Vector f = rkhs_target(rng, x);
      f.array() -= f.mean();
      const double sd = std::sqrt(f.squaredNorm() / static_cast<double>(n));
      scores.col(c) = sd > 0.0 ? Vector(f / sd) : f;
    }
    for (Index i = 0; i < n; ++i)
      for (Index c = 0; c < 3; ++c) scores(i, c) += spec.noise * rng.normal();
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      scores.row(i).maxCoeff(&best);
      y(i) = static_cast<double>(best);
    }
    return Dataset(Features(std::move(x)), std::move(y));
  }
  throw ArgumentError("unknown synthetic kind '" + spec.kind +
                      "' (expected rkhs, eigendecay, illcond, binary or multiclass)");
}

}  // namespace falkon
