#include "falkon/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <utility>
#include <vector>

namespace falkon {

namespace {

void check_pair(const Vector& y, Index m) {
  if (y.size() != m) throw ArgumentError("labels and predictions differ in length");
  if (y.size() == 0) throw ArgumentError("empty evaluation set");
}

bool is_pm1(double v) { return v == 1.0 || v == -1.0; }

}  // namespace

RegressionMetrics regression_metrics(const Vector& y, const Vector& yhat) {
  check_pair(y, yhat.size());
  RegressionMetrics m;
  const Vector e = yhat - y;
  m.mse = e.squaredNorm() / static_cast<double>(y.size());
  m.rmse = std::sqrt(m.mse);
  const double mean = y.mean();
  if (mean != 0.0) m.relative_error = m.rmse / mean;
  const double ny = y.norm();
  if (ny != 0.0) m.relative_error_norm = e.norm() / ny;
  return m;
}

double classification_error(const Vector& y, const Vector& scores) {
  check_pair(y, scores.size());
  Index wrong = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (!is_pm1(y(i))) throw ArgumentError("binary labels must be -1 or +1");
    const double pred = scores(i) >= 0.0 ? 1.0 : -1.0;
    if (pred != y(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(y.size());
}

double multiclass_error(const Vector& y, const Matrix& scores) {
  check_pair(y, scores.rows());
  Index wrong = 0;
  for (Index i = 0; i < y.size(); ++i) {
    Index best = 0;
    scores.row(i).maxCoeff(&best);
    if (static_cast<double>(best) != y(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(y.size());
}

double auc(const Vector& y, const Vector& scores) {
  check_pair(y, scores.size());
  const Index n = y.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores(a) < scores(b); });
  double rank_sum = 0.0;
  Index n_pos = 0;
  for (Index i = 0; i < n;) {
    Index j = i;
    while (j < n && scores(order[static_cast<std::size_t>(j)]) ==
                        scores(order[static_cast<std::size_t>(i)]))
      ++j;
    // Tied block [i, j) shares the midrank of ranks i+1 .. j.
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (Index k = i; k < j; ++k) {
      const double label = y(order[static_cast<std::size_t>(k)]);
      if (!is_pm1(label)) throw ArgumentError("binary labels must be -1 or +1");
      if (label > 0.0) {
        rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const Index n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw ArgumentError("AUC needs both positive and negative labels");
  const double p = static_cast<double>(n_pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string EvalReport::csv_header() {
  return "n_test,mse,rmse,relative_error,relative_error_norm,c_err,auc";
}

std::string EvalReport::csv_row() const {
  return std::to_string(n_test) + ',' + fmt(mse) + ',' + fmt(rmse) + ',' +
         fmt(relative_error) + ',' + fmt(relative_error_norm) + ',' + fmt(c_err) +
         ',' + fmt(auc);
}

void EvalReport::write_table(std::ostream& out) const {
  const std::pair<const char*, std::optional<double>> rows[] = {
      {"mse", mse},
      {"rmse", rmse},
      {"relative_error", relative_error},
      {"relative_error_norm", relative_error_norm},
      {"c_err", c_err},
      {"auc", auc}};
  out << std::left << std::setw(20) << "n_test" << n_test << '\n';
  for (const auto& [name, v] : rows)
    if (v) out << std::left << std::setw(20) << name << fmt(v) << '\n';
}

}  // namespace falkon
