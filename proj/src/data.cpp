#include "falkon/data.hpp"

#include "falkon/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <string_view>
#include <system_error>

namespace falkon {

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_index(std::string_view s, long long& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

}  // namespace

// ---------------------------------------------------------------- Features

Features::Features(RowMatrix dense) : cols_(dense.cols()) {
  data_ = std::move(dense);
}

Features::Features(std::vector<SparseRow> rows, Index cols) : cols_(cols) {
  for (const auto& r : rows) {
    if (r.indices.size() != r.values.size())
      throw ArgumentError("sparse row has mismatched index/value counts");
    for (std::size_t k = 0; k < r.indices.size(); ++k) {
      if (r.indices[k] < 0 || r.indices[k] >= cols)
        throw ArgumentError("sparse column index out of range");
      if (k > 0 && r.indices[k] <= r.indices[k - 1])
        throw ArgumentError("sparse column indices not strictly increasing");
    }
  }
  data_ = std::move(rows);
}

Index Features::rows() const {
  if (is_sparse()) return static_cast<Index>(std::get<SparseRows>(data_).size());
  return std::get<RowMatrix>(data_).rows();
}

const RowMatrix& Features::dense() const {
  if (is_sparse()) throw ArgumentError("features are sparse, dense expected");
  return std::get<RowMatrix>(data_);
}

const std::vector<SparseRow>& Features::sparse() const {
  if (!is_sparse()) throw ArgumentError("features are dense, sparse expected");
  return std::get<SparseRows>(data_);
}

Features Features::select(std::span<const Index> idx) const {
  const Index n = rows();
  for (Index i : idx)
    if (i < 0 || i >= n) throw ArgumentError("row index out of range");
  if (is_sparse()) {
    const auto& src = sparse();
    SparseRows out;
    out.reserve(idx.size());
    for (Index i : idx) out.push_back(src[static_cast<std::size_t>(i)]);
    return Features(std::move(out), cols_);
  }
  const auto& src = dense();
  RowMatrix out(static_cast<Index>(idx.size()), cols_);
  for (std::size_t k = 0; k < idx.size(); ++k)
    out.row(static_cast<Index>(k)) = src.row(idx[k]);
  return Features(std::move(out));
}

RowMatrix Features::to_dense() const {
  if (!is_sparse()) return dense();
  const auto& src = sparse();
  RowMatrix out = RowMatrix::Zero(rows(), cols_);
  for (std::size_t i = 0; i < src.size(); ++i)
    for (Index k = 0; k < src[i].nnz(); ++k)
      out(static_cast<Index>(i), src[i].indices[k]) = src[i].values[k];
  return out;
}

Features Features::with_cols(Index cols) const {
  if (cols == cols_) return *this;
  if (!is_sparse() || cols < cols_)
    throw ArgumentError("cannot change the width of these features");
  return Features(sparse(), cols);
}

bool Features::operator==(const Features& other) const {
  if (is_sparse() != other.is_sparse() || cols_ != other.cols_) return false;
  if (is_sparse()) return sparse() == other.sparse();
  return dense().rows() == other.dense().rows() && dense() == other.dense();
}

// ----------------------------------------------------------------- Dataset

Dataset::Dataset(Features features, Vector labels)
    : x(std::move(features)), y(std::move(labels)) {
  if (x.rows() != y.size())
    throw ArgumentError("label count " + std::to_string(y.size()) +
                        " does not match row count " +
                        std::to_string(x.rows()));
}

Dataset Dataset::subset(std::span<const Index> idx) const {
  Vector ys(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) ys(static_cast<Index>(k)) = y(idx[k]);
  return Dataset(x.select(idx), std::move(ys));
}

// ----------------------------------------------------------------- loaders

Dataset load_dense_csv(const std::filesystem::path& path,
                       const CsvOptions& opts) {
  auto in = open_input(path);
  std::vector<double> values;
  std::vector<double> labels;
  Index fields = -1;
  std::size_t lineno = 0;
  std::string line;
  bool header_pending = opts.skip_header;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    row.clear();
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const auto field = rest.substr(0, comma);
      double v;
      if (!parse_double(field, v))
        throw ParseError("non-numeric field '" + std::string(trim(field)) + "'",
                         lineno);
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    const auto count = static_cast<Index>(row.size());
    if (fields < 0) {
      fields = count;
      if (fields < 2) throw ParseError("need at least one feature and a label", lineno);
    } else if (count != fields) {
      throw ParseError("expected " + std::to_string(fields) + " fields, found " +
                           std::to_string(count),
                       lineno);
    }
    const Index label_col =
        opts.label_column < 0 ? fields + opts.label_column : opts.label_column;
    if (label_col < 0 || label_col >= fields)
      throw ArgumentError("label column out of range");
    for (Index j = 0; j < fields; ++j) {
      if (j == label_col)
        labels.push_back(row[static_cast<std::size_t>(j)]);
      else
        values.push_back(row[static_cast<std::size_t>(j)]);
    }
  }
  if (labels.empty()) throw ParseError("no rows in " + path.string());
  const auto n = static_cast<Index>(labels.size());
  RowMatrix x = Eigen::Map<RowMatrix>(values.data(), n, fields - 1);
  return Dataset(Features(std::move(x)), Eigen::Map<Vector>(labels.data(), n));
}

Dataset load_sparse_index_value(const std::filesystem::path& path,
                                Index min_cols) {
  auto in = open_input(path);
  std::vector<SparseRow> rows;
  std::vector<double> labels;
  Index max_index = 0;
  std::size_t lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    auto next_token = [&rest]() {
      const auto b = rest.find_first_not_of(" \t");
      if (b == std::string_view::npos) {
        rest = {};
        return std::string_view{};
      }
      rest.remove_prefix(b);
      const auto e = rest.find_first_of(" \t");
      const auto tok = rest.substr(0, e);
      rest.remove_prefix(e == std::string_view::npos ? rest.size() : e);
      return tok;
    };
    double label;
    const auto label_tok = next_token();
    if (!parse_double(label_tok, label))
      throw ParseError("invalid label '" + std::string(label_tok) + "'", lineno);
    SparseRow row;
    for (auto tok = next_token(); !tok.empty(); tok = next_token()) {
      const auto colon = tok.find(':');
      long long idx;
      double val;
      if (colon == std::string_view::npos || !parse_index(tok.substr(0, colon), idx) ||
          !parse_double(tok.substr(colon + 1), val))
        throw ParseError("malformed entry '" + std::string(tok) + "'", lineno);
      if (idx < 1) throw ParseError("index must be >= 1", lineno);
      if (!row.indices.empty() && idx - 1 <= row.indices.back())
        throw ParseError("indices not ascending", lineno);
      row.indices.push_back(static_cast<Index>(idx - 1));
      row.values.push_back(val);
      max_index = std::max<Index>(max_index, static_cast<Index>(idx));
    }
    rows.push_back(std::move(row));
    labels.push_back(label);
  }
  if (rows.empty()) throw ParseError("no rows in " + path.string());
  const auto n = static_cast<Index>(labels.size());
  return Dataset(Features(std::move(rows), std::max(max_index, min_cols)),
                 Eigen::Map<Vector>(labels.data(), n));
}

void write_dense_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const RowMatrix x = ds.x.to_dense();
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < ds.d(); ++j) out << format_double(x(i, j)) << ',';
    out << format_double(ds.y(i)) << '\n';
  }
}

void write_sparse_index_value(const Dataset& ds,
                              const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (Index i = 0; i < ds.n(); ++i) {
    out << format_double(ds.y(i));
    if (ds.x.is_sparse()) {
      const auto& r = ds.x.sparse()[static_cast<std::size_t>(i)];
      for (Index k = 0; k < r.nnz(); ++k)
        out << ' ' << r.indices[k] + 1 << ':' << format_double(r.values[k]);
    } else {
      const auto& x = ds.x.dense();
      for (Index j = 0; j < ds.d(); ++j)
        if (x(i, j) != 0.0) out << ' ' << j + 1 << ':' << format_double(x(i, j));
    }
    out << '\n';
  }
}

// ------------------------------------------------------------------ z-score

NormStats zscore_fit(const Dataset& train) {
  if (train.n() == 0) throw ArgumentError("z-score fit needs a nonempty dataset");
  const RowMatrix& x = train.x.dense();
  const Index n = x.rows();
  const Index d = x.cols();
  NormStats s{Vector(d), Vector(d)};
  for (Index j = 0; j < d; ++j) {
    const auto col = x.col(j);
    if (col.minCoeff() == col.maxCoeff()) {
      // Constant column: exact mean, unit scale, so the transform is zero.
      s.mean(j) = col(0);
      s.std(j) = 1.0;
      continue;
    }
    const double mean = col.sum() / static_cast<double>(n);
    const double ss = (col.array() - mean).square().sum();
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    s.mean(j) = mean;
    s.std(j) = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

RowMatrix zscore_apply(const RowMatrix& x, const NormStats& stats) {
  if (x.cols() != stats.mean.size())
    throw ArgumentError("normalization statistics have the wrong dimension");
  RowMatrix out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j)
    out.col(j) = (x.col(j).array() - stats.mean(j)) / stats.std(j);
  return out;
}

Dataset zscore_apply(const Dataset& ds, const NormStats& stats) {
  return Dataset(Features(zscore_apply(ds.x.dense(), stats)), ds.y);
}

// -------------------------------------------------------------------- split

std::pair<std::vector<Index>, std::vector<Index>> split_indices(
    Index n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ArgumentError("test fraction must lie in (0, 1)");
  if (n < 2) throw ArgumentError("need at least two rows to split");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.bounded(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  auto n_test = static_cast<Index>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<Index>(n_test, 1, n - 1);
  const auto cut = perm.begin() + (n - n_test);
  std::vector<Index> train(perm.begin(), cut);
  std::vector<Index> test(cut, perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds,
                                             double test_fraction,
                                             std::uint64_t seed) {
  auto [train, test] = split_indices(ds.n(), test_fraction, seed);
  return {ds.subset(train), ds.subset(test)};
}

}  // namespace falkon
