#include "falkon/solver.hpp"

#include "falkon/kernel_operator.hpp"

#include <chrono>
#include <cmath>
#include <bit>
#include <cstring>
#include <fstream>

namespace falkon {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_labels(const Features& x, const Matrix& y) {
  if (y.rows() != x.rows())
    throw ArgumentError("labels and features have different row counts");
  if (y.cols() < 1) throw ArgumentError("need at least one output column");
  if (!y.allFinite()) throw ArgumentError("labels must be finite");
}

// Sum over output columns of (1/n)|K_nM a - y|^2 + lambda a^T K_MM a, written
// in terms of the internal iterate u and residual r_t = r_0 - W u:
// u^T W u - 2 u^T r_0 + |y|^2/n = -u^T (r_0 + r_t) + |y|^2/n.
double objective_from_residual(const Matrix& u, const Matrix& r0, const Matrix& rt,
                               double y_term) {
  return y_term - (u.array() * (r0 + rt).array()).sum();
}

}  // namespace

void FalkonConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ArgumentError("lambda must be positive");
  if (num_centers < 1) throw ArgumentError("number of centers must be at least 1");
  if (iterations < 1) throw ArgumentError("iterations must be at least 1");
  if (block_rows < 0) throw ArgumentError("block_rows must be nonnegative");
  if (residual_tol < 0.0) throw ArgumentError("residual tolerance must be nonnegative");
  if (const auto* lev = std::get_if<LeverageExact>(&sampling))
    if (!(lev->lambda > 0.0))
      throw ArgumentError("leverage-score lambda must be positive");
  if (const auto* file = std::get_if<LeverageFromFile>(&sampling))
    if (!(file->q_factor >= 1.0))
      throw ArgumentError("leverage-score q factor must be at least 1");
}

CenterSelection select_centers(const Features& x, const FalkonConfig& cfg) {
  const Index n = x.rows();
  if (cfg.num_centers > n)
    throw ArgumentError("number of centers (" + std::to_string(cfg.num_centers) +
                        ") exceeds training size (" + std::to_string(n) + ")");
  CenterSelection sel;
  if (std::holds_alternative<UniformSampling>(cfg.sampling)) {
    sel = sample_uniform(n, cfg.num_centers, cfg.seed);
  } else if (const auto* file = std::get_if<LeverageFromFile>(&cfg.sampling)) {
    const LeverageScores scores = load_scores_file(file->path, n);
    sel = sample_leverage(scores, cfg.num_centers, n, cfg.seed, file->q_factor);
  } else {
    const auto& exact = std::get<LeverageExact>(cfg.sampling);
    if (n > cfg.exact_leverage_cap)
      throw CapExceeded("exact leverage scores need n <= " +
                        std::to_string(cfg.exact_leverage_cap) + " (n = " +
                        std::to_string(n) + "); supply a scores file instead");
    const LeverageScores scores =
        exact_leverage_scores(kernel_square(cfg.kernel, x), exact.lambda);
    sel = sample_leverage(scores, cfg.num_centers, n, cfg.seed, 1.0);
  }
  sel.attach(x);
  return sel;
}

Preconditioner make_preconditioner(const CenterSelection& sel, const FalkonConfig& cfg,
                                   Index n) {
  const Matrix kmm = kernel_square(cfg.kernel, sel.centers);
  if (sel.is_uniform())
    return Preconditioner::build_full_rank(kmm, cfg.lambda, n, cfg.backend, cfg.rank_tol);
  return Preconditioner::build_rank_deficient(kmm, sel.d_diag, cfg.lambda, n,
                                              cfg.backend, cfg.rank_tol);
}

namespace {

struct Prepared {
  CenterSelection selection;
  Preconditioner precond;
  RunReport report;
};

Prepared prepare(const Features& x, const Matrix& y, CenterSelection selection,
                 const FalkonConfig& cfg) {
  cfg.validate();
  check_labels(x, y);
  cfg.kernel.check_dim(x.cols());
  if (selection.centers.rows() != selection.kept()) selection.attach(x);
  if (selection.kept() > x.rows())
    throw ArgumentError("more centers than training points");
  Prepared p;
  const auto t0 = Clock::now();
  p.precond = make_preconditioner(selection, cfg, x.rows());
  p.report.seconds_preconditioner = seconds_since(t0);
  p.report.kept_centers = selection.kept();
  p.report.draws = selection.draws();
  p.report.rank = p.precond.rank();
  p.report.path = p.precond.path();
  p.report.fell_back = p.precond.fell_back();
  p.selection = std::move(selection);
  return p;
}

TrainResult finish(Prepared p, Matrix alpha, const FalkonConfig& cfg) {
  TrainResult out;
  out.model.centers = p.selection.centers;
  out.model.alpha = std::move(alpha);
  out.model.kernel = cfg.kernel;
  if (!out.model.alpha.allFinite()) throw DivergenceError(p.report.iterations_run);
  out.report = std::move(p.report);
  out.selection = std::move(p.selection);
  out.preconditioner = std::move(p.precond);
  return out;
}

}  // namespace

TrainResult falkon_fit(const Features& x, const Matrix& y, CenterSelection selection,
                       const FalkonConfig& cfg, const Evaluator& eval) {
  Prepared p = prepare(x, y, std::move(selection), cfg);
  const auto n = static_cast<double>(x.rows());
  const Preconditioner& pc = p.precond;
  const KernelOperator op(x, p.selection.centers, cfg.kernel, cfg.block_rows,
                          cfg.threads, cfg.cache_kernel);

  const Matrix r0 = pc.lift_transpose(op.transpose_times(y / n));
  const double y_term = y.squaredNorm() / n;
  const double lambda = cfg.lambda;

  const linalg::BlockOperator w = [&](const Matrix& u) -> Matrix {
    const Matrix au = pc.solve_a(u);
    Matrix inner = pc.lift_t_transpose(op.apply(pc.lift_t(au)) / n);
    inner += lambda * au;
    return pc.solve_at(inner);
  };

  const auto t0 = Clock::now();
  linalg::CgOptions opts;
  opts.residual_tol = cfg.residual_tol;
  opts.on_iteration = [&](int it, const Matrix& u, const Matrix& rt) {
    IterRecord rec;
    rec.iteration = it;
    rec.objective = objective_from_residual(u, r0, rt, y_term);
    if (eval) rec.test_metric = eval(pc.lift(u));
    rec.seconds = seconds_since(t0);
    p.report.trace.records.push_back(rec);
  };
  const linalg::CgResult cg = linalg::conjugate_gradient(w, r0, cfg.iterations, opts);
  p.report.seconds_iterations = seconds_since(t0);
  p.report.iterations_run = cg.iterations;
  return finish(std::move(p), pc.lift(cg.x), cfg);
}

TrainResult falkon_train(const Features& x, const Matrix& y, const FalkonConfig& cfg,
                         const Evaluator& eval) {
  cfg.validate();
  const auto t0 = Clock::now();
  CenterSelection sel = select_centers(x, cfg);
  const double t_sel = seconds_since(t0);
  TrainResult res = falkon_fit(x, y, std::move(sel), cfg, eval);
  res.report.seconds_centers = t_sel;
  return res;
}

TrainResult falkon_train(const Dataset& train, const FalkonConfig& cfg,
                         const Evaluator& eval) {
  return falkon_train(train.x, Matrix(train.y), cfg, eval);
}

TrainResult falkon_train_basic_gradient(const Features& x, const Matrix& y,
                                        CenterSelection selection,
                                        const FalkonConfig& cfg,
                                        std::optional<double> tau,
                                        const Evaluator& eval) {
  if (tau && (!(*tau >= 0.0) || !std::isfinite(*tau)))
    throw ArgumentError("step size tau must be nonnegative and finite");
  Prepared p = prepare(x, y, std::move(selection), cfg);
  const auto n = static_cast<double>(x.rows());
  const Preconditioner& pc = p.precond;
  const KernelOperator op(x, p.selection.centers, cfg.kernel, cfg.block_rows,
                          cfg.threads, cfg.cache_kernel);
  const double lambda = cfg.lambda;
  const linalg::BlockOperator w = [&](const Matrix& u) -> Matrix {
    const Matrix au = pc.solve_a(u);
    Matrix inner = pc.lift_t_transpose(op.apply(pc.lift_t(au)) / n);
    inner += lambda * au;
    return pc.solve_at(inner);
  };

  if (!tau) {
    const double lmax = linalg::estimate_lambda_max(w, pc.rank(), 20, cfg.seed);
    if (!(lmax > 0.0)) throw ArgumentError("preconditioned operator is zero");
    tau = n / lmax;
  }
  p.report.tau = *tau;

  // With beta = sqrt(n) u the recursion on beta is u_k = u_{k-1} + s rho_{k-1},
  // rho_k = r_0 - W u_k, step s = tau / n.
  const double s = *tau / n;
  const Matrix r0 = pc.lift_transpose(op.transpose_times(y / n));
  const double y_term = y.squaredNorm() / n;
  Matrix u = Matrix::Zero(r0.rows(), r0.cols());
  Matrix rho = r0;

  const auto t0 = Clock::now();
  for (int it = 1; it <= cfg.iterations; ++it) {
    u += s * rho;
    rho -= s * w(rho);
    if (!u.allFinite() || !rho.allFinite()) throw DivergenceError(it);
    IterRecord rec;
    rec.iteration = it;
    rec.objective = objective_from_residual(u, r0, rho, y_term);
    if (eval) rec.test_metric = eval(pc.lift(u));
    rec.seconds = seconds_since(t0);
    p.report.trace.records.push_back(rec);
  }
  p.report.seconds_iterations = seconds_since(t0);
  p.report.iterations_run = cfg.iterations;
  return finish(std::move(p), pc.lift(u), cfg);
}

TrainResult falkon_train_basic_gradient(const Dataset& train, const FalkonConfig& cfg,
                                        std::optional<double> tau,
                                        const Evaluator& eval) {
  cfg.validate();
  CenterSelection sel = select_centers(train.x, cfg);
  return falkon_train_basic_gradient(train.x, Matrix(train.y), std::move(sel), cfg,
                                     tau, eval);
}

Matrix falkon_predict(const FalkonModel& model, const Features& x, Index block_rows) {
  if (x.cols() != model.centers.cols())
    throw ArgumentError("expected " + std::to_string(model.centers.cols()) +
                        " features, got " + std::to_string(x.cols()));
  if (model.alpha.rows() != model.centers.rows())
    throw ArgumentError("model coefficients and centers disagree in length");
  if (model.norm_stats) {
    if (x.is_sparse())
      throw ArgumentError("normalization statistics need dense features");
    const Features xn(zscore_apply(x.dense(), *model.norm_stats));
    const KernelOperator op(xn, model.centers, model.kernel, block_rows);
    return op.times(model.alpha);
  }
  const KernelOperator op(x, model.centers, model.kernel, block_rows);
  return op.times(model.alpha);
}

// ------------------------------------------------------------ model files

namespace {

constexpr char kMagic[8] = {'F', 'A', 'L', 'K', 'O', 'N', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;

// Little-endian scalar IO. The build requires a little-endian host, so the
// in-memory representation is written as is.
static_assert(std::endian::native == std::endian::little,
              "model files assume a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_doubles(std::ostream& out, const double* p, std::size_t count) {
  out.write(reinterpret_cast<const char*>(p),
            static_cast<std::streamsize>(count * sizeof(double)));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw FormatError("model file is truncated");
  return v;
}

void get_doubles(std::istream& in, double* p, std::size_t count) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw FormatError("model file is truncated");
}

// Guards allocations against corrupt size fields.
std::uint64_t checked_size(std::uint64_t v, const char* what) {
  if (v > (std::uint64_t{1} << 40)) throw FormatError(std::string("implausible ") + what);
  return v;
}

}  // namespace

void save_model(const FalkonModel& model, const std::filesystem::path& path) {
  if (model.alpha.rows() != model.centers.rows())
    throw ArgumentError("model coefficients and centers disagree in length");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.kernel.type()));
  put<double>(out, model.kernel.sigma());
  const auto d = static_cast<std::uint64_t>(model.centers.cols());
  put<std::uint64_t>(out, d);
  const Vector& widths = model.kernel.widths();
  put<std::uint64_t>(out, static_cast<std::uint64_t>(widths.size()));
  put_doubles(out, widths.data(), static_cast<std::size_t>(widths.size()));

  const auto m = static_cast<std::uint64_t>(model.centers.rows());
  put<std::uint64_t>(out, m);
  put<std::uint8_t>(out, model.centers.is_sparse() ? 1 : 0);
  if (model.centers.is_sparse()) {
    for (const SparseRow& row : model.centers.sparse()) {
      put<std::uint64_t>(out, static_cast<std::uint64_t>(row.nnz()));
      for (Index j : row.indices) put<std::uint64_t>(out, static_cast<std::uint64_t>(j));
      put_doubles(out, row.values.data(), row.values.size());
    }
  } else {
    const RowMatrix& c = model.centers.dense();
    put_doubles(out, c.data(), static_cast<std::size_t>(c.size()));
  }

  put<std::uint64_t>(out, static_cast<std::uint64_t>(model.alpha.cols()));
  // Column-major: all M coefficients of output 0, then output 1, ...
  put_doubles(out, model.alpha.data(), static_cast<std::size_t>(model.alpha.size()));

  put<std::uint8_t>(out, model.norm_stats ? 1 : 0);
  if (model.norm_stats) {
    put_doubles(out, model.norm_stats->mean.data(),
                static_cast<std::size_t>(model.norm_stats->mean.size()));
    put_doubles(out, model.norm_stats->std.data(),
                static_cast<std::size_t>(model.norm_stats->std.size()));
  }
  if (!out) throw Error("failed writing " + path.string());
}

FalkonModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw FormatError("not a model file (bad magic header)");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion)
    throw FormatError("unsupported model version " + std::to_string(version));

  const auto type = get<std::uint32_t>(in);
  const auto sigma = get<double>(in);
  const auto d = static_cast<Index>(checked_size(get<std::uint64_t>(in), "dimension"));
  const auto nw = static_cast<Index>(checked_size(get<std::uint64_t>(in), "width count"));
  Vector widths(nw);
  get_doubles(in, widths.data(), static_cast<std::size_t>(nw));

  FalkonModel model;
  try {
    switch (static_cast<KernelType>(type)) {
      case KernelType::gaussian: model.kernel = KernelSpec::gaussian(sigma); break;
      case KernelType::gaussian_diag: model.kernel = KernelSpec::gaussian_diag(widths); break;
      case KernelType::linear: model.kernel = KernelSpec::linear(); break;
      default: throw FormatError("unknown kernel type " + std::to_string(type));
    }
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("invalid kernel parameters: ") + e.what());
  }

  const auto m = static_cast<Index>(checked_size(get<std::uint64_t>(in), "center count"));
  const auto storage = get<std::uint8_t>(in);
  if (storage == 1) {
    std::vector<SparseRow> rows(static_cast<std::size_t>(m));
    for (SparseRow& row : rows) {
      const auto nnz = checked_size(get<std::uint64_t>(in), "row length");
      row.indices.resize(nnz);
      row.values.resize(nnz);
      for (Index& j : row.indices) j = static_cast<Index>(get<std::uint64_t>(in));
      get_doubles(in, row.values.data(), nnz);
    }
    try {
      model.centers = Features(std::move(rows), d);
    } catch (const ArgumentError& e) {
      throw FormatError(std::string("invalid sparse centers: ") + e.what());
    }
  } else if (storage == 0) {
    RowMatrix c(m, d);
    get_doubles(in, c.data(), static_cast<std::size_t>(c.size()));
    model.centers = Features(std::move(c));
  } else {
    throw FormatError("unknown center storage tag " + std::to_string(storage));
  }

  const auto k = static_cast<Index>(checked_size(get<std::uint64_t>(in), "output count"));
  model.alpha.resize(m, k);
  get_doubles(in, model.alpha.data(), static_cast<std::size_t>(model.alpha.size()));

  const auto has_norm = get<std::uint8_t>(in);
  if (has_norm > 1) throw FormatError("bad normalization flag");
  if (has_norm == 1) {
    NormStats s{Vector(d), Vector(d)};
    get_doubles(in, s.mean.data(), static_cast<std::size_t>(d));
    get_doubles(in, s.std.data(), static_cast<std::size_t>(d));
    model.norm_stats = std::move(s);
  }
  in.peek();
  if (!in.eof()) throw FormatError("trailing bytes after model content");
  return model;
}

}  // namespace falkon
