#include "falkon/cli.hpp"

#include "falkon/baselines.hpp"
#include "falkon/diagnostics.hpp"
#include "falkon/kernel_operator.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace falkon::cli {

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ArgumentError(key + ": " + what);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || v.empty())
    bad(key, "expected a number, got '" + v + "'");
  return out;
}

template <typename T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || v.empty())
    bad(key, "expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, "expected true or false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) bad(key, "expected a comma-separated list of numbers");
  return out;
}

Task parse_task(const std::string& v) {
  if (v == "regression") return Task::regression;
  if (v == "binary") return Task::binary;
  if (v == "multiclass") return Task::multiclass;
  bad("task", "expected regression, binary or multiclass, got '" + v + "'");
}

SolverKind parse_solver(const std::string& v) {
  if (v == "falkon") return SolverKind::falkon;
  if (v == "falkon_basic_gd") return SolverKind::falkon_basic_gd;
  if (v == "krr") return SolverKind::krr;
  if (v == "nystrom_direct") return SolverKind::nystrom_direct;
  if (v == "gd") return SolverKind::gd;
  if (v == "cg") return SolverKind::cg;
  bad("solver", "expected falkon, falkon_basic_gd, krr, nystrom_direct, gd or cg, got '" +
                    v + "'");
}

constexpr const char* kSyntheticPrefix = "synthetic:";

bool is_synthetic(const std::string& data) { return data.rfind(kSyntheticPrefix, 0) == 0; }

}  // namespace

std::string to_string(Task t) {
  switch (t) {
    case Task::regression: return "regression";
    case Task::binary: return "binary";
    case Task::multiclass: return "multiclass";
  }
  return "unknown";
}

std::string to_string(SolverKind s) {
  switch (s) {
    case SolverKind::falkon: return "falkon";
    case SolverKind::falkon_basic_gd: return "falkon_basic_gd";
    case SolverKind::krr: return "krr";
    case SolverKind::nystrom_direct: return "nystrom_direct";
    case SolverKind::gd: return "gd";
    case SolverKind::cg: return "cg";
  }
  return "unknown";
}

RunConfig default_run_config() {
  RunConfig cfg;
  if (const char* env = std::getenv("FALKON_THREADS"); env && *env)
    cfg.threads = parse_int<int>("FALKON_THREADS", env);
  return cfg;
}

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = {
      "data",        "format",      "task",          "solver",     "kernel",
      "sigma",       "sigma-per-dim", "lambda",      "centers",    "iters",
      "sampling",    "scores-file", "leverage-lambda", "q-factor", "test-fraction",
      "seed",        "block-rows",  "threads",       "cache-kernel", "backend",
      "step",        "normalize",   "diagnostics",   "delta",      "out",
      "no-timestamp", "synthetic-n", "synthetic-d",  "noise",      "dense-cap"};
  return keys;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "data") c.data = v;
  else if (key == "format") {
    if (v != "csv" && v != "sparse") bad(key, "expected csv or sparse, got '" + v + "'");
    c.format = v;
  } else if (key == "task") c.task = parse_task(v);
  else if (key == "solver") c.solver = parse_solver(v);
  else if (key == "kernel") {
    try {
      KernelSpec::parse_type(v);
    } catch (const ArgumentError& e) {
      bad(key, e.what());
    }
    c.kernel = v;
  } else if (key == "sigma") c.sigma = parse_double(key, v);
  else if (key == "sigma-per-dim") c.sigma_per_dim = parse_list(key, v);
  else if (key == "lambda") c.lambda = parse_double(key, v);
  else if (key == "centers") c.centers = parse_int<Index>(key, v);
  else if (key == "iters") c.iters = parse_int<int>(key, v);
  else if (key == "sampling") {
    if (v != "uniform" && v != "leverage")
      bad(key, "expected uniform or leverage, got '" + v + "'");
    c.sampling = v;
  } else if (key == "scores-file") c.scores_file = v;
  else if (key == "leverage-lambda") c.leverage_lambda = parse_double(key, v);
  else if (key == "q-factor") c.q_factor = parse_double(key, v);
  else if (key == "test-fraction") c.test_fraction = parse_double(key, v);
  else if (key == "seed") c.seed = parse_int<std::uint64_t>(key, v);
  else if (key == "block-rows") c.block_rows = parse_int<Index>(key, v);
  else if (key == "threads") c.threads = parse_int<int>(key, v);
  else if (key == "cache-kernel") c.cache_kernel = parse_bool(key, v);
  else if (key == "backend") {
    try {
      parse_backend(v);
    } catch (const ArgumentError& e) {
      bad(key, e.what());
    }
    c.backend = v;
  } else if (key == "step") c.step = parse_double(key, v);
  else if (key == "normalize") c.normalize = parse_bool(key, v);
  else if (key == "diagnostics") c.diagnostics = parse_bool(key, v);
  else if (key == "delta") c.delta = parse_double(key, v);
  else if (key == "out") c.out = v;
  else if (key == "no-timestamp") c.no_timestamp = parse_bool(key, v);
  else if (key == "synthetic-n") c.synthetic_n = parse_int<Index>(key, v);
  else if (key == "synthetic-d") c.synthetic_d = parse_int<Index>(key, v);
  else if (key == "noise") c.noise = parse_double(key, v);
  else if (key == "dense-cap") c.dense_cap = parse_int<Index>(key, v);
  else bad(key, "unknown setting");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("missing key before '='", lineno);
    if (std::find(setting_keys().begin(), setting_keys().end(), key) == setting_keys().end())
      throw ParseError(key + ": unknown setting", lineno);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    for (const auto& [k, v] : parse_config_text(ss.str())) apply_setting(base, k, v);
  } catch (const Error& e) {
    throw ArgumentError(path.string() + ": " + e.what());
  }
  return base;
}

void write_config(std::ostream& out, const RunConfig& c) {
  std::string sig;
  for (std::size_t i = 0; i < c.sigma_per_dim.size(); ++i)
    sig += (i ? "," : "") + num(c.sigma_per_dim[i]);
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "data = " << c.data << '\n'
      << "format = " << c.format << '\n'
      << "task = " << to_string(c.task) << '\n'
      << "solver = " << to_string(c.solver) << '\n'
      << "kernel = " << c.kernel << '\n'
      << "sigma = " << num(c.sigma) << '\n'
      << "sigma-per-dim = " << sig << '\n'
      << "lambda = " << num(c.lambda) << '\n'
      << "centers = " << c.centers << '\n'
      << "iters = " << c.iters << '\n'
      << "sampling = " << c.sampling << '\n'
      << "scores-file = " << c.scores_file << '\n'
      << "leverage-lambda = " << num(c.leverage_lambda) << '\n'
      << "q-factor = " << num(c.q_factor) << '\n'
      << "test-fraction = " << num(c.test_fraction) << '\n'
      << "seed = " << c.seed << '\n'
      << "block-rows = " << c.block_rows << '\n'
      << "threads = " << c.threads << '\n'
      << "cache-kernel = " << b(c.cache_kernel) << '\n'
      << "backend = " << c.backend << '\n'
      << "step = " << num(c.step) << '\n'
      << "normalize = " << b(c.normalize) << '\n'
      << "diagnostics = " << b(c.diagnostics) << '\n'
      << "delta = " << num(c.delta) << '\n'
      << "out = " << c.out << '\n'
      << "no-timestamp = " << b(c.no_timestamp) << '\n'
      << "synthetic-n = " << c.synthetic_n << '\n'
      << "synthetic-d = " << c.synthetic_d << '\n'
      << "noise = " << num(c.noise) << '\n'
      << "dense-cap = " << c.dense_cap << '\n';
}

void RunConfig::validate() const {
  if (data.empty()) bad("data", "no dataset given");
  if (!(sigma > 0.0)) bad("sigma", "must be positive");
  if (kernel == "gaussian_diag" && sigma_per_dim.empty())
    bad("sigma-per-dim", "required by the gaussian_diag kernel");
  for (double s : sigma_per_dim)
    if (!(s > 0.0)) bad("sigma-per-dim", "every width must be positive");
  if (!(lambda > 0.0)) bad("lambda", "must be positive");
  if (centers < 1) bad("centers", "must be at least 1");
  if (iters < 1) bad("iters", "must be at least 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) bad("test-fraction", "must lie in (0, 1)");
  if (block_rows < 0) bad("block-rows", "must be nonnegative");
  if (threads < 0) bad("threads", "must be nonnegative");
  if (!(step >= 0.0)) bad("step", "must be nonnegative");
  if (!(leverage_lambda >= 0.0)) bad("leverage-lambda", "must be nonnegative");
  if (!(q_factor >= 1.0)) bad("q-factor", "must be at least 1");
  if (!(delta > 0.0 && delta <= 1.0)) bad("delta", "must lie in (0, 1]");
  if (!scores_file.empty() && sampling != "leverage")
    bad("scores-file", "only used with sampling = leverage");
  if (dense_cap < 1) bad("dense-cap", "must be at least 1");
}

FalkonConfig RunConfig::falkon_config() const {
  FalkonConfig f;
  if (kernel == "gaussian") f.kernel = KernelSpec::gaussian(sigma);
  else if (kernel == "gaussian_diag")
    f.kernel = KernelSpec::gaussian_diag(
        Eigen::Map<const Vector>(sigma_per_dim.data(),
                                 static_cast<Index>(sigma_per_dim.size())));
  else f.kernel = KernelSpec::linear();
  f.lambda = lambda;
  f.num_centers = centers;
  f.iterations = iters;
  if (sampling == "leverage") {
    if (!scores_file.empty()) f.sampling = LeverageFromFile{scores_file, q_factor};
    else f.sampling = LeverageExact{leverage_lambda > 0.0 ? leverage_lambda : lambda};
  }
  f.seed = seed;
  f.block_rows = block_rows;
  f.threads = threads;
  f.cache_kernel = cache_kernel;
  f.backend = parse_backend(backend);
  f.exact_leverage_cap = std::max<Index>(dense_cap, f.exact_leverage_cap);
  return f;
}

Split prepare_data(const RunConfig& cfg) {
  Dataset ds;
  if (is_synthetic(cfg.data)) {
    SyntheticSpec spec;
    spec.kind = cfg.data.substr(std::string(kSyntheticPrefix).size());
    spec.n = cfg.synthetic_n;
    spec.d = cfg.synthetic_d;
    spec.noise = cfg.noise;
    spec.seed = cfg.seed;
    ds = make_synthetic(spec);
  } else {
    try {
      ds = cfg.format == "sparse" ? load_sparse_index_value(cfg.data)
                                  : load_dense_csv(cfg.data);
    } catch (const Error& e) {
      throw ParseError(cfg.data + ": " + e.what());
    }
  }
  Split s;
  std::tie(s.train, s.test) = split_train_test(ds, cfg.test_fraction, cfg.seed);
  if (cfg.normalize && !s.train.x.is_sparse()) {
    NormStats stats = zscore_fit(s.train);
    s.train = zscore_apply(s.train, stats);
    s.test = zscore_apply(s.test, stats);
    s.norm_stats = std::move(stats);
  }
  return s;
}

namespace {

// Maps labels to regression targets: the labels themselves, +-1 for binary
// ({0, 1} is read as {-1, +1}), one-vs-rest +-1 columns for multiclass.
Matrix targets(Task task, const Vector& y, Index classes) {
  if (task == Task::regression) return Matrix(y);
  if (task == Task::binary) {
    Matrix t(y.size(), 1);
    for (Index i = 0; i < y.size(); ++i) {
      if (y(i) == 1.0) t(i, 0) = 1.0;
      else if (y(i) == -1.0 || y(i) == 0.0) t(i, 0) = -1.0;
      else bad("task", "binary labels must be -1/+1 or 0/1");
    }
    return t;
  }
  Matrix t = Matrix::Constant(y.size(), classes, -1.0);
  for (Index i = 0; i < y.size(); ++i) t(i, static_cast<Index>(y(i))) = 1.0;
  return t;
}

Index class_count(Task task, const Vector& train_y, const Vector& test_y) {
  if (task != Task::multiclass) return 1;
  double hi = 0.0;
  for (const Vector* v : {&train_y, &test_y})
    for (Index i = 0; i < v->size(); ++i) {
      const double c = (*v)(i);
      if (!(c >= 0.0) || c != std::floor(c) || c > 1e6)
        bad("task", "multiclass labels must be class ids 0, 1, 2, ...");
      hi = std::max(hi, c);
    }
  return static_cast<Index>(hi) + 1;
}

// Predictions on the (already normalized) test rows for a fixed center set.
class TestPredictor {
 public:
  TestPredictor(const Features& test_x, const Features& centers, const KernelSpec& kernel,
                Index block_rows, int threads)
      : centers_(centers), op_(test_x, centers_, kernel, block_rows, threads) {
    constexpr double kDenseEntries = 2.5e7;
    if (static_cast<double>(test_x.rows()) * static_cast<double>(centers.rows()) <=
        kDenseEntries)
      dense_ = op_.dense();
  }
  Matrix operator()(const Matrix& alpha) const {
    return dense_ ? Matrix(*dense_ * alpha) : op_.times(alpha);
  }

 private:
  Features centers_;
  KernelOperator op_;
  std::optional<Matrix> dense_;
};

struct Scorer {
  Task task;
  Vector y;        // raw test labels
  Vector y_binary; // +-1 test labels (binary task)

  double primary(const Matrix& pred) const {
    if (task == Task::regression) return regression_metrics(y, pred.col(0)).rmse;
    if (task == Task::binary) return classification_error(y_binary, pred.col(0));
    return multiclass_error(y, pred);
  }

  std::string primary_name() const { return task == Task::regression ? "rmse" : "c_err"; }

  EvalReport report(const Matrix& pred) const {
    EvalReport r;
    r.n_test = y.size();
    if (task == Task::regression) {
      const auto m = regression_metrics(y, pred.col(0));
      r.mse = m.mse;
      r.rmse = m.rmse;
      r.relative_error = m.relative_error;
      r.relative_error_norm = m.relative_error_norm;
    } else if (task == Task::binary) {
      r.c_err = classification_error(y_binary, pred.col(0));
      const bool both = (y_binary.array() > 0).any() && (y_binary.array() < 0).any();
      if (both) r.auc = auc(y_binary, pred.col(0));
    } else {
      r.c_err = multiclass_error(y, pred);
    }
    return r;
  }
};

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

}  // namespace

RunOutcome run(const RunConfig& cfg) {
  cfg.validate();
  const auto t_start = Clock::now();
  const FalkonConfig fc = cfg.falkon_config();
  Split split = prepare_data(cfg);
  const Dataset& train = split.train;
  const Index classes = class_count(cfg.task, train.y, split.test.y);
  const Matrix y = targets(cfg.task, train.y, classes);

  Scorer scorer{cfg.task, split.test.y, Vector()};
  if (cfg.task == Task::binary) scorer.y_binary = targets(cfg.task, split.test.y, 1).col(0);

  RunOutcome out;
  std::optional<RunReport> facts;
  std::optional<Preconditioner> precond;
  std::optional<double> tau;
  bool pseudo_inverse = false;
  int iterations = 0;

  const std::optional<double> step =
      cfg.step > 0.0 ? std::optional<double>(cfg.step) : std::nullopt;
  IterativeOptions iopts{cfg.block_rows, cfg.threads, cfg.cache_kernel, cfg.seed};

  // Refuse dense solves before any kernel work is spent on them.
  if (cfg.solver == SolverKind::krr && train.n() > cfg.dense_cap)
    throw CapExceeded("solver krr needs n_train <= dense-cap (n_train = " +
                      std::to_string(train.n()) + ", dense-cap = " +
                      std::to_string(cfg.dense_cap) +
                      "); use solver = falkon or raise --dense-cap");
  if (cfg.solver == SolverKind::nystrom_direct && cfg.centers > cfg.dense_cap)
    throw CapExceeded("solver nystrom_direct needs centers <= dense-cap (" +
                      std::to_string(cfg.centers) + " > " + std::to_string(cfg.dense_cap) +
                      "); use solver = falkon or raise --dense-cap");

  CenterSelection selection;
  if (cfg.solver == SolverKind::krr) {
    selection = all_points(train.n());
  } else {
    selection = select_centers(train.x, fc);
  }
  selection.attach(train.x);
  const TestPredictor predict(split.test.x, selection.centers, fc.kernel, cfg.block_rows,
                              cfg.threads);
  const Evaluator eval = [&](const Matrix& alpha) -> std::optional<double> {
    return scorer.primary(predict(alpha));
  };

  switch (cfg.solver) {
    case SolverKind::falkon:
    case SolverKind::falkon_basic_gd: {
      TrainResult res = cfg.solver == SolverKind::falkon
                            ? falkon_fit(train.x, y, selection, fc, eval)
                            : falkon_train_basic_gradient(train.x, y, selection, fc, step, eval);
      out.model = std::move(res.model);
      out.trace = std::move(res.report.trace);
      facts = std::move(res.report);
      if (cfg.solver == SolverKind::falkon_basic_gd) tau = facts->tau;
      iterations = facts->iterations_run;
      precond = std::move(res.preconditioner);
      break;
    }
    case SolverKind::krr:
      out.model = krr_direct(train.x, y, fc.kernel, cfg.lambda, cfg.dense_cap);
      break;
    case SolverKind::nystrom_direct: {
      auto res = nystrom_direct(train.x, y, selection.centers, fc.kernel, cfg.lambda,
                                cfg.dense_cap);
      out.model = std::move(res.model);
      pseudo_inverse = res.pseudo_inverse;
      break;
    }
    case SolverKind::gd: {
      auto res = gd_nystrom(train.x, y, selection.centers, fc.kernel, cfg.lambda, cfg.iters,
                            step, eval, iopts);
      out.model = std::move(res.model);
      out.trace = std::move(res.trace);
      tau = res.tau;
      iterations = cfg.iters;
      break;
    }
    case SolverKind::cg: {
      auto res = cg_nystrom_unpreconditioned(train.x, y, selection.centers, fc.kernel,
                                             cfg.lambda, cfg.iters, eval, iopts);
      out.model = std::move(res.model);
      out.trace = std::move(res.trace);
      iterations = static_cast<int>(out.trace->records.size());
      break;
    }
  }
  out.model.norm_stats = split.norm_stats;

  const Matrix pred = predict(out.model.alpha);
  out.eval = scorer.report(pred);
  out.metric_name = scorer.primary_name();
  out.metric_value = scorer.primary(pred);

  std::optional<TheoryReport> theory;
  if (cfg.diagnostics) {
    if (!precond) precond = make_preconditioner(selection, fc, train.n());
    TheoryOptions topts;
    topts.delta = cfg.delta;
    topts.q_factor = cfg.q_factor;
    topts.cap = cfg.dense_cap;
    theory = theory_report(train.x, selection.centers, fc.kernel, *precond, topts);
  }
  out.seconds = std::chrono::duration<double>(Clock::now() - t_start).count();

  // ------------------------------------------------------------- reports
  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  const bool timed = !cfg.no_timestamp;
  auto secs = [&](double v) { return num(timed ? v : 0.0); };

  {
    std::ofstream r(dir / "report.txt");
    r << "# falkon run report\n";
    if (timed) r << "timestamp = " << timestamp_utc() << '\n';
    r << "\n[config]\n";
    write_config(r, cfg);
    r << "\n[data]\n"
      << "n_train = " << train.n() << '\n'
      << "n_test = " << split.test.n() << '\n'
      << "d = " << train.d() << '\n'
      << "outputs = " << y.cols() << '\n'
      << "normalized = " << (split.norm_stats ? "true" : "false") << '\n';
    r << "\n[solver]\n"
      << "solver = " << to_string(cfg.solver) << '\n'
      << "centers_kept = " << selection.kept() << '\n'
      << "center_draws = " << selection.draws() << '\n'
      << "iterations = " << iterations << '\n';
    if (facts) {
      r << "rank = " << facts->rank << '\n'
        << "preconditioner = " << falkon::to_string(facts->path) << '\n'
        << "fell_back = " << (facts->fell_back ? "true" : "false") << '\n'
        << "seconds_centers = " << secs(facts->seconds_centers) << '\n'
        << "seconds_preconditioner = " << secs(facts->seconds_preconditioner) << '\n'
        << "seconds_iterations = " << secs(facts->seconds_iterations) << '\n';
    }
    if (tau) r << "tau = " << num(*tau) << '\n';
    if (cfg.solver == SolverKind::nystrom_direct)
      r << "pseudo_inverse = " << (pseudo_inverse ? "true" : "false") << '\n';
    r << "seconds_total = " << secs(out.seconds) << '\n';
    r << "\n[metrics]\n";
    out.eval.write_table(r);
    if (theory) {
      r << "\n[diagnostics]\n";
      theory->write_text(r);
    }
  }
  {
    std::ofstream m(dir / "metrics.csv");
    m << "solver,seed," << EvalReport::csv_header() << '\n'
      << to_string(cfg.solver) << ',' << cfg.seed << ',' << out.eval.csv_row() << '\n';
  }
  if (out.trace) {
    std::ofstream t(dir / "trace.csv");
    out.trace->write_csv(t, timed);
  }
  if (theory) {
    std::ofstream t(dir / "theory.txt");
    theory->write_text(t);
  }
  save_model(out.model, dir / "model.bin");

  std::ostringstream line;
  line << to_string(cfg.solver) << ' ' << selection.kept() << ' ' << iterations << ' '
       << num(cfg.lambda) << ' ' << out.metric_name << ' ' << num(out.metric_value) << ' '
       << std::fixed << std::setprecision(3) << out.seconds;
  out.summary = line.str();
  return out;
}

void compare(const std::vector<RunConfig>& configs, const std::filesystem::path& out_csv) {
  if (configs.empty()) throw ArgumentError("compare needs at least one config");
  const RunConfig& ref = configs.front();
  for (const RunConfig& c : configs) {
    auto mismatch = [](const std::string& field) {
      throw ArgumentError("compare: configs disagree on '" + field +
                          "'; all runs must share the dataset and split");
    };
    if (c.data != ref.data) mismatch("data");
    if (c.format != ref.format) mismatch("format");
    if (c.task != ref.task) mismatch("task");
    if (c.test_fraction != ref.test_fraction) mismatch("test-fraction");
    if (c.seed != ref.seed) mismatch("seed");
    if (c.normalize != ref.normalize) mismatch("normalize");
    if (is_synthetic(c.data) &&
        (c.synthetic_n != ref.synthetic_n || c.synthetic_d != ref.synthetic_d ||
         c.noise != ref.noise))
      mismatch("synthetic-n/synthetic-d/noise");
  }

  std::vector<std::string> labels;
  std::vector<std::map<int, double>> columns;
  std::set<int> rows;
  std::map<std::string, int> seen;
  for (const RunConfig& c : configs) {
    std::string label = to_string(c.solver);
    if (const int k = ++seen[label]; k > 1) label += "_" + std::to_string(k);
    labels.push_back(label);
    // Each run reports into its own subdirectory so runs never overwrite.
    RunConfig sub = c;
    sub.out = (std::filesystem::path(c.out) / label).string();
    const RunOutcome o = run(sub);
    std::map<int, double> col;
    if (o.trace) {
      for (const auto& rec : o.trace->records)
        if (rec.test_metric) col[rec.iteration] = *rec.test_metric;
    } else {
      col[0] = o.metric_value;  // direct solvers report at iteration 0
    }
    for (const auto& [it, v] : col) rows.insert(it);
    columns.push_back(std::move(col));
  }

  if (out_csv.has_parent_path()) std::filesystem::create_directories(out_csv.parent_path());
  std::ofstream f(out_csv);
  if (!f) throw Error("cannot write " + out_csv.string());
  f << "iteration";
  for (const auto& l : labels) f << ',' << l;
  f << '\n';
  for (int it : rows) {
    f << it;
    for (const auto& col : columns) {
      f << ',';
      if (auto p = col.find(it); p != col.end()) f << num(p->second);
    }
    f << '\n';
  }
}

std::string format_help() {
  return R"(Settings
  Every flag can also be given in a config file (--config) as "key = value",
  one per line, '#' starting a comment. Flags override the config file; the
  FALKON_THREADS environment variable sets the default for --threads.

Data formats
  csv     one row per sample, comma-separated numbers, label in the last
          column. NaN and Inf are rejected.
  sparse  one row per sample: "label idx:val idx:val ...", 1-based strictly
          ascending indices; the dimension is the largest index seen.
  synthetic:<kind> as --data generates a seeded problem instead of reading a
          file; kinds are rkhs, eigendecay, illcond, binary, multiclass,
          sized by --synthetic-n, --synthetic-d and --noise.

Labels
  regression  real labels, used as given.
  binary      -1/+1 (or 0/1, read as -1/+1); score 0 predicts +1.
  multiclass  class ids 0..k-1, trained one-vs-rest on +-1 targets.

Reports (written to --out)
  report.txt  [config], [data], [solver], [metrics], [diagnostics] sections of
              "key = value" lines; a timestamp line unless --no-timestamp,
              which also writes every timing as 0.
  metrics.csv solver,seed,n_test,mse,rmse,relative_error,relative_error_norm,
              c_err,auc (absent metrics are empty).
  trace.csv   iteration,objective,test_metric,seconds (iterative solvers).
  theory.txt  diagnostics block (with --diagnostics).
  model.bin   trained model; see docs/formats.md.

Summary line on stdout
  solver M t lambda metric value seconds

compare
  Runs each config file (main-command flags apply to all) and writes one CSV
  "iteration,<solver>,..." of per-iteration test metrics; repeated solvers
  get suffixes _2, _3, ... Direct solvers appear at iteration 0, iterations a
  run did not reach are empty cells, and each run reports into <out>/<label>.
)";
}

}  // namespace falkon::cli
