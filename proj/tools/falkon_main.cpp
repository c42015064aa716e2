#include "falkon/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

using falkon::cli::RunConfig;

struct FlagSet {
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
  std::string config;
};

// Registers every setting as "--<key>" on `app`.
void add_settings(CLI::App& app, FlagSet& flags) {
  static const std::map<std::string, std::string> help = {
      {"data", "data file, or synthetic:<kind>"},
      {"format", "csv | sparse"},
      {"task", "regression | binary | multiclass"},
      {"solver", "falkon | falkon_basic_gd | krr | nystrom_direct | gd | cg"},
      {"kernel", "gaussian | gaussian_diag | linear"},
      {"sigma", "Gaussian width"},
      {"sigma-per-dim", "comma-separated widths for gaussian_diag"},
      {"lambda", "regularization"},
      {"centers", "number of Nystrom centers M"},
      {"iters", "iterations t"},
      {"sampling", "uniform | leverage"},
      {"scores-file", "approximate leverage scores, one per training row"},
      {"leverage-lambda", "lambda for exact leverage scores (default: --lambda)"},
      {"q-factor", "approximation factor of the supplied scores"},
      {"test-fraction", "held-out fraction"},
      {"seed", "seed for split, sampling and synthetic data"},
      {"block-rows", "kernel block rows (default M)"},
      {"threads", "worker threads (default: FALKON_THREADS or all cores)"},
      {"backend", "rank-deficient preconditioner: qr | eig"},
      {"step", "gradient step size (0 = automatic)"},
      {"delta", "confidence for suggested M"},
      {"out", "report directory"},
      {"synthetic-n", "synthetic sample count"},
      {"synthetic-d", "synthetic feature count"},
      {"noise", "synthetic label noise"},
      {"dense-cap", "size limit for dense O(n^3) routines"},
      {"normalize", "z-score dense features: true | false"},
  };
  for (const auto& key : falkon::cli::setting_keys()) {
    if (key == "diagnostics" || key == "no-timestamp" || key == "cache-kernel") {
      app.add_flag("--" + key, flags.switches[key]);
      continue;
    }
    auto it = help.find(key);
    app.add_option("--" + key, flags.values[key], it == help.end() ? "" : it->second);
  }
  app.get_option("--diagnostics")->description("write theory diagnostics");
  app.get_option("--no-timestamp")->description("omit timestamp and timings from reports");
  app.get_option("--cache-kernel")->description("keep K_nM in memory");
  app.add_option("--config", flags.config, "key = value settings file");
}

RunConfig resolve(const CLI::App& app, const FlagSet& flags) {
  RunConfig cfg = flags.config.empty() ? falkon::cli::default_run_config()
                                       : falkon::cli::load_config_file(flags.config);
  for (const auto& [key, value] : flags.values)
    if (app.count("--" + key) > 0) falkon::cli::apply_setting(cfg, key, value);
  for (const auto& [key, on] : flags.switches)
    if (app.count("--" + key) > 0) falkon::cli::apply_setting(cfg, key, on ? "true" : "false");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FALKON kernel ridge regression: train, evaluate and compare solvers"};
  app.footer(falkon::cli::format_help());
  FlagSet flags;
  add_settings(app, flags);

  auto* cmp = app.add_subcommand("compare", "run several configs and merge their traces");
  std::vector<std::string> cmp_configs;
  std::string cmp_out = "compare.csv";
  cmp->add_option("configs", cmp_configs, "config files (flags of the main command apply to all)")
      ->required();
  cmp->add_option("--table", cmp_out, "merged CSV path");

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV");
  falkon::SyntheticSpec spec;
  std::string gen_out;
  gen->add_option("kind", spec.kind, "rkhs | eigendecay | illcond | binary | multiclass")
      ->required();
  gen->add_option("path", gen_out, "output CSV")->required();
  gen->add_option("-n", spec.n, "samples");
  gen->add_option("-d", spec.d, "features");
  gen->add_option("--noise-level", spec.noise, "label noise");
  gen->add_option("--gen-seed", spec.seed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      falkon::write_dense_csv(falkon::make_synthetic(spec), gen_out);
      return 0;
    }
    if (*cmp) {
      std::vector<RunConfig> configs;
      for (const auto& path : cmp_configs) {
        FlagSet one = flags;
        one.config = path;
        configs.push_back(resolve(app, one));
      }
      falkon::cli::compare(configs, cmp_out);
      std::cout << "wrote " << cmp_out << '\n';
      return 0;
    }
    const RunConfig cfg = resolve(app, flags);
    const auto outcome = falkon::cli::run(cfg);
    std::cout << outcome.summary << '\n';
    return 0;
  } catch (const falkon::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
