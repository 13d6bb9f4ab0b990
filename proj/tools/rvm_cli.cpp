#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rvm/config.hpp"
#include "rvm/io.hpp"
#include "rvm/oracle.hpp"

namespace fs = std::filesystem;
using namespace rvm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitThreshold = 4;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "JSON config file");
  sub->add_option("--override", args.overrides,
                  "KEY=VALUE override for a scalar config key (repeatable)");
  sub->add_option("--seed", args.seed, "root seed (overrides config)");
  sub->add_option("--out", args.out, "output directory (overrides config)");
  sub->add_option("--threads", args.threads, "worker threads (overrides config)");
}

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg = load_config(args.config_path, args.overrides);
  if (args.seed) cfg.seed = *args.seed;
  if (args.out) cfg.out = *args.out;
  if (args.threads) {
    cfg.threads = *args.threads;
  } else if (cfg.threads == 0) {
    if (const char* env = std::getenv("RVM_THREADS"))
      cfg.threads = std::atoi(env);
  }
  return cfg;
}

fs::path prepare_out(const RunConfig& cfg) {
  fs::path dir(cfg.out);
  fs::create_directories(dir);
  write_text_file(dir / "resolved_config.json", cfg.to_json().dump(2) + "\n");
  return dir;
}

void setup_threads(const RunConfig& cfg) {
#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif
  Eigen::setNbThreads(1);  // reductions stay in a fixed order
}

DesignMatrix load_or_generate_design(const RunConfig& cfg) {
  if (!cfg.design.csv.empty())
    return DesignMatrix(read_matrix_csv(cfg.design.csv));
  Rng rng(derive_seed(cfg.seed, {0xde5160}));
  return generate_design(cfg.design.n, cfg.design.p,
                         design_kind_from_string(cfg.design.kind), rng,
                         cfg.design.theta);
}

int cmd_kernel_check(const RunConfig& cfg) {
  setup_threads(cfg);
  const fs::path dir = prepare_out(cfg);
  const DesignMatrix X = load_or_generate_design(cfg);
  const int n = X.n();
  const KernelSpec spec = cfg.kernel_object(X.p());
  const KernelMatrix K = build_kernel(X, spec);

  const double c1 = std::isnan(cfg.checks.c1) ? 1.0 - 1.0 / n : cfg.checks.c1;
  const double c2 = std::isnan(cfg.checks.c2) ? 1.0 + 1.0 / n : cfg.checks.c2;
  const SpectralCertificate cert = spectral_certificate(K, c1, c2);

  Json checks = Json::object();
  bool all_ok = cert.satisfied;
  if (cfg.checks.separation) {
    const SeparationReport rep = check_gaussian_separation(X, spec.theta);
    checks["separation"] = to_json(rep);
    all_ok = all_ok && rep.satisfied;
  }
  if (cfg.checks.orthogonality) {
    const OrthogonalityReport rep =
        check_near_orthogonality(X, cfg.checks.a_L, cfg.checks.a_U);
    checks["near_orthogonality"] = to_json(rep);
    all_ok = all_ok && rep.satisfied;
  }

  write_matrix_csv(dir / "design.csv", X.rows);
  write_matrix_csv(dir / "kernel.csv", K.entries);
  write_text_file(dir / "certificate.json", to_json(cert).dump(2) + "\n");
  write_text_file(dir / "checks.json", checks.dump(2) + "\n");

  if (cfg.verbosity > 0) {
    std::cout << "certificate: lambda in [" << format_double(cert.lambda_min)
              << ", " << format_double(cert.lambda_max) << "], bounds ["
              << format_double(c1) << ", " << format_double(c2) << "] -> "
              << (cert.satisfied ? "pass" : "FAIL") << "\n";
    for (const auto& item : checks.items())
      std::cout << item.key() << ": "
                << (item.value().at("satisfied").get<bool>() ? "pass" : "FAIL")
                << "\n";
  }
  return all_ok ? kExitOk : kExitCheckFailed;
}

struct FitProblem {
  DesignMatrix X;
  KernelMatrix K;
  Vector Y;
  std::optional<TrueModel> truth;
  int q = 0;
  SpectralCertificate cert;
};

FitProblem assemble_problem(const RunConfig& cfg, const fs::path& dir) {
  FitProblem pb;
  if (!cfg.data.design_csv.empty())
    pb.X = DesignMatrix(read_matrix_csv(cfg.data.design_csv));
  else
    pb.X = load_or_generate_design(cfg);
  const int n = pb.X.n();
  pb.K = build_kernel(pb.X, cfg.kernel_object(pb.X.p()));
  pb.cert = spectral_certificate(pb.K, 0.0,
                                 std::numeric_limits<double>::infinity());

  pb.q = cfg.truth.q >= 0
             ? cfg.truth.q
             : std::min(n, std::max(1, static_cast<int>(std::ceil(
                                           std::pow(n, cfg.truth.gamma)))));
  if (!cfg.data.y_csv.empty()) {
    pb.Y = read_vector_csv(cfg.data.y_csv);
    if (pb.Y.size() != n)
      throw ConfigError("data.y_csv length does not match the design");
  } else {
    Rng rng_truth(derive_seed(cfg.seed, {0x7277}));
    Rng rng_data(derive_seed(cfg.seed, {0xda7a}));
    pb.truth = generate_truth(n, pb.q, cfg.truth.M, cfg.truth.sigma0_sq,
                              support_rule_from_string(cfg.truth.support_rule),
                              value_rule_from_string(cfg.truth.value_rule),
                              rng_truth);
    pb.Y = simulate_data(pb.K.entries, *pb.truth, rng_data);
    write_matrix_csv(dir / "design.csv", pb.X.rows);
    write_vector_csv(dir / "y.csv", pb.Y);
    write_vector_csv(dir / "beta0.csv", pb.truth->beta0);
  }
  return pb;
}

Hyperparams hyper_for(const RunConfig& cfg, int n, int q, double t1) {
  Hyperparams hyper;
  hyper.a = cfg.hyper.a;
  hyper.b = cfg.hyper.b;
  hyper.tau_sq = tau_squared(cfg.schedule_object(), n, q, t1);
  return hyper;
}

int cmd_fit(const RunConfig& cfg) {
  setup_threads(cfg);
  const fs::path dir = prepare_out(cfg);
  const FitProblem pb = assemble_problem(cfg, dir);
  const Hyperparams hyper = hyper_for(cfg, pb.X.n(), pb.q, pb.cert.lambda_min);

  ChainConfig chain = cfg.chain_object();
  if (pb.truth) {
    chain.ref_Kbeta = pb.K.entries * pb.truth->beta0;
    chain.threshold_Kbeta =
        pb.q > 0 ? pb.q * std::log(static_cast<double>(pb.X.n()) / pb.q) : 0.0;
    chain.ref_beta = pb.truth->beta0;
    chain.threshold_beta = std::sqrt(
        pb.q / (pb.cert.lambda_min * pb.cert.lambda_min) * std::pow(pb.X.n(), 1.5));
  }

  TraceSink trace;
  const ChainSummary summary =
      run_chain(pb.K.entries, pb.Y, cfg.prior_object(), hyper, chain,
                cfg.chain.dump_trace ? &trace : nullptr);
  Json out = to_json(summary);
  out["tau_sq"] = hyper.tau_sq;
  out["q"] = pb.q;
  write_text_file(dir / "chain_summary.json", out.dump(2) + "\n");
  if (cfg.chain.dump_trace) write_trace_csv(dir / "trace.csv", trace);

  if (cfg.verbosity > 0)
    std::cout << "fit: n=" << pb.X.n() << " kept=" << summary.n_kept
              << " ess_min=" << format_double(summary.ess_min)
              << " rhat=" << format_double(summary.rhat_max) << "\n";
  return kExitOk;
}

int cmd_oracle(const RunConfig& cfg) {
  setup_threads(cfg);
  const fs::path dir = prepare_out(cfg);
  const FitProblem pb = assemble_problem(cfg, dir);
  const Hyperparams hyper = hyper_for(cfg, pb.X.n(), pb.q, pb.cert.lambda_min);

  Json out;
  if (cfg.oracle.refine) {
    const RefinedOracle ref = oracle_refined(pb.K.entries, pb.Y, cfg.prior_object(),
                                             hyper, cfg.grid_object());
    out = to_json(ref.fine);
    out["refinement"] = Json{{"coarse_nodes", ref.coarse.grid.nodes_per_dim},
                             {"rel_change_mean_beta", ref.rel_change_mean_beta}};
  } else {
    out = to_json(
        oracle_posterior(pb.K.entries, pb.Y, cfg.prior_object(), hyper, cfg.grid_object()));
  }
  out["tau_sq"] = hyper.tau_sq;
  write_text_file(dir / "oracle.json", out.dump(2) + "\n");
  if (cfg.verbosity > 0)
    std::cout << "oracle: n=" << pb.X.n() << " nodes_per_dim="
              << out.at("grid").at("nodes_per_dim").get<int>() << "\n";
  return kExitOk;
}

Json fits_json(const std::vector<Aggregate>& aggs, ScheduleRegime regime) {
  Json fits = Json::object();
  const auto try_fit = [&](const char* name, RateMetric m, RateAgainst a) {
    try {
      fits[name] = to_json(rate_fit(aggs, m, a));
    } catch (const ConfigError& e) {
      fits[name] = Json{{"error", e.what()}};
    }
  };
  try_fit("err_sq_vs_q", RateMetric::ErrSq, RateAgainst::Q);
  try_fit("trace_var_vs_q", RateMetric::TraceVar, RateAgainst::Q);
  if (regime != ScheduleRegime::BoundedKernel) {
    try_fit("err_sq_vs_q_t2sq", RateMetric::ErrSq, RateAgainst::QT2Sq);
    try_fit("trace_var_vs_q_t2sq", RateMetric::TraceVar, RateAgainst::QT2Sq);
  }
  return fits;
}

int cmd_bench(const RunConfig& cfg) {
  setup_threads(cfg);
  const fs::path dir = prepare_out(cfg);
  const ExperimentConfig exp = cfg.experiment_object();
  const BenchResult result = run_bench(exp);
  const std::vector<Aggregate> aggs = aggregate_cells(result.cells);

  write_cells_csv(dir / "cells.csv", result.cells);

  Json summary;
  summary["aggregates"] = Json::array();
  for (const auto& a : aggs) summary["aggregates"].push_back(to_json(a));
  summary["rate_fits"] = fits_json(aggs, exp.schedule.regime);
  Json tails = Json::array();
  for (const auto& pt : tail_curve(aggs))
    tails.push_back(Json{{"n", pt.n}, {"tail", pt.mean}, {"se", pt.se}});
  summary["tail_curve"] = tails;
  Json tails_beta = Json::array();
  for (const auto& pt : tail_curve(aggs, true))
    tails_beta.push_back(Json{{"n", pt.n}, {"tail", pt.mean}, {"se", pt.se}});
  summary["tail_curve_beta"] = tails_beta;
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");

  const fs::path curves = dir / "curves";
  fs::create_directories(curves);
  const auto curve_of = [&](const char* name, auto pick) {
    std::vector<std::array<double, 3>> rows;
    for (const auto& a : aggs)
      if (a.usable > 0) rows.push_back(pick(a));
    write_curve(curves / name, rows, true);
  };
  curve_of("err_sq_vs_n.dat", [](const Aggregate& a) {
    return std::array<double, 3>{static_cast<double>(a.n), a.err_sq, a.err_sq_se};
  });
  curve_of("trace_var_vs_n.dat", [](const Aggregate& a) {
    return std::array<double, 3>{static_cast<double>(a.n), a.trace_var, a.trace_var_se};
  });
  curve_of("tail_vs_n.dat", [](const Aggregate& a) {
    return std::array<double, 3>{static_cast<double>(a.n), a.tail, a.tail_se};
  });
  curve_of("err_over_q_vs_n.dat", [](const Aggregate& a) {
    return std::array<double, 3>{static_cast<double>(a.n), a.err_over_q, 0.0};
  });

  int flagged = 0;
  for (const auto& c : result.cells) flagged += c.flagged ? 1 : 0;
  if (cfg.verbosity > 0) {
    std::cout << "bench: " << result.cells.size() << " cells, " << flagged
              << " flagged\n";
    for (const auto& a : aggs)
      std::cout << "  n=" << a.n << " q=" << a.q
                << " err_sq=" << format_double(a.err_sq)
                << " trace_var=" << format_double(a.trace_var)
                << " tail=" << format_double(a.tail) << " usable=" << a.usable
                << "\n";
  }
  return kExitOk;
}

int cmd_rate_fit(const RunConfig& cfg, const std::vector<std::string>& paths) {
  setup_threads(cfg);
  if (paths.empty()) throw ConfigError("rate-fit: need at least one cells.csv path");
  std::vector<CellResult> cells;
  for (const auto& p : paths) {
    std::vector<CellResult> part = read_cells_csv(p);
    cells.insert(cells.end(), part.begin(), part.end());
  }
  const std::vector<Aggregate> aggs = aggregate_cells(cells);
  const RateFit fit = rate_fit(aggs, rate_metric_from_string(cfg.rate_fit.metric),
                               rate_against_from_string(cfg.rate_fit.against));
  Json out = to_json(fit);
  out["metric"] = cfg.rate_fit.metric;
  out["against"] = cfg.rate_fit.against;
  std::cout << out.dump(2) << "\n";
  const fs::path dir = prepare_out(cfg);
  write_text_file(dir / "rate_fit.json", out.dump(2) + "\n");
  if (!std::isnan(cfg.rate_fit.max_slope) && fit.slope > cfg.rate_fit.max_slope) {
    std::cerr << "rate-fit: slope " << format_double(fit.slope)
              << " exceeds --max-slope " << format_double(cfg.rate_fit.max_slope)
              << "\n";
    return kExitThreshold;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical shrinkage kernel regression toolkit"};
  app.require_subcommand(1);

  CommonArgs kc_args, fit_args, oracle_args, bench_args, rf_args;
  std::vector<std::string> rf_paths;
  double rf_max_slope = std::numeric_limits<double>::quiet_NaN();
  std::string rf_metric, rf_against;

  CLI::App* kc = app.add_subcommand("kernel-check",
                                    "build a kernel and verify spectral bounds");
  add_common(kc, kc_args);
  CLI::App* fit = app.add_subcommand("fit", "run the Gibbs sampler on one dataset");
  add_common(fit, fit_args);
  CLI::App* orc = app.add_subcommand("oracle", "grid-integration posterior (n <= 3)");
  add_common(orc, oracle_args);
  CLI::App* ben = app.add_subcommand("bench", "contraction experiment over an n-grid");
  add_common(ben, bench_args);
  CLI::App* rf = app.add_subcommand("rate-fit", "log-log rate fit over cell CSVs");
  add_common(rf, rf_args);
  rf->add_option("paths", rf_paths, "cells.csv files");
  rf->add_option("--metric", rf_metric, "err_sq | trace_var | err_sq_beta | trace_var_beta");
  rf->add_option("--against", rf_against, "q | q_t2sq");
  rf->add_option("--max-slope", rf_max_slope, "fail (exit 4) if slope exceeds this");

  CLI11_PARSE(app, argc, argv);

  try {
    if (kc->parsed()) return cmd_kernel_check(resolve_config(kc_args));
    if (fit->parsed()) return cmd_fit(resolve_config(fit_args));
    if (orc->parsed()) return cmd_oracle(resolve_config(oracle_args));
    if (ben->parsed()) return cmd_bench(resolve_config(bench_args));
    if (rf->parsed()) {
      RunConfig cfg = resolve_config(rf_args);
      if (!rf_metric.empty()) cfg.rate_fit.metric = rf_metric;
      if (!rf_against.empty()) cfg.rate_fit.against = rf_against;
      if (!std::isnan(rf_max_slope)) cfg.rate_fit.max_slope = rf_max_slope;
      return cmd_rate_fit(cfg, rf_paths);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
