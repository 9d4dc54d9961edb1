#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poolsim/errors.hpp"
#include "poolsim/experiment.hpp"
#include "poolsim/pricing.hpp"
#include "poolsim/special.hpp"

namespace {

using namespace poolsim;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;

// Deferred application of command-line overrides onto a loaded config.
class Overrides {
 public:
  template <typename T, typename Apply>
  CLI::Option* add(CLI::App* app, const std::string& name, const std::string& help, Apply apply) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help);
    appliers_.push_back([opt, value, apply](ExperimentConfig& cfg) {
      if (opt->count() > 0) apply(cfg, *value);
    });
    return opt;
  }

  void apply(ExperimentConfig& cfg) const {
    for (const auto& f : appliers_) f(cfg);
  }

 private:
  std::vector<std::function<void(ExperimentConfig&)>> appliers_;
};

struct Common {
  std::string config_path;
  std::string output;
  int deterministic = -1;  // -1: keep config value
};

void add_common(CLI::App* sub, Common& common, Overrides& ov) {
  sub->add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--output,-o", common.output, "CSV output path (default: stdout)");
  sub->add_flag_function(
      "--deterministic,!--no-deterministic",
      [&common](std::int64_t n) { common.deterministic = n > 0 ? 1 : 0; },
      "Block-ordered reduction, identical results for any thread count (default on)");
  ov.add<unsigned>(sub, "--threads", "Worker threads, 0 = all cores",
                   [](ExperimentConfig& c, unsigned v) { c.threads = v; });
  ov.add<std::uint64_t>(sub, "--seed", "Seed of the Monte Carlo samples",
                        [](ExperimentConfig& c, std::uint64_t v) { c.seed = v; });
  ov.add<double>(sub, "--barrier", "Default barrier B",
                 [](ExperimentConfig& c, double v) { c.barrier = v; });
  ov.add<double>(sub, "--horizon", "Time horizon T",
                 [](ExperimentConfig& c, double v) { c.horizon = v; });
  ov.add<std::int64_t>(sub, "--steps", "Explicit number of time steps N",
                       [](ExperimentConfig& c, std::int64_t v) { c.steps = v; });
  ov.add<double>(sub, "--steps-per-epsilon", "N = ceil(c T / eps) when --steps is absent",
                 [](ExperimentConfig& c, double v) { c.steps_per_epsilon = v; });
}

void add_model(CLI::App* sub, Overrides& ov) {
  ov.add<double>(sub, "--epsilon", "Time-scale parameter epsilon",
                 [](ExperimentConfig& c, double v) { c.model.epsilon = v; });
  ov.add<double>(sub, "--xi", "Volatility of the fast factors",
                 [](ExperimentConfig& c, double v) { c.model.xi = v; });
  ov.add<double>(sub, "--rho-x", "Asset correlation with the market",
                 [](ExperimentConfig& c, double v) { c.model.rho_x = v; });
}

std::vector<ApproxKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<ApproxKind> kinds;
  for (const auto& n : names) kinds.push_back(parse_approx_kind(n));
  return kinds;
}

// --- selftest ---------------------------------------------------------------

int run_selftest() {
  int failures = 0;
  auto check = [&](const char* name, bool ok, double value) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << " (" << format_number(value) << ")\n";
    if (!ok) ++failures;
  };

  check("norm_cdf(0) = 1/2", norm_cdf(0.0) == 0.5, norm_cdf(0.0));
  const double q = norm_inv_cdf(0.975);
  check("norm_inv_cdf(0.975)", std::abs(q - 1.959963984540054) < 1e-14, q);
  const double b = bvn_cdf(0.0, 0.0, 0.5);
  check("bvn_cdf(0,0,1/2) = 1/3", std::abs(b - 1.0 / 3.0) < 1e-12, b);

  const ModelParams p = reference_params(4e-3);
  const double lin[] = {0.18262, 0.15724, 0.13789};
  const double quad[] = {0.18912, 0.16376, 0.14423};
  const double strikes[] = {0.0, 0.05, 0.10};
  for (int i = 0; i < 3; ++i) {
    const double v1 = call_ergYZ(p, {strikes[i], -0.1, 1.0}, Averaging::linear);
    const double v2 = call_ergYZ(p, {strikes[i], -0.1, 1.0}, Averaging::quadratic);
    check("call erg1YZ reference value", std::abs(v1 - lin[i]) < 2e-5, v1);
    check("call erg2YZ reference value", std::abs(v2 - quad[i]) < 2e-5, v2);
  }

  const auto est = run([](const SampleContext& ctx) { return GaussianStream(ctx.stream(StreamRole::firm_y)).next(); },
                       100000, 1);
  check("Gaussian stream mean within 4 SE", std::abs(est.mean) < 4.0 * est.std_error(), est.mean);

  RunOptions one{1, true, 256};
  RunOptions many{4, true, 256};
  auto sampler = [](const SampleContext& ctx) {
    GaussianStream g(ctx.stream(StreamRole::market_y));
    return std::exp(g.next());
  };
  const auto a1 = run(sampler, 20000, 3, one);
  const auto a4 = run(sampler, 20000, 3, many);
  check("deterministic reduction independent of threads",
        a1.mean == a4.mean && a1.sample_std == a4.sample_std, a1.mean - a4.mean);

  std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? kExitOk : kExitFailure;
}

// --- experiment runs --------------------------------------------------------

int run_configured(ExperimentKind kind, const Common& common, const Overrides& ov) {
  ExperimentConfig cfg = common.config_path.empty() ? ExperimentConfig{} : load_config(common.config_path);
  cfg.experiment = kind;
  ov.apply(cfg);
  if (common.deterministic >= 0) cfg.deterministic = common.deterministic == 1;
  if (!common.output.empty()) cfg.output = common.output;
  cfg.validate();

  const auto start = std::chrono::steady_clock::now();
  const CsvTable table = run_experiment(cfg);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string meta = run_metadata_json(cfg, wall);
  if (cfg.output.empty() || cfg.output == "-") {
    table.write(std::cout);
    std::cerr << meta << '\n';
  } else {
    std::ofstream out(cfg.output, std::ios::binary);
    if (!out) throw ConfigError("cannot write output '" + cfg.output + "'");
    table.write(out);
    std::ofstream side(cfg.output + ".meta.json", std::ios::binary);
    if (!side) throw ConfigError("cannot write metadata sidecar");
    side << meta << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"poolsim: large-pool credit loss under fast mean-reverting exp-OU volatility"};
  app.set_version_flag("--version", std::string(library_version()));
  app.require_subcommand(1);

  Common common;
  Overrides ov;

  auto* pathwise = app.add_subcommand("pathwise", "Limiting loss and its approximations per market path");
  add_common(pathwise, common, ov);
  add_model(pathwise, ov);
  ov.add<std::vector<double>>(pathwise, "--epsilon-list", "Epsilon values",
                              [](ExperimentConfig& c, const std::vector<double>& v) { c.pathwise.epsilons = v; })
      ->delimiter(',');
  ov.add<std::uint64_t>(pathwise, "--n-inner", "Inner samples of the nested estimator",
                        [](ExperimentConfig& c, std::uint64_t v) { c.pathwise.n_inner = v; });
  ov.add<std::uint64_t>(pathwise, "--n-paths", "Market paths per epsilon",
                        [](ExperimentConfig& c, std::uint64_t v) { c.pathwise.n_paths = v; });
  ov.add<std::uint64_t>(pathwise, "--market-seed", "Seed of the market paths",
                        [](ExperimentConfig& c, std::uint64_t v) { c.market_seed = v; });
  ov.add<std::vector<std::string>>(pathwise, "--approximations", "Subset of appY,erg1Y,erg2Y,erg1YZ,erg2YZ",
                                   [](ExperimentConfig& c, const std::vector<std::string>& v) {
                                     c.pathwise.approximations = parse_kinds(v);
                                   })
      ->delimiter(',');
  ov.add<std::string>(pathwise, "--emit-loglog", "Write epsilon,path_id,method,rel_err rows to this file",
                      [](ExperimentConfig& c, const std::string& v) { c.pathwise.loglog_path = v; });
  pathwise->footer(
      "CSV columns: epsilon,path_id,loss_true,loss_true_se,appY,erg1Y,erg2Y,erg1YZ,erg2YZ,"
      "re_appY,re_erg1Y,re_erg2Y,re_erg1YZ,re_erg2YZ (relative errors in percent)");

  auto* call = app.add_subcommand("call", "Tranche call prices (L_T - a)^+");
  add_common(call, common, ov);
  add_model(call, ov);
  ov.add<std::vector<double>>(call, "--strikes", "Attachment points a",
                              [](ExperimentConfig& c, const std::vector<double>& v) { c.call.strikes = v; })
      ->delimiter(',');
  ov.add<std::vector<std::string>>(call, "--methods",
                                   "Subset of expLoss,firmsCall,limCall,appY,erg1Y,erg2Y,erg1YZ,erg2YZ",
                                   [](ExperimentConfig& c, const std::vector<std::string>& v) { c.call.methods = v; })
      ->delimiter(',');
  ov.add<std::uint64_t>(call, "--n-outer", "Outer samples",
                        [](ExperimentConfig& c, std::uint64_t v) { c.call.n_outer = v; });
  ov.add<std::uint64_t>(call, "--n-inner", "Inner samples for limCall",
                        [](ExperimentConfig& c, std::uint64_t v) { c.call.n_inner = v; });
  ov.add<std::vector<std::uint64_t>>(call, "--n-firms", "Firms per strike for firmsCall (one or one per strike)",
                                     [](ExperimentConfig& c, const std::vector<std::uint64_t>& v) { c.call.n_firms = v; })
      ->delimiter(',');
  call->footer(
      "CSV columns: method,strike,price,std_err,rel_err_vs_reference (reference: expLoss at "
      "strike 0, firmsCall otherwise; percent)");

  auto* density = app.add_subcommand("density", "Loss CDF and density across barriers on one market path");
  add_common(density, common, ov);
  add_model(density, ov);
  ov.add<double>(density, "--b-min", "Smallest barrier", [](ExperimentConfig& c, double v) { c.density.b_min = v; });
  ov.add<double>(density, "--b-max", "Largest barrier", [](ExperimentConfig& c, double v) { c.density.b_max = v; });
  ov.add<std::uint64_t>(density, "--b-count", "Number of barriers",
                        [](ExperimentConfig& c, std::uint64_t v) { c.density.b_count = v; });
  ov.add<std::uint64_t>(density, "--n-inner", "Inner samples",
                        [](ExperimentConfig& c, std::uint64_t v) { c.density.n_inner = v; });
  ov.add<std::uint64_t>(density, "--path-id", "Market path index",
                        [](ExperimentConfig& c, std::uint64_t v) { c.density.path_id = v; });
  ov.add<std::uint64_t>(density, "--market-seed", "Seed of the market paths",
                        [](ExperimentConfig& c, std::uint64_t v) { c.market_seed = v; });
  density->footer(
      "CSV columns: B,loss_true,loss_true_se,density_true,density_true_se,appY,erg1Y,erg2Y,erg1YZ,erg2YZ");

  auto* scheme = app.add_subcommand("scheme-check", "OU scheme endpoint statistics against closed forms");
  add_common(scheme, common, ov);
  add_model(scheme, ov);
  ov.add<std::vector<double>>(scheme, "--epsilon-list", "Epsilon values",
                              [](ExperimentConfig& c, const std::vector<double>& v) { c.scheme_check.epsilons = v; })
      ->delimiter(',');
  ov.add<std::uint64_t>(scheme, "--n-paths", "Paths per epsilon",
                        [](ExperimentConfig& c, std::uint64_t v) { c.scheme_check.n_paths = v; });
  ov.add<std::uint64_t>(scheme, "--market-seed", "Seed of the dumped market path",
                        [](ExperimentConfig& c, std::uint64_t v) { c.market_seed = v; });
  ov.add<std::string>(scheme, "--dump-path", "Write one t,y,z,x firm path to this file",
                      [](ExperimentConfig& c, const std::string& v) { c.scheme_check.dump_path = v; });
  scheme->footer(
      "CSV columns: scheme,epsilon,steps,mean,mean_se,mean_theory,variance,variance_theory,"
      "variance_continuous");

  auto* selftest = app.add_subcommand("selftest", "Quick internal consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (selftest->parsed()) return run_selftest();
    if (pathwise->parsed()) return run_configured(ExperimentKind::pathwise, common, ov);
    if (call->parsed()) return run_configured(ExperimentKind::call, common, ov);
    if (density->parsed()) return run_configured(ExperimentKind::density, common, ov);
    if (scheme->parsed()) return run_configured(ExperimentKind::scheme_check, common, ov);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "numerical domain error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitConfig;
}
