#include "poolsim/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "poolsim/errors.hpp"
#include "poolsim/pricing.hpp"
#include "poolsim/schemes.hpp"

#ifndef POOLSIM_VERSION
#define POOLSIM_VERSION "0.0.0"
#endif

namespace poolsim {

using json = nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::string_view where,
                    std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const auto a : allowed) known = known || item.key() == a;
    if (!known) throw ConfigError("unknown field '" + item.key() + "' in " + std::string(where));
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    // nlohmann converts -3 or 2.5 to an integer silently
    const bool ok = std::is_unsigned_v<T> ? v.is_number_unsigned() : v.is_number_integer();
    if (!ok) throw ConfigError(std::string("bad value for '") + key + "': expected " +
                               (std::is_unsigned_v<T> ? "a non-negative integer" : "an integer"));
  }
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

double relative_error_percent(double approx, double reference) {
  if (reference == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * std::abs(approx - reference) / std::abs(reference);
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  for (const auto& x : v)
    if (x == s) return true;
  return false;
}

}  // namespace

std::string_view library_version() noexcept { return POOLSIM_VERSION; }

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::pathwise: return "pathwise";
    case ExperimentKind::call: return "call";
    case ExperimentKind::density: return "density";
    case ExperimentKind::scheme_check: return "scheme-check";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (const auto k : {ExperimentKind::pathwise, ExperimentKind::call, ExperimentKind::density,
                       ExperimentKind::scheme_check})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  model.validate();
  if (!(horizon > 0.0 && std::isfinite(horizon))) throw ConfigError("horizon must be positive");
  if (std::isnan(barrier)) throw ConfigError("barrier must be a number");
  if (steps && *steps < 1) throw ConfigError("grid.steps must be at least 1");
  if (!(steps_per_epsilon > 0.0)) throw ConfigError("grid.steps_per_epsilon must be positive");

  if (pathwise.epsilons.empty()) throw ConfigError("pathwise.epsilon_list is empty");
  for (const double e : pathwise.epsilons)
    if (!(e > 0.0)) throw ConfigError("pathwise epsilons must be positive");
  if (pathwise.n_paths < 1) throw ConfigError("pathwise.n_paths must be at least 1");
  if (pathwise.n_inner < 2) throw ConfigError("pathwise.n_inner must be at least 2");

  if (call.strikes.empty()) throw ConfigError("call.strikes is empty");
  for (const double a : call.strikes)
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("call strikes must lie in [0, 1]");
  for (const auto& m : call.methods) {
    bool known = false;
    for (const auto k : kCallMethods) known = known || m == k;
    if (!known) throw ConfigError("unknown call method '" + m + "'");
  }
  if (call.n_outer < 2) throw ConfigError("call.n_outer must be at least 2");
  if (call.n_inner < 2) throw ConfigError("call.n_inner must be at least 2");
  if (call.n_firms.size() != 1 && call.n_firms.size() != call.strikes.size())
    throw ConfigError("call.n_firms needs one entry or one per strike");
  for (const auto nf : call.n_firms)
    if (nf < 1) throw ConfigError("call.n_firms entries must be at least 1");

  if (!(density.b_max > density.b_min)) throw ConfigError("density.b_max must exceed b_min");
  if (density.b_count < 2) throw ConfigError("density.b_count must be at least 2");
  if (density.n_inner < 2) throw ConfigError("density.n_inner must be at least 2");

  if (scheme_check.epsilons.empty()) throw ConfigError("scheme_check.epsilon_list is empty");
  for (const double e : scheme_check.epsilons)
    if (!(e > 0.0)) throw ConfigError("scheme_check epsilons must be positive");
  if (scheme_check.n_paths < 2) throw ConfigError("scheme_check.n_paths must be at least 2");
}

GridSpec ExperimentConfig::grid_for(double epsilon) const {
  if (steps) {
    GridSpec g{horizon, *steps};
    g.validate();
    return g;
  }
  return GridSpec::from_epsilon(horizon, epsilon, steps_per_epsilon);
}

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(doc, "config",
                 {"experiment", "model", "horizon", "barrier", "grid", "seed", "market_seed",
                  "threads", "deterministic", "output", "pathwise", "call", "density",
                  "scheme_check"});
  ExperimentConfig cfg;
  if (doc.contains("experiment")) {
    std::string name;
    read(doc, "experiment", name);
    cfg.experiment = parse_experiment_kind(name);
  }
  if (doc.contains("model")) {
    const auto& m = doc["model"];
    reject_unknown(m, "model", {"y0", "m", "k", "xi", "rho_x", "rho_y", "rho_xy", "epsilon"});
    read(m, "y0", cfg.model.y0);
    read(m, "m", cfg.model.m);
    read(m, "k", cfg.model.k);
    read(m, "xi", cfg.model.xi);
    read(m, "rho_x", cfg.model.rho_x);
    read(m, "rho_y", cfg.model.rho_y);
    read(m, "rho_xy", cfg.model.rho_xy);
    read(m, "epsilon", cfg.model.epsilon);
  }
  read(doc, "horizon", cfg.horizon);
  read(doc, "barrier", cfg.barrier);
  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    reject_unknown(g, "grid", {"steps", "steps_per_epsilon"});
    if (g.contains("steps") && !g["steps"].is_null()) {
      std::int64_t n = 0;
      read(g, "steps", n);
      cfg.steps = n;
    }
    read(g, "steps_per_epsilon", cfg.steps_per_epsilon);
  }
  read(doc, "seed", cfg.seed);
  read(doc, "market_seed", cfg.market_seed);
  read(doc, "threads", cfg.threads);
  read(doc, "deterministic", cfg.deterministic);
  read(doc, "output", cfg.output);

  if (doc.contains("pathwise")) {
    const auto& s = doc["pathwise"];
    reject_unknown(s, "pathwise",
                   {"epsilon_list", "n_paths", "n_inner", "approximations", "emit_loglog"});
    read(s, "epsilon_list", cfg.pathwise.epsilons);
    read(s, "n_paths", cfg.pathwise.n_paths);
    read(s, "n_inner", cfg.pathwise.n_inner);
    if (s.contains("approximations")) {
      std::vector<std::string> names;
      read(s, "approximations", names);
      cfg.pathwise.approximations.clear();
      for (const auto& n : names) cfg.pathwise.approximations.push_back(parse_approx_kind(n));
    }
    read(s, "emit_loglog", cfg.pathwise.loglog_path);
  }
  if (doc.contains("call")) {
    const auto& s = doc["call"];
    reject_unknown(s, "call", {"strikes", "methods", "n_outer", "n_inner", "n_firms"});
    read(s, "strikes", cfg.call.strikes);
    read(s, "methods", cfg.call.methods);
    read(s, "n_outer", cfg.call.n_outer);
    read(s, "n_inner", cfg.call.n_inner);
    read(s, "n_firms", cfg.call.n_firms);
  }
  if (doc.contains("density")) {
    const auto& s = doc["density"];
    reject_unknown(s, "density", {"b_min", "b_max", "b_count", "n_inner", "path_id"});
    read(s, "b_min", cfg.density.b_min);
    read(s, "b_max", cfg.density.b_max);
    read(s, "b_count", cfg.density.b_count);
    read(s, "n_inner", cfg.density.n_inner);
    read(s, "path_id", cfg.density.path_id);
  }
  if (doc.contains("scheme_check")) {
    const auto& s = doc["scheme_check"];
    reject_unknown(s, "scheme_check", {"epsilon_list", "n_paths", "dump_path"});
    read(s, "epsilon_list", cfg.scheme_check.epsilons);
    read(s, "n_paths", cfg.scheme_check.n_paths);
    read(s, "dump_path", cfg.scheme_check.dump_path);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["experiment"] = std::string(to_string(cfg.experiment));
  doc["model"] = {{"y0", cfg.model.y0},       {"m", cfg.model.m},
                  {"k", cfg.model.k},         {"xi", cfg.model.xi},
                  {"rho_x", cfg.model.rho_x}, {"rho_y", cfg.model.rho_y},
                  {"rho_xy", cfg.model.rho_xy}, {"epsilon", cfg.model.epsilon}};
  doc["horizon"] = cfg.horizon;
  doc["barrier"] = cfg.barrier;
  doc["grid"] = {{"steps", cfg.steps ? json(*cfg.steps) : json(nullptr)},
                 {"steps_per_epsilon", cfg.steps_per_epsilon}};
  doc["seed"] = cfg.seed;
  doc["market_seed"] = cfg.market_seed;
  doc["threads"] = cfg.threads;
  doc["deterministic"] = cfg.deterministic;
  doc["output"] = cfg.output;
  std::vector<std::string> approx;
  for (const auto k : cfg.pathwise.approximations) approx.emplace_back(to_string(k));
  doc["pathwise"] = {{"epsilon_list", cfg.pathwise.epsilons},
                     {"n_paths", cfg.pathwise.n_paths},
                     {"n_inner", cfg.pathwise.n_inner},
                     {"approximations", approx},
                     {"emit_loglog", cfg.pathwise.loglog_path}};
  doc["call"] = {{"strikes", cfg.call.strikes},   {"methods", cfg.call.methods},
                 {"n_outer", cfg.call.n_outer},   {"n_inner", cfg.call.n_inner},
                 {"n_firms", cfg.call.n_firms}};
  doc["density"] = {{"b_min", cfg.density.b_min},     {"b_max", cfg.density.b_max},
                    {"b_count", cfg.density.b_count}, {"n_inner", cfg.density.n_inner},
                    {"path_id", cfg.density.path_id}};
  doc["scheme_check"] = {{"epsilon_list", cfg.scheme_check.epsilons},
                         {"n_paths", cfg.scheme_check.n_paths},
                         {"dump_path", cfg.scheme_check.dump_path}};
  return doc.dump(2);
}

std::string format_number(double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void CsvTable::write(std::ostream& out) const {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

std::string CsvTable::str() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

CsvTable run_pathwise_study(const ExperimentConfig& cfg, std::ostream* loglog) {
  cfg.validate();
  CsvTable table;
  table.header = {"epsilon", "path_id", "loss_true", "loss_true_se"};
  for (const auto k : kAllApproximations) table.header.emplace_back(to_string(k));
  for (const auto k : kAllApproximations) table.header.push_back("re_" + std::string(to_string(k)));
  if (loglog) *loglog << "epsilon,path_id,method,rel_err\n";

  auto selected = [&](ApproxKind k) {
    for (const auto s : cfg.pathwise.approximations)
      if (s == k) return true;
    return false;
  };

  for (const double eps : cfg.pathwise.epsilons) {
    ModelParams p = cfg.model;
    p.epsilon = eps;
    const GridSpec grid = cfg.grid_for(eps);
    for (std::uint64_t path = 0; path < cfg.pathwise.n_paths; ++path) {
      const auto mkt = simulate_market(p, grid, derive_seed(cfg.market_seed, path));
      const auto truth = true_loss(p, mkt, cfg.barrier, cfg.pathwise.n_inner,
                                   derive_seed(cfg.seed, path), cfg.run_options());
      std::vector<std::string> row{format_number(eps), std::to_string(path),
                                   format_number(truth.mean), format_number(truth.std_error())};
      std::vector<std::string> errors;
      for (const auto k : kAllApproximations) {
        if (!selected(k)) {
          row.emplace_back();
          errors.emplace_back();
          continue;
        }
        const double value = approx_loss(k, p, mkt, cfg.barrier);
        const double re = relative_error_percent(value, truth.mean);
        row.push_back(format_number(value));
        errors.push_back(format_number(re));
        if (loglog)
          *loglog << format_number(eps) << ',' << path << ',' << to_string(k) << ','
                  << format_number(re) << '\n';
      }
      row.insert(row.end(), errors.begin(), errors.end());
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

CsvTable run_call_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelParams& p = cfg.model;
  const GridSpec grid = cfg.grid_for(p.epsilon);
  const auto& strikes = cfg.call.strikes;
  const auto& methods = cfg.call.methods;
  const double B = cfg.barrier;
  const auto opts = cfg.run_options();
  const std::size_t n_strikes = strikes.size();

  struct Priced {
    std::string method;
    std::vector<std::optional<Estimate>> values;
  };
  std::vector<Priced> priced;
  auto slot = [&](std::string_view m) -> Priced& {
    priced.push_back({std::string(m), std::vector<std::optional<Estimate>>(n_strikes)});
    return priced.back();
  };
  auto deterministic = [](double v) { return Estimate{v, 0.0, 1}; };

  for (const auto m : kCallMethods) {
    if (!contains(methods, m)) continue;
    Priced& out = slot(m);
    if (m == "expLoss") {
      for (std::size_t i = 0; i < n_strikes; ++i)
        if (strikes[i] == 0.0) out.values[i] = expected_loss(p, grid, B, cfg.call.n_outer, cfg.seed, opts);
    } else if (m == "firmsCall") {
      std::vector<std::uint64_t> firms(n_strikes, cfg.call.n_firms[0]);
      if (cfg.call.n_firms.size() == n_strikes) firms = cfg.call.n_firms;
      const auto est = call_firms(p, grid, B, strikes, firms, cfg.call.n_outer, cfg.seed, opts);
      for (std::size_t i = 0; i < n_strikes; ++i) out.values[i] = est[i];
    } else if (m == "limCall") {
      const auto est = call_limiting(p, grid, B, strikes, cfg.call.n_outer, cfg.call.n_inner,
                                     cfg.seed, opts);
      for (std::size_t i = 0; i < n_strikes; ++i) out.values[i] = est[i];
    } else if (m == "appY") {
      const auto est = call_appY(p, grid, B, strikes, cfg.call.n_outer, cfg.seed, opts);
      for (std::size_t i = 0; i < n_strikes; ++i) out.values[i] = est[i];
    } else if (m == "erg1Y" || m == "erg2Y") {
      const auto avg = m == "erg1Y" ? Averaging::linear : Averaging::quadratic;
      const auto est = call_ergY(p, grid, B, strikes, avg, cfg.call.n_outer, cfg.seed, opts);
      for (std::size_t i = 0; i < n_strikes; ++i) out.values[i] = est[i];
    } else {
      const auto avg = m == "erg1YZ" ? Averaging::linear : Averaging::quadratic;
      for (std::size_t i = 0; i < n_strikes; ++i)
        out.values[i] = deterministic(call_ergYZ(p, {strikes[i], B, cfg.horizon}, avg));
    }
  }

  auto find = [&](std::string_view m, std::size_t i) -> std::optional<Estimate> {
    for (const auto& pr : priced)
      if (pr.method == m) return pr.values[i];
    return std::nullopt;
  };

  CsvTable table;
  table.header = {"method", "strike", "price", "std_err", "rel_err_vs_reference"};
  for (const auto& pr : priced) {
    for (std::size_t i = 0; i < n_strikes; ++i) {
      if (!pr.values[i]) continue;
      const Estimate& e = *pr.values[i];
      const std::string_view ref_name = strikes[i] == 0.0 && find("expLoss", i) ? "expLoss" : "firmsCall";
      const auto ref = pr.method == ref_name ? std::nullopt : find(ref_name, i);
      table.rows.push_back({pr.method, format_number(strikes[i]), format_number(e.mean),
                            format_number(e.std_error()),
                            ref ? format_number(relative_error_percent(e.mean, ref->mean)) : ""});
    }
  }
  return table;
}

CsvTable run_density_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelParams& p = cfg.model;
  const GridSpec grid = cfg.grid_for(p.epsilon);
  const auto mkt = simulate_market(p, grid, derive_seed(cfg.market_seed, cfg.density.path_id));
  CsvTable table;
  table.header = {"B", "loss_true", "loss_true_se", "density_true", "density_true_se"};
  for (const auto k : kAllApproximations) table.header.emplace_back(to_string(k));
  const auto& d = cfg.density;
  for (std::uint64_t i = 0; i < d.b_count; ++i) {
    const double B = d.b_min + (d.b_max - d.b_min) * static_cast<double>(i) /
                                   static_cast<double>(d.b_count - 1);
    const auto [cdf, pdf] = true_loss_and_density(p, mkt, B, d.n_inner,
                                                  derive_seed(cfg.seed, d.path_id), cfg.run_options());
    std::vector<std::string> row{format_number(B), format_number(cdf.mean),
                                 format_number(cdf.std_error()), format_number(pdf.mean),
                                 format_number(pdf.std_error())};
    for (const auto k : kAllApproximations) row.push_back(format_number(approx_loss(k, p, mkt, B)));
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable run_scheme_check(const ExperimentConfig& cfg, std::ostream* path_dump) {
  cfg.validate();
  CsvTable table;
  table.header = {"scheme",   "epsilon",       "steps",         "mean",
                  "mean_se",  "mean_theory",   "variance",      "variance_theory",
                  "variance_continuous"};
  for (const double eps : cfg.scheme_check.epsilons) {
    ModelParams p = cfg.model;
    p.epsilon = eps;
    const GridSpec grid = cfg.grid_for(eps);
    const double rho_factor = std::sqrt(1.0 - p.rho_y * p.rho_y);
    const auto est = run_multi(
        2,
        [&](const SampleContext& ctx, std::span<double> out) {
          const auto dw = gaussian_increments(ctx.stream(StreamRole::firm_y), grid);
          out[0] = ou_path_exact(p, grid, dw, rho_factor, p.y0).back();
          out[1] = ou_path_euler(p, grid, dw, rho_factor, p.y0).back();
        },
        cfg.scheme_check.n_paths, cfg.seed, cfg.run_options());

    const double dt = grid.dt();
    const auto N = static_cast<double>(grid.N);
    const double vol2 = p.ou_vol() * p.ou_vol() * rho_factor * rho_factor * dt;
    const double a = p.ou_decay(dt);
    const double b = 1.0 - p.k * dt / p.epsilon;
    // v_N = c^N v_0 + sum_j c^{N-j+s} vol dW_j with s = 1 (exact) or 0 (Euler)
    const double exact_var = vol2 * a * a * (1.0 - std::pow(a, 2.0 * N)) / (1.0 - a * a);
    const double euler_var = b * b == 1.0 ? vol2 * N : vol2 * (1.0 - std::pow(b, 2.0 * N)) / (1.0 - b * b);
    const double continuous = stationary_variances(p).var_y * (1.0 - std::exp(-2.0 * p.k * grid.T / eps));

    auto add = [&](const char* name, const Estimate& e, double mean_theory, double var_theory) {
      table.rows.push_back({name, format_number(eps), std::to_string(grid.N), format_number(e.mean),
                            format_number(e.std_error()), format_number(mean_theory),
                            format_number(e.sample_std * e.sample_std), format_number(var_theory),
                            format_number(continuous)});
    };
    add("exact", est[0], p.y0 * std::pow(a, N), exact_var);
    add("euler", est[1], p.y0 * std::pow(b, N), euler_var);

    if (path_dump && eps == cfg.scheme_check.epsilons.front()) {
      const auto mkt = simulate_market(p, grid, cfg.market_seed);
      const auto y = ou_path_exact(p, grid, gaussian_increments({cfg.seed, StreamRole::firm_y, 0}, grid),
                                   rho_factor, p.y0);
      const auto x = asset_path_euler(p, grid, y, mkt.z, mkt.dwx,
                                      gaussian_increments({cfg.seed, StreamRole::firm_x, 0}, grid));
      write_path_csv(*path_dump, grid, y, mkt.z, x);
    }
  }
  return table;
}

CsvTable run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::pathwise: {
      if (cfg.pathwise.loglog_path.empty()) return run_pathwise_study(cfg);
      std::ofstream loglog(cfg.pathwise.loglog_path);
      if (!loglog) throw ConfigError("cannot write '" + cfg.pathwise.loglog_path + "'");
      return run_pathwise_study(cfg, &loglog);
    }
    case ExperimentKind::call: return run_call_study(cfg);
    case ExperimentKind::density: return run_density_study(cfg);
    case ExperimentKind::scheme_check: {
      if (cfg.scheme_check.dump_path.empty()) return run_scheme_check(cfg);
      std::ofstream dump(cfg.scheme_check.dump_path);
      if (!dump) throw ConfigError("cannot write '" + cfg.scheme_check.dump_path + "'");
      return run_scheme_check(cfg, &dump);
    }
  }
  throw ConfigError("unknown experiment");
}

std::string run_metadata_json(const ExperimentConfig& cfg, double wall_seconds) {
  json meta;
  meta["tool"] = "poolsim";
  meta["version"] = std::string(library_version());
  meta["experiment"] = std::string(to_string(cfg.experiment));
  meta["seeds"] = {{"seed", cfg.seed}, {"market_seed", cfg.market_seed}};
  meta["threads"] = cfg.threads;
  meta["deterministic"] = cfg.deterministic;
  meta["wall_time_seconds"] = wall_seconds;
  meta["config"] = json::parse(config_to_json(cfg));
  return meta.dump(2);
}

}  // namespace poolsim
