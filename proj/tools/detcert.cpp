// detcert: verification, falsification, and estimation workflows for
// incremental-detectability certificates of continuous-time systems.
//
// Exit codes: 0 property held / computation succeeded, 2 violation found
// (witness emitted), 1 error.

#include <algorithm>
#include <cmath>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "detcert/detectability.hpp"
#include "detcert/observer.hpp"
#include "detcert/parallel.hpp"
#include "detcert/rng.hpp"
#include "detcert/serialize.hpp"
#include "detcert/system.hpp"
#include "detcert/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace detcert;

namespace {

struct RunContext {
  std::string subcommand;
  json config;
  fs::path out_dir;
  std::string config_dir = ".";
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  fs::path out_file(const std::string& tag, const std::string& ext) {
    const std::string name = subcommand + "_" + tag + "." + ext;
    outputs.push_back(name);
    return out_dir / name;
  }
};

double round12(double v) { return std::stod(format_double(v)); }

void apply_overrides(json& config, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key.path=value: " + kv);
    const std::string path = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    json* node = &config;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
      if (key.empty()) throw std::invalid_argument("--set: empty key in path: " + path);
      if (dot == std::string::npos) {
        try {
          (*node)[key] = json::parse(value);
        } catch (const json::parse_error&) {
          (*node)[key] = value;  // plain string leaf
        }
        break;
      }
      node = &(*node)[key];
      start = dot + 1;
    }
  }
}

json load_config(const std::string& path, const std::vector<std::string>& sets,
                 std::string& config_dir) {
  json config = json::object();
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    try {
      config = json::parse(is);
    } catch (const json::parse_error& ex) {
      throw std::runtime_error("config " + path + ": " + ex.what());
    }
    config_dir = fs::path(path).parent_path().string();
    if (config_dir.empty()) config_dir = ".";
  }
  apply_overrides(config, sets);
  return config;
}

const json& require_key(const json& config, const std::string& key, const char* why) {
  if (!config.contains(key))
    throw std::invalid_argument("config field '" + key + "' is required " + why);
  return config.at(key);
}

SystemModel model_from_config(const json& config) {
  const json& jm = require_key(config, "model", "(registry name + params)");
  const std::string name = jm.at("name").get<std::string>();
  std::map<std::string, double> params;
  if (jm.contains("params"))
    for (const auto& [k, v] : jm.at("params").items()) params[k] = v.get<double>();
  return registry_get(name, params);
}

VectorSignal signal_or_zero(const json& parent, const char* key, const std::string& dir,
                            std::size_t dim, double span) {
  if (parent.contains(key))
    return read_signal_csv((fs::path(dir) / parent.at(key).get<std::string>()).string());
  return VectorSignal(dim, span > 0.0 ? span : 1.0);
}

TrajectoryPairScenario scenario_from_config(const json& js, const SystemModel& model,
                                            const std::string& dir) {
  TrajectoryPairScenario sc;
  sc.chi1 = js.at("chi1").get<std::vector<double>>();
  sc.chi2 = js.at("chi2").get<std::vector<double>>();
  sc.T = js.at("T").get<double>();
  sc.dt = js.at("dt").get<double>();
  sc.u1 = signal_or_zero(js, "u1_csv", dir, model.m(), sc.T);
  sc.u2 = signal_or_zero(js, "u2_csv", dir, model.m(), sc.T);
  sc.d = signal_or_zero(js, "d_csv", dir, model.q(), sc.T);
  return sc;
}

ScenarioSampler sampler_from_config(const json& config) {
  const json& js = require_key(config, "sampler", "(count, seed, T, dt, knots)");
  if (!js.contains("seed")) throw std::invalid_argument("sampler.seed is required (no implicit nondeterminism)");
  ScenarioSampler s;
  s.T = js.value("T", 2.0);
  s.dt = js.value("dt", 0.0);
  s.knots = js.value("knots", std::size_t{4});
  s.seed = js.at("seed").get<std::uint64_t>();
  if (js.contains("radius") && !js.at("radius").is_null()) s.radius = js.at("radius").get<double>();
  return s;
}

std::size_t sampler_count(const json& config) {
  return require_key(config, "sampler", "").value("count", std::size_t{20});
}

std::unique_ptr<Observer> observer_from_config(const json& config, const SystemModel& model,
                                               const std::string& dir) {
  const json& jo = require_key(config, "observer", "(type luenberger or full_information)");
  const std::string type = jo.at("type").get<std::string>();
  if (type == "luenberger") return make_luenberger(model, jo.at("L").get<std::vector<double>>());
  if (type == "full_information") {
    FiWeights w{comparison_from_json(jo.at("weights").at("w_x"), dir),
                comparison_from_json(jo.at("weights").at("w_u"), dir),
                comparison_from_json(jo.at("weights").at("w_y"), dir)};
    FiOptions opts;
    opts.segments = jo.value("segments", std::size_t{4});
    opts.restarts = jo.value("restarts", std::size_t{3});
    opts.evals_per_restart = jo.value("evals_per_restart", std::size_t{300});
    opts.seed = jo.value("seed", std::uint64_t{1});
    return make_full_information(model, std::move(w), jo.at("eta").get<double>(), opts);
  }
  throw std::invalid_argument("observer.type must be luenberger or full_information");
}

void write_manifest(RunContext& ctx, int exit_code) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.t0).count();
  json manifest{{"subcommand", ctx.subcommand},
                {"config_hash", json_hash(ctx.config)},
                {"versions", {{"detcert", kVersion}, {"compiler", DETCERT_COMPILER_ID}}},
                {"wall_time_s", wall},
                {"timestamp", static_cast<long long>(std::time(nullptr))},
                {"exit_code", exit_code},
                {"outputs", ctx.outputs}};
  if (ctx.config.contains("sampler") && ctx.config.at("sampler").contains("seed"))
    manifest["seed"] = ctx.config.at("sampler").at("seed");
  if (ctx.config.contains("search") && ctx.config.at("search").contains("seed"))
    manifest["search_seed"] = ctx.config.at("search").at("seed");
  std::ofstream os(ctx.out_dir / "run.json");
  os << manifest.dump(2) << "\n";
}

void write_summary(RunContext& ctx, const json& summary) {
  std::ofstream os(ctx.out_file("summary", "json"));
  os << summary.dump(2) << "\n";
}

struct ScenarioOutcome {
  double max_residual = 0.0;
  double tol = 0.0;
  bool holds = false;
  double sandwich = 0.0;
  double err_model = 0.0;
  std::string error;
};

void write_scenario_table(const fs::path& path, const std::vector<ScenarioOutcome>& rows,
                          bool with_sandwich) {
  std::ofstream os(path);
  os << "index,max_residual,tol,holds" << (with_sandwich ? ",sandwich_violation" : "") << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << i << "," << format_double(rows[i].max_residual) << "," << format_double(rows[i].tol)
       << "," << (rows[i].holds ? 1 : 0);
    if (with_sandwich) os << "," << format_double(rows[i].sandwich);
    os << "\n";
  }
}

// ---- subcommands ----

int cmd_simulate(RunContext& ctx) {
  SystemModel model = model_from_config(ctx.config);
  const json& js = require_key(ctx.config, "sim", "(T, chi, optional dt/u_csv/d_csv)");
  const double T = js.at("T").get<double>();
  std::vector<double> chi = js.at("chi").get<std::vector<double>>();
  VectorSignal u = signal_or_zero(js, "u_csv", ctx.config_dir, model.m(), T);
  VectorSignal d = signal_or_zero(js, "d_csv", ctx.config_dir, model.q(), T);
  double dt = js.value("dt", 0.0);
  if (dt <= 0.0) {
    // default: min(input dt, T/1000), snapped to divide the finer input grid
    double base = std::min({u.knots() > 0 ? u.dt() : T, d.knots() > 0 ? d.dt() : T, T});
    dt = base / std::max(1.0, std::ceil(base / (T / 1000.0)));
  }
  Trajectory traj = simulate(model, chi, u, d, T, dt);
  write_trajectory_csv(ctx.out_file("traj", "csv").string(), traj);
  json summary{{"status", "ok"},
               {"nodes", traj.nodes()},
               {"final_state_norm", round12(norm2(traj.state(traj.nodes() - 1)))}};
  if (traj.left_state_box_at) summary["left_state_box_at"] = *traj.left_state_box_at;
  write_summary(ctx, summary);
  return 0;
}

ComparisonFunction kappa_from_cli(const json& config, const std::string& flag,
                                  const std::string& dir) {
  if (!flag.empty()) {
    if (flag.front() == '@') {
      std::ifstream is(flag.substr(1));
      if (!is) throw std::runtime_error("cannot open " + flag.substr(1));
      return comparison_from_json(json::parse(is), dir);
    }
    if (flag.front() == '{') return comparison_from_json(json::parse(flag), dir);
    return comparison_from_json(json(flag), dir);
  }
  return comparison_from_json(require_key(config, "kappa1", "or pass --kappa1"), dir);
}

int cmd_osgood_check(RunContext& ctx, const std::string& kappa_flag) {
  ComparisonFunction k1 = kappa_from_cli(ctx.config, kappa_flag, ctx.config_dir);
  OsgoodReport rep = osgood_check(k1);
  json evidence_zero = json::array(), evidence_inf = json::array();
  for (auto& [e, v] : rep.evidence_zero) evidence_zero.push_back({round12(e), round12(v)});
  for (auto& [e, v] : rep.evidence_infinity) evidence_inf.push_back({round12(e), round12(v)});
  json summary{{"divergent_at_zero", rep.divergent_at_zero},
               {"divergent_at_infinity", rep.divergent_at_infinity},
               {"satisfied", rep.satisfied()},
               {"method", rep.method == OsgoodReport::Method::Analytic ? "analytic" : "numeric-heuristic"},
               {"evidence_zero", evidence_zero},
               {"evidence_infinity", evidence_inf}};
  std::cout << summary.dump(2) << "\n";
  write_summary(ctx, summary);
  return rep.satisfied() ? 0 : 2;
}

int cmd_bihari_bound(RunContext& ctx, const std::string& kappa_flag, double c, double t,
                     std::size_t curve_points) {
  ComparisonFunction k1 = kappa_from_cli(ctx.config, kappa_flag, ctx.config_dir);
  BihariSolver solver(k1);
  const double v = solver.bound(c, t);
  std::cout << format_double(v) << "\n";
  json summary{{"c", round12(c)}, {"t", round12(t)}, {"bound", round12(v)}, {"status", "ok"}};
  if (curve_points > 0) {
    std::vector<double> times(curve_points + 1);
    for (std::size_t k = 0; k <= curve_points; ++k)
      times[k] = t * static_cast<double>(k) / static_cast<double>(curve_points);
    auto curve = solver.bound_curve(c, times);
    std::ofstream os(ctx.out_file("curve", "csv"));
    os << "t,bound\n";
    for (std::size_t k = 0; k < times.size(); ++k)
      os << format_double(times[k]) << "," << format_double(curve[k]) << "\n";
  }
  write_summary(ctx, summary);
  return 0;
}

int cmd_audit_model(RunContext& ctx) {
  SystemModel model = model_from_config(ctx.config);
  const json ja = ctx.config.value("audit", json::object());
  if (!ja.contains("seed")) throw std::invalid_argument("audit.seed is required");
  std::optional<double> radius;
  if (ja.contains("radius") && !ja.at("radius").is_null()) radius = ja.at("radius").get<double>();
  AuditReport rep = audit_increment_bounds(model, ja.value("samples", std::size_t{100000}),
                                           ja.at("seed").get<std::uint64_t>(), radius);
  json summary{{"pass", rep.pass},
               {"max_f_ratio", round12(rep.max_f_ratio)},
               {"max_h_ratio", round12(rep.max_h_ratio)},
               {"samples", rep.samples},
               {"skipped", rep.skipped}};
  if (!rep.pass) {
    summary["f_witness_a"] = rep.f_witness_a;
    summary["f_witness_b"] = rep.f_witness_b;
  }
  std::cout << summary.dump(2) << "\n";
  write_summary(ctx, summary);
  return rep.pass ? 0 : 2;
}

// shared scenario-family sweep for ioss-check / lyap-check
template <class ResidualFn>
int family_check(RunContext& ctx, const SystemModel& model, bool with_sandwich,
                 ResidualFn&& residual_of) {
  std::vector<TrajectoryPairScenario> scenarios;
  if (ctx.config.contains("scenario")) {
    scenarios.push_back(scenario_from_config(ctx.config.at("scenario"), model, ctx.config_dir));
  } else {
    ScenarioSampler sampler = sampler_from_config(ctx.config);
    const std::size_t count = sampler_count(ctx.config);
    for (std::size_t i = 0; i < count; ++i) scenarios.push_back(sample_scenario(model, sampler, i));
  }

  std::vector<ScenarioOutcome> rows(scenarios.size());
  std::vector<ResidualSeries> series(scenarios.size());
  par::for_each_index(scenarios.size(), par::Exec::Parallel, [&](std::size_t i) {
    try {
      series[i] = residual_of(scenarios[i]);
      rows[i] = ScenarioOutcome{series[i].max_residual, series[i].tol, series[i].holds,
                                series[i].max_sandwich_violation, series[i].err_model, ""};
    } catch (const std::exception& ex) {
      rows[i] = ScenarioOutcome{0, 0, false, 0, 0, ex.what()};
    }
  });

  write_scenario_table(ctx.out_file("scenarios", "csv"), rows, with_sandwich);

  std::size_t worst = 0;
  bool all_hold = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].error.empty()) throw std::runtime_error("scenario " + std::to_string(i) + ": " + rows[i].error);
    if (!rows[i].holds || (with_sandwich && rows[i].sandwich > 0.0)) all_hold = false;
    if (rows[i].max_residual - rows[i].tol > rows[worst].max_residual - rows[worst].tol) worst = i;
  }
  write_residual_csv(ctx.out_file("worst", "csv").string(), series[worst]);

  json summary{{"scenarios", rows.size()},
               {"all_hold", all_hold},
               {"worst_index", worst},
               {"worst_max_residual", round12(rows[worst].max_residual)},
               {"worst_tol", round12(rows[worst].tol)},
               {"worst_err_model", round12(rows[worst].err_model)}};
  if (with_sandwich) {
    double sandwich = 0.0;
    for (const auto& r : rows) sandwich = std::max(sandwich, r.sandwich);
    summary["max_sandwich_violation"] = round12(sandwich);
  }
  std::cout << summary.dump(2) << "\n";
  write_summary(ctx, summary);
  return all_hold ? 0 : 2;
}

int cmd_ioss_check(RunContext& ctx) {
  SystemModel model = model_from_config(ctx.config);
  IossCertificate cert =
      ioss_certificate_from_json(require_key(ctx.config, "certificate", ""), ctx.config_dir);
  return family_check(ctx, model, false,
                      [&](const TrajectoryPairScenario& sc) { return ioss_residual(model, cert, sc); });
}

int cmd_lyap_check(RunContext& ctx) {
  SystemModel model = model_from_config(ctx.config);
  LyapCertificate cert =
      lyap_certificate_from_json(require_key(ctx.config, "lyap_certificate", ""), ctx.config_dir);
  return family_check(ctx, model, true,
                      [&](const TrajectoryPairScenario& sc) { return lyap_residual(model, cert, sc); });
}

FalsifySearch search_from_config(const json& config) {
  const json& js = require_key(config, "search", "(restarts, segments, horizon, seed, budget)");
  if (!js.contains("seed")) throw std::invalid_argument("search.seed is required");
  FalsifySearch s;
  s.restarts = js.value("restarts", std::size_t{10});
  s.segments = js.value("segments", std::size_t{4});
  s.horizon = js.value("horizon", 2.0);
  s.seed = js.at("seed").get<std::uint64_t>();
  s.budget = js.value("budget", std::size_t{8000});
  s.dt = js.value("dt", 0.0);
  if (js.contains("radius") && !js.at("radius").is_null()) s.radius = js.at("radius").get<double>();
  return s;
}

int cmd_ioss_falsify(RunContext& ctx) {
  SystemModel model = model_from_config(ctx.config);
  IossCertificate cert =
      ioss_certificate_from_json(require_key(ctx.config, "certificate", ""), ctx.config_dir);
  FalsifyResult res = falsify(model, cert, search_from_config(ctx.config));
  json summary{{"violation", res.violation},
               {"max_residual", round12(res.best.max_residual)},
               {"tol", round12(res.best.tol)},
               {"refined_max_residual", round12(res.refined_max)},
               {"best_restart", res.best_restart},
               {"evals", res.evals}};
  if (res.blowup_time) summary["blowup_time"] = *res.blowup_time;
  if (res.violation) {
    write_scenario(ctx.out_dir.string(), ctx.subcommand + "_witness", res.witness);
    ctx.outputs.push_back(ctx.subcommand + "_witness.json");
    write_residual_csv(ctx.out_file("residual", "csv").string(), res.best);
    summary["witness"] = ctx.subcommand + "_witness.json";
  }
  std::cout << summary.dump(2) << "\n";
  write_summary(ctx, summary);
  return res.violation ? 2 : 0;
}

LyapEstimateSearch estimate_search_from_config(const json& config) {
  const json& js = require_key(config, "search", "(restarts, segments, t_max, seed)");
  if (!js.contains("seed")) throw std::invalid_argument("search.seed is required");
  LyapEstimateSearch s;
  s.restarts = js.value("restarts", std::size_t{6});
  s.segments = js.value("segments", std::size_t{4});
  s.t_max = js.value("t_max", 3.0);
  s.seed = js.at("seed").get<std::uint64_t>();
  s.evals_per_restart = js.value("evals_per_restart", std::size_t{250});
  s.dt = js.value("dt", 0.0);
  return s;
}

int cmd_lyap_eval(RunContext& ctx) {
  SystemModel model = model_from_config(ctx.config);
  IossCertificate cert =
      ioss_certificate_from_json(require_key(ctx.config, "certificate", ""), ctx.config_dir);
  LyapEstimateSearch search = estimate_search_from_config(ctx.config);
  const json& jp = require_key(ctx.config, "pairs", "(list of [chi1, chi2])");

  std::ofstream os(ctx.out_file("table", "csv"));
  os << "index,chi_delta,U_hat,lower,upper,t_witness\n";
  bool bracket_ok = true;
  double worst_excess = 0.0;
  for (std::size_t i = 0; i < jp.size(); ++i) {
    std::vector<double> chi1 = jp.at(i).at(0).get<std::vector<double>>();
    std::vector<double> chi2 = jp.at(i).at(1).get<std::vector<double>>();
    LyapEstimate est = estimate_lyap_candidate(model, cert, chi1, chi2, search);
    const double chid = dist2(chi1, chi2);
    const double lower = cert.alpha(chid), upper = cert.alpha_x(chid);
    if (est.value > upper * (1.0 + 1e-3) + 1e-12) {
      bracket_ok = false;
      worst_excess = std::max(worst_excess, est.value - upper);
    }
    os << i << "," << format_double(chid) << "," << format_double(est.value) << ","
       << format_double(lower) << "," << format_double(upper) << ","
       << format_double(est.t_witness) << "\n";
  }
  json summary{{"pairs", jp.size()}, {"bracket_ok", bracket_ok}, {"lambda", cert.lambda}};
  if (!bracket_ok) summary["worst_excess"] = round12(worst_excess);
  std::cout << summary.dump(2) << "\n";
  write_summary(ctx, summary);
  return bracket_ok ? 0 : 2;
}

int cmd_continuity_probe(RunContext& ctx) {
  SystemModel model = model_from_config(ctx.config);
  IossCertificate cert =
      ioss_certificate_from_json(require_key(ctx.config, "certificate", ""), ctx.config_dir);
  LyapEstimateSearch search = estimate_search_from_config(ctx.config);
  const json& jb = require_key(ctx.config, "base", "(chi1, chi2)");
  std::vector<double> chi1 = jb.at("chi1").get<std::vector<double>>();
  std::vector<double> chi2 = jb.at("chi2").get<std::vector<double>>();
  std::vector<double> radii = require_key(ctx.config, "radii", "").get<std::vector<double>>();

  ContinuityProbeResult probe = continuity_probe(model, cert, chi1, chi2, radii, search);
  std::ofstream os(ctx.out_file("table", "csv"));
  os << "radius,max_deviation\n";
  for (const auto& [r, dev] : probe.table)
    os << format_double(r) << "," << format_double(dev) << "\n";
  json summary{{"pass", probe.pass},
               {"base_value", round12(probe.base_value)},
               {"estimator_noise", round12(probe.noise)}};
  std::cout << summary.dump(2) << "\n";
  write_summary(ctx, summary);
  return probe.pass ? 0 : 2;
}

ObserverScenario observer_scenario_sampled(const SystemModel& model, const json& js,
                                           std::uint64_t index, double T, double dt) {
  Rng rng(stream_seed(js.at("seed").get<std::uint64_t>(), index));
  const std::size_t knots = js.value("knots", std::size_t{4});
  const double sig_dt = T / static_cast<double>(knots);
  auto draw = [&](const Box& box, std::size_t dim) {
    std::vector<double> vals(dim * knots);
    for (std::size_t k = 0; k < knots; ++k)
      for (std::size_t i = 0; i < dim; ++i) vals[k * dim + i] = rng.uniform(box.lo[i], box.hi[i]);
    return VectorSignal(dim, sig_dt, std::move(vals));
  };
  ObserverScenario sc;
  sc.chi.resize(model.n());
  sc.chi_bar.resize(model.n());
  for (std::size_t i = 0; i < model.n(); ++i) {
    sc.chi[i] = rng.uniform(model.state_box().lo[i], model.state_box().hi[i]);
    sc.chi_bar[i] = rng.uniform(model.state_box().lo[i], model.state_box().hi[i]);
  }
  sc.u = draw(model.u_box(), model.m());
  sc.d = draw(model.d_box(), model.q());
  sc.u_bar = draw(model.u_box(), model.m());
  const double y_radius = js.value("y_radius", 0.0);
  if (y_radius > 0.0) {
    Trajectory truth = simulate(model, sc.chi, sc.u, sc.d, T, dt);
    VectorSignal delta = draw(Box::cube(model.p(), -y_radius, y_radius), model.p());
    std::vector<double> vals = truth.outputs;
    std::vector<double> dv(model.p());
    for (std::size_t k = 0; k < truth.nodes(); ++k) {
      delta.sample(truth.times[k], dv);
      for (std::size_t i = 0; i < model.p(); ++i) vals[k * model.p() + i] += dv[i];
    }
    sc.y_bar = VectorSignal(model.p(), dt, std::move(vals));
  }
  return sc;
}

int cmd_observer_run(RunContext& ctx) {
  SystemModel model = model_from_config(ctx.config);
  auto obs = observer_from_config(ctx.config, model, ctx.config_dir);
  const json& js = require_key(ctx.config, "sim", "(T, dt, chi, chi_bar, optional csvs)");
  const double T = js.at("T").get<double>();
  const double dt = js.at("dt").get<double>();
  std::vector<double> chi = js.at("chi").get<std::vector<double>>();
  std::vector<double> chi_bar = js.at("chi_bar").get<std::vector<double>>();
  VectorSignal u = signal_or_zero(js, "u_csv", ctx.config_dir, model.m(), T);
  VectorSignal d = signal_or_zero(js, "d_csv", ctx.config_dir, model.q(), T);
  VectorSignal u_bar = signal_or_zero(js, "u_bar_csv", ctx.config_dir, model.m(), T);

  Trajectory truth = simulate(model, chi, u, d, T, dt);
  VectorSignal y_bar = js.contains("y_bar_csv")
                           ? read_signal_csv((fs::path(ctx.config_dir) / js.at("y_bar_csv").get<std::string>()).string())
                           : VectorSignal(model.p(), dt, truth.outputs);
  auto xhat = obs->estimate_series(chi_bar, u_bar, d, y_bar, T, dt);
  write_estimate_csv(ctx.out_file("estimate", "csv").string(), truth, xhat, model.n(), dt);

  double final_err = 0.0;
  const std::size_t n = model.n();
  std::span<const double> xh(xhat.data() + (truth.nodes() - 1) * n, n);
  final_err = dist2(truth.state(truth.nodes() - 1), xh);
  json summary{{"status", "ok"}, {"final_error", round12(final_err)}};
  std::cout << summary.dump(2) << "\n";
  write_summary(ctx, summary);
  return 0;
}

int cmd_observer_check(RunContext& ctx) {
  SystemModel model = model_from_config(ctx.config);
  auto obs = observer_from_config(ctx.config, model, ctx.config_dir);
  RgasCertificate cert =
      rgas_certificate_from_json(require_key(ctx.config, "rgas_certificate", ""), ctx.config_dir);
  const json& js = require_key(ctx.config, "sampler", "(count, seed, T, dt)");
  if (!js.contains("seed")) throw std::invalid_argument("sampler.seed is required");
  const std::size_t count = js.value("count", std::size_t{20});
  const double T = js.value("T", 2.0);
  const double dt = js.value("dt", 1e-3);

  std::vector<ScenarioOutcome> rows(count);
  par::for_each_index(count, par::Exec::Parallel, [&](std::size_t i) {
    try {
      ObserverScenario sc = observer_scenario_sampled(model, js, i, T, dt);
      ResidualSeries rs = rgas_residual(model, *obs, cert, sc, T, dt);
      rows[i] = ScenarioOutcome{rs.max_residual, rs.tol, rs.holds, 0.0, rs.err_model, ""};
    } catch (const std::exception& ex) {
      rows[i] = ScenarioOutcome{0, 0, false, 0, 0, ex.what()};
    }
  });
  write_scenario_table(ctx.out_file("scenarios", "csv"), rows, false);

  bool all_hold = true;
  std::size_t worst = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!rows[i].error.empty()) throw std::runtime_error("scenario " + std::to_string(i) + ": " + rows[i].error);
    if (!rows[i].holds) all_hold = false;
    if (rows[i].max_residual - rows[i].tol > rows[worst].max_residual - rows[worst].tol) worst = i;
  }
  json summary{{"scenarios", count},
               {"all_hold", all_hold},
               {"worst_index", worst},
               {"worst_max_residual", round12(rows[worst].max_residual)},
               {"worst_tol", round12(rows[worst].tol)}};
  std::cout << summary.dump(2) << "\n";
  write_summary(ctx, summary);
  return all_hold ? 0 : 2;
}

int cmd_necessity_experiment(RunContext& ctx) {
  SystemModel model = model_from_config(ctx.config);
  auto obs = observer_from_config(ctx.config, model, ctx.config_dir);
  RgasCertificate cert =
      rgas_certificate_from_json(require_key(ctx.config, "rgas_certificate", ""), ctx.config_dir);
  ScenarioSampler sampler = sampler_from_config(ctx.config);
  const std::size_t count = sampler_count(ctx.config);

  struct Row {
    double mismatch = 0.0, max_residual = 0.0, tol = 0.0;
    bool holds = false;
    std::string error;
  };
  std::vector<Row> rows(count);
  par::for_each_index(count, par::Exec::Parallel, [&](std::size_t i) {
    try {
      TrajectoryPairScenario sc = sample_scenario(model, sampler, i);
      NecessityResult res = derive_ioss_from_observer(model, *obs, cert, sc);
      rows[i] = Row{res.consistency_mismatch, res.induced.max_residual, res.induced.tol,
                    res.induced.holds, ""};
    } catch (const std::exception& ex) {
      rows[i] = Row{0, 0, 0, false, ex.what()};
    }
  });

  std::ofstream os(ctx.out_file("pairs", "csv"));
  os << "index,consistency_mismatch,max_residual,tol,holds\n";
  bool all_hold = true;
  double worst_mismatch = 0.0, worst_res = -1e300;
  for (std::size_t i = 0; i < count; ++i) {
    if (!rows[i].error.empty()) throw std::runtime_error("pair " + std::to_string(i) + ": " + rows[i].error);
    os << i << "," << format_double(rows[i].mismatch) << "," << format_double(rows[i].max_residual)
       << "," << format_double(rows[i].tol) << "," << (rows[i].holds ? 1 : 0) << "\n";
    all_hold = all_hold && rows[i].holds;
    worst_mismatch = std::max(worst_mismatch, rows[i].mismatch);
    worst_res = std::max(worst_res, rows[i].max_residual);
  }
  json summary{{"pairs", count},
               {"all_hold", all_hold},
               {"max_consistency_mismatch", round12(worst_mismatch)},
               {"max_induced_residual", round12(worst_res)}};
  std::cout << summary.dump(2) << "\n";
  write_summary(ctx, summary);
  return all_hold ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"detectability certificate toolbox"};
  app.require_subcommand(1);

  std::string config_path, out_dir_flag, kappa_flag;
  std::vector<std::string> sets;
  int threads = 0;
  double c_val = 0.0, t_val = 1.0;
  std::size_t curve_points = 0;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir_flag, "output directory (default $DETCERT_OUT_DIR or .)");
  app.add_option("--set", sets, "override a config leaf, e.g. --set search.seed=7");
  app.add_option("--threads", threads, "cap worker threads (0 = library default)");

  auto* sc_simulate = app.add_subcommand("simulate", "integrate a model and export the trajectory");
  auto* sc_osgood = app.add_subcommand("osgood-check", "classify the divergence conditions of kappa1");
  auto* sc_bihari = app.add_subcommand("bihari-bound", "evaluate the trajectory-difference envelope");
  auto* sc_audit = app.add_subcommand("audit-model", "sample-test the declared increment moduli");
  auto* sc_ioss = app.add_subcommand("ioss-check", "evaluate the detectability residual on scenarios");
  auto* sc_falsify = app.add_subcommand("ioss-falsify", "search for a certificate violation");
  auto* sc_lyap = app.add_subcommand("lyap-check", "evaluate the dissipation residual on scenarios");
  auto* sc_lyapeval = app.add_subcommand("lyap-eval", "estimate the converse candidate on state pairs");
  auto* sc_probe = app.add_subcommand("continuity-probe", "empirical candidate continuity table");
  auto* sc_obsrun = app.add_subcommand("observer-run", "run an observer on one scenario");
  auto* sc_obscheck = app.add_subcommand("observer-check", "evaluate the observer bound on scenarios");
  auto* sc_necessity =
      app.add_subcommand("necessity-experiment", "observer-based detectability certificate check");

  for (auto* sc : {sc_osgood, sc_bihari})
    sc->add_option("--kappa1", kappa_flag, "shorthand (identity, power:a:b, log_affine:a), JSON, or @file");
  sc_bihari->add_option("--c", c_val, "initial gap");
  sc_bihari->add_option("--t", t_val, "time horizon");
  sc_bihari->add_option("--curve", curve_points, "also export an N-point bound curve");

  // global options may follow the subcommand
  for (auto* sc : app.get_subcommands({})) sc->fallthrough();

  CLI11_PARSE(app, argc, argv);

  RunContext ctx;
  try {
    ctx.config = load_config(config_path, sets, ctx.config_dir);
    const char* env_out = std::getenv("DETCERT_OUT_DIR");
    ctx.out_dir = !out_dir_flag.empty() ? out_dir_flag : (env_out ? env_out : ".");
    fs::create_directories(ctx.out_dir);
    if (threads > 0) par::set_max_threads(threads);

    int code = 1;
    if (sc_simulate->parsed()) {
      ctx.subcommand = "simulate";
      code = cmd_simulate(ctx);
    } else if (sc_osgood->parsed()) {
      ctx.subcommand = "osgood-check";
      code = cmd_osgood_check(ctx, kappa_flag);
    } else if (sc_bihari->parsed()) {
      ctx.subcommand = "bihari-bound";
      code = cmd_bihari_bound(ctx, kappa_flag, c_val, t_val, curve_points);
    } else if (sc_audit->parsed()) {
      ctx.subcommand = "audit-model";
      code = cmd_audit_model(ctx);
    } else if (sc_ioss->parsed()) {
      ctx.subcommand = "ioss-check";
      code = cmd_ioss_check(ctx);
    } else if (sc_falsify->parsed()) {
      ctx.subcommand = "ioss-falsify";
      code = cmd_ioss_falsify(ctx);
    } else if (sc_lyap->parsed()) {
      ctx.subcommand = "lyap-check";
      code = cmd_lyap_check(ctx);
    } else if (sc_lyapeval->parsed()) {
      ctx.subcommand = "lyap-eval";
      code = cmd_lyap_eval(ctx);
    } else if (sc_probe->parsed()) {
      ctx.subcommand = "continuity-probe";
      code = cmd_continuity_probe(ctx);
    } else if (sc_obsrun->parsed()) {
      ctx.subcommand = "observer-run";
      code = cmd_observer_run(ctx);
    } else if (sc_obscheck->parsed()) {
      ctx.subcommand = "observer-check";
      code = cmd_observer_check(ctx);
    } else if (sc_necessity->parsed()) {
      ctx.subcommand = "necessity-experiment";
      code = cmd_necessity_experiment(ctx);
    }
    write_manifest(ctx, code);
    return code;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    if (!ctx.subcommand.empty()) {
      try {
        write_manifest(ctx, 1);
      } catch (...) {
      }
    }
    return 1;
  }
}
