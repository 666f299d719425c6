// Command-line entry point: artifact building, training and evaluation.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iwmev/artifacts.hpp"
#include "iwmev/baselines.hpp"
#include "iwmev/config.hpp"
#include "iwmev/errors.hpp"
#include "iwmev/harness.hpp"
#include "iwmev/markov_model.hpp"
#include "iwmev/vehicle_sdp.hpp"

using namespace iwmev;

namespace {

struct Globals {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

Config load(const Globals& g) {
  Config cfg = g.config_path.empty() ? default_config() : load_config(g.config_path);
  if (g.seed_set) cfg.sim.seed = g.seed;
  return cfg;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> split_doubles(const std::string& text) {
  std::vector<double> out;
  for (const std::string& s : split(text)) {
    try {
      out.push_back(std::stod(s));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "not a number: '" + s + "'");
    }
  }
  return out;
}

std::vector<DriveCycle> load_cycles(const std::string& list, const std::string& unit, const Config& cfg) {
  std::vector<DriveCycle> cycles;
  for (const std::string& name : split(list)) {
    cycles.push_back(resolve_cycle(name, parse_speed_unit(unit), cfg.sim.cycle_dir));
  }
  if (cycles.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no cycles given");
  }
  return cycles;
}

void say(const std::string& line) { std::cout << line << std::endl; }

int build_tpm(const Globals& g, const std::string& cycles_arg, const std::string& unit) {
  const Config cfg = load(g);
  const std::vector<DriveCycle> cycles = load_cycles(cycles_arg, unit, cfg);
  std::vector<std::string> sources;
  for (const DriveCycle& c : cycles) sources.push_back(c.name);
  const Tpm tpm = demand_tpm(cycles, cfg);
  write_tpm(g.out_dir, tpm, cfg.grid.p, cfg.sdp.dt_sdp, sources);
  say("wrote " + g.out_dir + "/tpm.csv and tpm.json");
  return 0;
}

int train(const Globals& g) {
  const Config cfg = load(g);
  const TpmArtifact art = read_tpm(g.out_dir, cfg.grid.p, cfg.sdp.dt_sdp);
  const VehicleSdpModel model(cfg.grid, art.tpm, cfg.plant, cfg.sdp, cfg.skid);
  const TrainResult trained = train_sdp(model, cfg.sdp);
  write_policy(g.out_dir, trained, cfg.sdp, cfg.skid, art.checksum);
  std::ostringstream conv;
  conv << "iteration,changed_states,eval_sweeps\n";
  for (std::size_t i = 0; i < trained.changes.size(); ++i) {
    conv << i + 1 << ',' << trained.changes[i] << ',' << trained.eval_sweeps[i] << '\n';
  }
  write_text(g.out_dir + "/convergence.csv", conv.str());
  say("policy iteration settled after " + std::to_string(trained.changes.size()) + " improvement steps");
  return 0;
}

int fit_grdp(const Globals& g, const std::string& cycle_arg, const std::string& unit) {
  Config cfg = load(g);
  cfg.sim.dt = cfg.sdp.dt_sdp;
  const DriveCycle cycle = load_cycles(cycle_arg, unit, cfg).front();
  const DemandTrace trace = demand_trace(cycle, cfg);
  const VehicleDpResult dp = vehicle_deterministic_dp(trace, cfg.grid, cfg.plant, cfg.sdp, cfg.skid);
  const GrdpFit fit = grdp_fit(dp.trajectory);
  std::ostringstream csv;
  csv << "t,p_dem,p_front_opt,p_front_rule\n";
  for (const DpPoint& p : dp.trajectory) {
    csv << p.t << ',' << p.p_dem << ',' << p.p_front << ',' << fit.rule.front(p.p_dem) << '\n';
  }
  write_text(g.out_dir + "/dp_trajectory.csv", csv.str());
  write_rule(g.out_dir + "/grdp.json", fit, cycle.name);
  char buf[200];
  std::snprintf(buf, sizeof buf, "P_f = %.6f * P_dem + %.3f W  (R^2 = %.4f, DP cost %.6g, ED cost %.6g)",
                fit.rule.a, fit.rule.b, fit.r2, dp.total_cost, dp.ed_cost);
  say(buf);
  return 0;
}

Strategy make_strategy(const std::string& name, const Globals& g, const Config& cfg, Policy& storage) {
  Strategy s;
  if (name == "ed") {
    s.kind = StrategyKind::Ed;
  } else if (name == "grdp") {
    s.kind = StrategyKind::Grdp;
    s.rule = read_rule(g.out_dir + "/grdp.json");
  } else if (name == "sdp") {
    s.kind = StrategyKind::Sdp;
    storage = read_policy(g.out_dir, cfg.grid).policy;
    s.policy = &storage;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown strategy '" + name + "' (ed, grdp, sdp)");
  }
  return s;
}

int run_simulate(const Globals& g, const std::string& cycle_arg, const std::string& unit,
                 const std::string& strategy_name, double mu, bool no_skid) {
  const Config cfg = load(g);
  const DriveCycle cycle = load_cycles(cycle_arg, unit, cfg).front();
  Policy storage;
  Strategy s = make_strategy(strategy_name, g, cfg, storage);
  s.skid_overlay = !no_skid;
  const SimTrace trace = simulate(cycle, s, mu, cfg);
  char tag[64];
  std::snprintf(tag, sizeof tag, "_mu%g", mu);
  const std::string stem = g.out_dir + "/sim_" + cycle.name + "_" + s.name() + tag + (no_skid ? "_noskid" : "");
  write_text(stem + ".csv", trace_to_csv(trace));
  write_text(stem + ".json", summary_to_json(trace));
  say(summary_to_json(trace));
  return 0;
}

int run_compare(const Globals& g, const std::string& cycles_arg, const std::string& unit,
                const std::string& mus_arg, const std::string& strategies_arg) {
  const Config cfg = load(g);
  const std::vector<DriveCycle> cycles = load_cycles(cycles_arg, unit, cfg);
  const std::vector<double> mus = split_doubles(mus_arg);
  if (mus.empty()) throw Error(ErrorCode::InvalidArgument, "no friction levels given");
  bool ed = false;
  std::optional<LinearRule> rule;
  std::optional<Policy> policy;
  for (const std::string& name : split(strategies_arg)) {
    if (name == "ed") {
      ed = true;
    } else if (name == "grdp") {
      rule = read_rule(g.out_dir + "/grdp.json");
    } else if (name == "sdp") {
      policy = read_policy(g.out_dir, cfg.grid).policy;
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown strategy '" + name + "'");
    }
  }
  const ComparisonTable table =
      compare(cycles, mus, ed, rule ? &*rule : nullptr, policy ? &*policy : nullptr, cfg);
  write_text(g.out_dir + "/comparison.csv", table.to_csv());
  write_text(g.out_dir + "/comparison.json", table.to_json());
  std::cout << table.to_csv();
  return 0;
}

int run_sweep(const Globals& g, double p_dem, double v, double lf, double lr, std::size_t points) {
  const Config cfg = load(g);
  const std::vector<SweepPoint> curve = sweep_sensitivity(p_dem, v, lf, lr, points, cfg);
  std::ostringstream csv;
  csv << "p_front_w,delta_soc_pp\n";
  char buf[64];
  for (const SweepPoint& p : curve) {
    std::snprintf(buf, sizeof buf, "%.10g,%.17g\n", p.p_front, p.delta_soc);
    csv << buf;
  }
  write_text(g.out_dir + "/sweep.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

std::vector<SocSample> read_reference(const std::string& path) {
  const DriveCycle raw = load_cycle(path, SpeedUnit::Mps);  // same two-column layout
  std::vector<SocSample> out;
  for (const CycleSample& s : raw.samples) out.push_back({s.t, s.v});
  return out;
}

int run_calibrate(const Globals& g, const std::string& reference, const std::string& cycle_arg,
                  const std::string& unit, double r_lo, double r_hi) {
  const Config cfg = load(g);
  const DriveCycle cycle = load_cycles(cycle_arg, unit, cfg).front();
  const CalibrationResult res = calibrate_rbatt(read_reference(reference), cycle, Strategy{}, cfg, r_lo, r_hi);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\n  \"resistance_ohm\": %.9g,\n  \"rmse\": %.9g,\n  \"evaluations\": %d,\n  \"degenerate\": %s\n}\n",
                res.resistance, res.rmse, res.evaluations, res.degenerate ? "true" : "false");
  write_text(g.out_dir + "/calibration.json", buf);
  std::cout << buf;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Front/rear power split for a four in-wheel-motor EV"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out_dir, "artifact directory")->capture_default_str();
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& s) { g.seed = s; g.seed_set = true; }, "seed for demand noise");

  std::string cycles = "ftp75,hwfet,nycc", unit = "mps", cycle = "udds", strategy = "sdp";
  std::string mus = "0.2,0.5,0.9", strategies = "ed,grdp,sdp", reference;
  double mu = 0.9, p_dem = 10000.0, v = 10.0, lf = 0.0, lr = 0.0, r_lo = 0.03, r_hi = 0.12;
  std::size_t points = 41;
  bool no_skid = false;

  auto* c_tpm = app.add_subcommand("build-tpm", "estimate the demand TPM from closed-loop runs");
  c_tpm->add_option("--cycles", cycles, "comma-separated builtin names or CSV paths")->capture_default_str();
  c_tpm->add_option("--speed-unit", unit, "mps, mph or kph for CSV input")->capture_default_str();

  auto* c_train = app.add_subcommand("train-sdp", "run policy iteration on the stored TPM");

  auto* c_grdp = app.add_subcommand("fit-grdp", "deterministic DP on one cycle and a linear rule fit");
  std::string grdp_cycle = "ftp75";
  c_grdp->add_option("--cycle", grdp_cycle, "builtin name or CSV path")->capture_default_str();
  c_grdp->add_option("--speed-unit", unit)->capture_default_str();

  auto* c_sim = app.add_subcommand("simulate", "closed-loop run of one strategy");
  c_sim->add_option("--cycle", cycle)->capture_default_str();
  c_sim->add_option("--speed-unit", unit)->capture_default_str();
  c_sim->add_option("--strategy", strategy, "ed, grdp or sdp")->capture_default_str();
  c_sim->add_option("--mu", mu, "peak road friction")->capture_default_str();
  c_sim->add_flag("--no-skid", no_skid, "disable the skid-avoidance overlay");

  auto* c_cmp = app.add_subcommand("compare", "delta SoC table over cycles and friction levels");
  std::string cmp_cycles = "ftp75,hwfet,nycc,udds";
  c_cmp->add_option("--cycles", cmp_cycles)->capture_default_str();
  c_cmp->add_option("--speed-unit", unit)->capture_default_str();
  c_cmp->add_option("--mu", mus, "comma-separated friction levels")->capture_default_str();
  c_cmp->add_option("--strategies", strategies)->capture_default_str();

  auto* c_sweep = app.add_subcommand("sweep", "one-step delta SoC versus front power");
  c_sweep->add_option("--p-dem", p_dem, "W")->capture_default_str();
  c_sweep->add_option("--v", v, "m/s")->capture_default_str();
  c_sweep->add_option("--lambda-f", lf)->capture_default_str();
  c_sweep->add_option("--lambda-r", lr)->capture_default_str();
  c_sweep->add_option("--points", points)->capture_default_str()->check(CLI::Range(2, 100000));

  auto* c_cal = app.add_subcommand("calibrate", "fit the battery resistance to a reference SoC trace");
  c_cal->add_option("--reference", reference, "CSV with columns t,soc")->required();
  c_cal->add_option("--cycle", cycle)->capture_default_str();
  c_cal->add_option("--speed-unit", unit)->capture_default_str();
  c_cal->add_option("--r-min", r_lo, "ohm")->capture_default_str();
  c_cal->add_option("--r-max", r_hi, "ohm")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_tpm->parsed()) return build_tpm(g, cycles, unit);
    if (c_train->parsed()) return train(g);
    if (c_grdp->parsed()) return fit_grdp(g, grdp_cycle, unit);
    if (c_sim->parsed()) return run_simulate(g, cycle, unit, strategy, mu, no_skid);
    if (c_cmp->parsed()) return run_compare(g, cmp_cycles, unit, mus, strategies);
    if (c_sweep->parsed()) return run_sweep(g, p_dem, v, lf, lr, points);
    if (c_cal->parsed()) return run_calibrate(g, reference, cycle, unit, r_lo, r_hi);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
