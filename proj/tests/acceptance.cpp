// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "iwmev/baselines.hpp"
#include "iwmev/config.hpp"
#include "iwmev/harness.hpp"
#include "iwmev/markov_model.hpp"
#include "iwmev/sdp_solver.hpp"
#include "iwmev/vehicle_model.hpp"
#include "iwmev/vehicle_sdp.hpp"
#include "support.hpp"

using namespace iwmev;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;
std::map<int, std::string> results;

void report(int id, const char* title, bool pass, const std::string& detail) {
  results[id] = fmt("%s  %2d  %-28s %s", pass ? "PASS" : "FAIL", id, title, detail.c_str());
  std::fprintf(stderr, "[criterion %d done]\n", id);
  failures += !pass;
}

// Longest run of consecutive records with the slip below `limit`, per wheel.
std::size_t longest_run_below(const SimTrace& tr, double limit) {
  std::size_t best = 0, run_f = 0, run_r = 0;
  for (const StepRecord& r : tr.records) {
    run_f = r.lambda_f < limit ? run_f + 1 : 0;
    run_r = r.lambda_r < limit ? run_r + 1 : 0;
    best = std::max({best, run_f, run_r});
  }
  return best;
}

double min_front_slip(const SimTrace& tr) {
  double m = 0.0;
  for (const StepRecord& r : tr.records) m = std::min(m, r.lambda_f);
  return m;
}

void criterion_1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  SdpSettings s;
  s.gamma = 0.9;
  double worst = 0.0;
  const int trials = 20;
  for (int k = 0; k < trials; ++k) {
    const auto r = iwmev::testing::random_mdp(rng, 4, 3);
    const PolicyIterationResult pi = policy_iteration(r.mdp, preferred_policy(r.mdp), s);
    const std::vector<double> got = iwmev::testing::policy_cost(r.mdp, pi.policy, s.gamma);
    const std::vector<double> best = iwmev::testing::brute_force_optimum(r.mdp, s.gamma);
    for (std::size_t x = 0; x < r.states; ++x) worst = std::max(worst, std::abs(got[x] - best[x]));
  }
  const double secs = seconds_since(t0);
  report(1, "MDP oracle equivalence", worst <= 1e-9 && secs < 1.0,
         fmt("%d MDPs, max |J - J*| = %.2e (tol 1e-9), %.3f s (budget 1 s)", trials, worst, secs));
}

struct Pipeline {
  Config cfg;
  Policy policy;
  LinearRule rule;
  ComparisonTable table;
};

void criterion_2(Pipeline& p) {
  const auto t0 = Clock::now();
  std::vector<DriveCycle> observed;
  for (const char* name : {"ftp75", "hwfet", "nycc"}) observed.push_back(resolve_cycle(name));
  const Tpm tpm = demand_tpm(observed, p.cfg);
  const VehicleSdpModel model(p.cfg.grid, tpm, p.cfg.plant, p.cfg.sdp, p.cfg.skid);
  bool pass = false;
  std::string detail;
  try {
    const TrainResult tr = train_sdp(model, p.cfg.sdp);
    p.policy = tr.policy;
    std::string curve;
    for (std::size_t c : tr.changes) curve += (curve.empty() ? "" : ",") + std::to_string(c);
    const double secs = seconds_since(t0);
    pass = tr.changes.back() == 0 && tr.changes.size() <= 50 && secs < 1800.0 &&
           model.num_states() == 15488;
    detail = fmt("%zu states, changes [%s], %.1f s (budget 1800 s)", model.num_states(), curve.c_str(), secs);
  } catch (const Error& e) {
    detail = e.what();
  }
  report(2, "Policy-change convergence", pass, detail);
}

void criterion_10(Pipeline& p) {
  // Toy: 4 states, 3 controls, 3 stages, integer costs.
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> cost(0, 40);
  std::vector<double> c(3 * 4 * 3);
  for (double& x : c) x = cost(rng);
  auto next = [](std::size_t s, std::size_t u) { return (2 * s + u + 1) % 4; };
  const DpStageFn stage = [&](std::size_t k, std::size_t s) {
    std::vector<DpTransition> out;
    for (std::size_t u = 0; u < 3; ++u) {
      out.push_back({std::uint32_t(u), std::uint32_t(next(s, u)), c[(k * 4 + s) * 3 + u]});
    }
    return out;
  };
  const DpSolution sol = solve_deterministic_dp(4, 3, 0, stage);
  double exhaustive = INFINITY;
  for (std::size_t seq = 0; seq < 27; ++seq) {
    std::size_t s = 0, code = seq;
    double total = 0.0;
    for (std::size_t k = 0; k < 3; ++k, code /= 3) {
      total += c[(k * 4 + s) * 3 + code % 3];
      s = next(s, code % 3);
    }
    exhaustive = std::min(exhaustive, total);
  }

  const auto t0 = Clock::now();
  Config cfg = p.cfg;
  cfg.sim.dt = cfg.sdp.dt_sdp;
  const DemandTrace trace = demand_trace(resolve_cycle("ftp75"), cfg);
  const VehicleDpResult dp = vehicle_deterministic_dp(trace, cfg.grid, cfg.plant, cfg.sdp, cfg.skid);
  p.rule = grdp_fit(dp.trajectory).rule;
  const bool pass = sol.total_cost == exhaustive && dp.total_cost <= dp.ed_cost;
  report(10, "Deterministic DP oracle", pass,
         fmt("toy DP %.0f vs 27-sequence %.0f; FTP75 DP cost %.4f <= ED %.4f (%zu stages, %.0f s)",
             sol.total_cost, exhaustive, dp.total_cost, dp.ed_cost, trace.p_dem.size(), seconds_since(t0)));
}

void criteria_3_4(Pipeline& p) {
  std::vector<DriveCycle> cycles;
  for (const char* name : {"ftp75", "hwfet", "nycc", "udds"}) cycles.push_back(resolve_cycle(name));
  p.table = compare(cycles, {0.2, 0.5, 0.9}, true, &p.rule, &p.policy, p.cfg);
  std::printf("      cycle   mu    ED[pp]    GRDP[pp]  SDP[pp]   impr[%%]\n");
  bool all = true, udds = true;
  double sum = 0.0;
  for (const ComparisonRow& r : p.table.rows) {
    std::printf("      %-6s %4.1f  %8.5f  %8.5f  %8.5f  %6.2f\n", r.cycle.c_str(), r.mu_max, *r.ed, *r.grdp,
                *r.sdp, *r.improvement());
    all = all && *r.sdp <= *r.ed;
    if (r.cycle == "udds") udds = udds && *r.sdp <= *r.ed;
    sum += *r.improvement();
  }
  const double mean = sum / double(p.table.rows.size());
  report(3, "Directional efficiency", all && mean > 0.5,
         fmt("SDP <= ED in %s of %zu cells, mean improvement %.2f%% (gate > 0.5%%)", all ? "all" : "not all",
             p.table.rows.size(), mean));
  double worst = INFINITY;
  for (const ComparisonRow& r : p.table.rows) {
    if (r.cycle == "udds") worst = std::min(worst, *r.improvement());
  }
  report(4, "Held-out UDDS", udds, fmt("smallest UDDS improvement over ED %.2f%%", worst));
}

void criterion_5(const Pipeline& p) {
  const DriveCycle nycc = resolve_cycle("nycc");
  Strategy on{StrategyKind::Sdp, {}, &p.policy, true};
  Strategy off = on;
  off.skid_overlay = false;
  const SimTrace with = simulate(nycc, on, 0.2, p.cfg);
  const SimTrace without = simulate(nycc, off, 0.2, p.cfg);
  const std::size_t run = longest_run_below(with, -0.25);
  const double lam_min = min_front_slip(without);
  report(5, "Skid containment", run < 3 && lam_min <= -0.9,
         fmt("overlay: longest run below -0.25 = %zu samples (gate < 3); no overlay: min lambda_f = %.3f "
             "(gate <= -0.9)",
             run, lam_min));
}

void criterion_6(const Pipeline& p) {
  double worst = 0.0;
  std::string where;
  for (const char* name : {"ftp75", "hwfet", "nycc", "udds"}) {
    const DriveCycle c = resolve_cycle(name);
    for (Strategy s : {Strategy{StrategyKind::Ed, {}, nullptr, true}, Strategy{StrategyKind::Sdp, {}, &p.policy, true}}) {
      const double a = simulate(c, s, 0.9, p.cfg).summary.delta_soc;
      s.skid_overlay = false;
      const double b = simulate(c, s, 0.9, p.cfg).summary.delta_soc;
      const double rel = std::abs(a - b) / std::abs(b);
      if (rel >= worst) {
        worst = rel;
        where = std::string(name) + "/" + s.name();
      }
    }
  }
  report(6, "Skid neutrality at mu 0.9", worst < 0.01,
         fmt("max relative change %.2e (%s), gate < 1e-2", worst, where.c_str()));
}

void criterion_7(const Pipeline& p) {
  Config flat = p.cfg;
  flat.plant.vehicle.cg_height = 0.0;
  double asym = 0.0;
  for (double lam : {0.0, 0.05, -0.1}) {
    const auto pts = sweep_sensitivity(10000.0, 10.0, lam, lam, 41, flat);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double a = pts[i].delta_soc, b = pts[pts.size() - 1 - i].delta_soc;
      asym = std::max(asym, std::abs(a - b) / std::max(std::abs(a), 1e-300));
    }
  }
  const auto pts = sweep_sensitivity(10000.0, 10.0, 0.5, 0.01, 41, p.cfg);
  const auto best = std::min_element(pts.begin(), pts.end(), [](const SweepPoint& a, const SweepPoint& b) {
    return a.delta_soc < b.delta_soc;
  });
  report(7, "Sensitivity shapes", asym <= 1e-9 && best->p_front < 5000.0,
         fmt("h=0 mirror asymmetry %.1e (tol 1e-9); lambda_f=0.5, lambda_r=0.01: P_f* = %.0f W < %.0f W",
             asym, best->p_front, 5000.0));
}

void criterion_8(const Pipeline& p) {
  Config truth = p.cfg;
  truth.plant.battery.resistance = 0.063;
  const DriveCycle c = resolve_cycle("udds");
  const SimTrace ref = simulate(c, Strategy{}, truth.plant.tire.mu_max, truth);
  std::vector<SocSample> samples;
  for (std::size_t k = 0; k < ref.records.size(); k += 10) samples.push_back({ref.records[k].t, ref.records[k].soc});
  Config start = truth;
  start.plant.battery.resistance = 0.1;
  bool pass = false;
  std::string detail;
  try {
    const CalibrationResult r = calibrate_rbatt(samples, c, Strategy{}, start, 0.02, 0.2, 1e-6);
    pass = !r.degenerate && std::abs(r.resistance - 0.063) <= 0.05 * 0.063;
    detail = fmt("R_hat = %.5f ohm vs 0.063 (tol +-5%%), RMSE %.2e, %d simulations", r.resistance, r.rmse,
                 r.evaluations);
  } catch (const Error& e) {
    detail = e.what();
  }
  report(8, "Calibration round trip", pass, detail);
}

void criterion_9(const Pipeline& p) {
  std::string detail;
  bool pass = true;

  std::vector<DriveCycle> all;
  for (const std::string& name : builtin_cycle_names()) all.push_back(resolve_cycle(name));
  double row_err = 0.0;
  auto check_rows = [&](const Tpm& t) {
    for (std::size_t i = 0; i < t.n; ++i) {
      const auto row = t.row(i);
      double sum = 0.0;
      for (double x : row) {
        sum += x;
        if (x < 0.0) row_err = INFINITY;
      }
      row_err = std::max(row_err, std::abs(sum - 1.0));
    }
  };
  check_rows(demand_tpm(all, p.cfg));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pd(-13000.0, 20000.0);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> seq(500);
    for (double& x : seq) x = pd(rng);
    check_rows(estimate_tpm({seq}, p.cfg.grid.p));
  }
  pass = pass && row_err <= 1e-9;
  detail += fmt("TPM rows %.1e", row_err);

  const VehicleParams& vp = p.cfg.plant.vehicle;
  std::uniform_real_distribution<double> v(0.0, 35.0), w(0.0, 150.0), th(-0.15, 0.15);
  double load_err = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double theta = th(rng);
    const AxleLoads l = solve_axle_loads(v(rng), w(rng), w(rng), theta, vp, p.cfg.plant.tire);
    const double weight = vp.mass * vp.gravity * std::cos(theta);
    load_err = std::max(load_err, std::abs(2.0 * (l.front_normal + l.rear_normal) - weight) / weight);
  }
  pass = pass && load_err <= 1e-9;
  detail += fmt(", loads %.1e", load_err);

  const TireParams& tire = p.cfg.plant.tire;
  double odd = 0.0;
  for (double s = 0.0; s <= 1.0; s += 0.01) {
    odd = std::max(odd, std::abs(friction_coefficient(s, tire) + friction_coefficient(-s, tire)));
  }
  const double mu0 = friction_coefficient(0.0, tire);
  pass = pass && mu0 == 0.0 && odd <= 1e-15;
  detail += fmt(", mu(0) %g, odd %.1e", mu0, odd);

  const double i0 = battery_current(0.0, p.cfg.plant.battery);
  pass = pass && i0 == 0.0;
  detail += fmt(", I(0) %g", i0);

  PlantParams fine = p.cfg.plant;
  fine.inner_steps *= 2;
  double drift = 0.0;
  for (const AxleCommand cmd : {AxleCommand{4000.0, 4000.0}, AxleCommand{-1000.0, -500.0}, AxleCommand{6000.0, 0.0}}) {
    VehicleState a{10.0, 10.0 / vp.wheel_radius, 10.0 / vp.wheel_radius, 0.9, 0.0};
    VehicleState b = a;
    for (int k = 0; k < 100; ++k) {
      a = plant_step(a, cmd, 0.1, p.cfg.plant).state;
      b = plant_step(b, cmd, 0.1, fine).state;
    }
    drift = std::max({drift, std::abs(a.v - b.v) / std::abs(b.v),
                      std::abs((0.9 - a.soc) - (0.9 - b.soc)) / std::abs(0.9 - b.soc)});
  }
  pass = pass && drift < 1e-3;
  detail += fmt(", dt-halving %.1e (tol 1e-3)", drift);

  report(9, "Structural invariants", pass, detail);
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  Pipeline p;
  p.cfg = default_config();
  try {
    criterion_1();
    criterion_2(p);
    criterion_10(p);
    criteria_3_4(p);
    criterion_5(p);
    criterion_6(p);
    criterion_7(p);
    criterion_8(p);
    criterion_9(p);
  } catch (const std::exception& e) {
    std::printf("acceptance run aborted: %s\n", e.what());
    ++failures;
  }
  for (int id = 1; id <= 10; ++id) {
    if (!results.count(id)) {
      results[id] = fmt("FAIL  %2d  not run", id);
      ++failures;
    }
    std::printf("%s\n", results[id].c_str());
  }
  std::printf("%d criteria failed, %.0f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
