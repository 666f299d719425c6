#include "iwmev/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iwmev/errors.hpp"
#include "iwmev/skid_avoidance.hpp"

namespace iwmev {

std::string Strategy::name() const {
  switch (kind) {
    case StrategyKind::Ed: return "ed";
    case StrategyKind::Grdp: return "grdp";
    case StrategyKind::Sdp: return "sdp";
  }
  return "unknown";
}

namespace {

AxleCommand strategy_command(const Strategy& s, double p_dem, const VehicleState& x, double lf,
                             double lr, const Config& cfg) {
  switch (s.kind) {
    case StrategyKind::Ed: return ed_policy(p_dem);
    case StrategyKind::Grdp: return apply_rule(s.rule, p_dem, cfg.plant.motor);
    case StrategyKind::Sdp:
      if (s.policy == nullptr) {
        throw Error(ErrorCode::MissingArtifact, "SDP strategy without a policy");
      }
      return lookup_control(*s.policy, p_dem, x.v, lf, lr);
  }
  return ed_policy(p_dem);
}

}  // namespace

SimTrace simulate(const DriveCycle& cycle, const Strategy& strategy, double mu_max, const Config& cfg) {
  cfg.sim.validate();
  PlantParams plant = cfg.plant;
  plant.tire.mu_max = mu_max;
  plant.validate();
  const DriveCycle rc = resample(cycle, cfg.sim.dt);
  if (rc.samples.empty()) {
    throw Error(ErrorCode::InvalidArgument, "cannot simulate an empty cycle");
  }
  const std::vector<double> accel = target_acceleration(rc);
  const double r = plant.vehicle.wheel_radius;

  SimTrace trace;
  trace.cycle = cycle.name;
  trace.strategy = strategy.name();
  trace.mu_max = mu_max;
  trace.skid_overlay = strategy.skid_overlay;
  trace.records.reserve(rc.size());

  VehicleState x;
  x.v = rc.samples.front().v;
  x.omega_f = x.omega_r = x.v / r;
  x.soc = cfg.sim.initial_soc;
  Driver driver(cfg.driver, plant.vehicle);
  std::mt19937_64 rng(cfg.sim.seed);
  std::normal_distribution<double> noise(0.0, cfg.sim.demand_noise_std > 0.0 ? cfg.sim.demand_noise_std : 1.0);

  const std::size_t n = rc.size();
  double sq_error = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    StepRecord rec;
    rec.t = rc.samples[k].t;
    rec.v_target = rc.samples[k].v;
    rec.v = x.v;
    rec.soc = x.soc;
    rec.lambda_f = wheel_slip(x.v, x.omega_f, r, plant.slip_epsilon);
    rec.lambda_r = wheel_slip(x.v, x.omega_r, r, plant.slip_epsilon);
    const double err = x.v - rec.v_target;
    sq_error += err * err;
    trace.summary.max_abs_error = std::max(trace.summary.max_abs_error, std::abs(err));
    if (rec.lambda_f < -cfg.skid.lambda_crit || rec.lambda_f > cfg.skid.lambda_crit ||
        rec.lambda_r < -cfg.skid.lambda_crit || rec.lambda_r > cfg.skid.lambda_crit) {
      ++trace.summary.slip_violations;
    }

    if (k + 1 < n) {
      const double dt = rc.samples[k + 1].t - rc.samples[k].t;
      double p_dem = driver.demand(x, rc.samples[k + 1].v, accel[k], dt);
      if (cfg.sim.demand_noise_std > 0.0) {
        p_dem = std::clamp(p_dem + noise(rng), cfg.driver.p_min, cfg.driver.p_max);
      }
      const AxleCommand candidate = strategy_command(strategy, p_dem, x, rec.lambda_f, rec.lambda_r, cfg);
      AxleCommand cmd = candidate;
      if (strategy.skid_overlay) {
        cmd = apply_skid_rules(rec.lambda_f, rec.lambda_r, p_dem, candidate, cfg.skid);
        if (cmd.front != candidate.front || cmd.rear != candidate.rear) {
          rec.flags |= kSkidOverride;
        }
      }
      StepResult step;
      try {
        step = plant_step(x, cmd, dt, plant);
      } catch (const Error& e) {
        throw Error(e.code(), std::string(e.what()) + " at step " + std::to_string(k));
      }
      rec.p_dem = p_dem;
      rec.p_front = cmd.front;
      rec.p_rear = cmd.rear;
      rec.delivered = step.diag.delivered_total();
      rec.p_batt = step.diag.battery_power;
      rec.flags |= step.diag.clamp_flags;
      trace.summary.clamped_steps += step.diag.clamped();
      trace.summary.skid_steps += (rec.flags & kSkidOverride) != 0;
      x = step.state;
    }
    trace.records.push_back(rec);
  }
  trace.summary.delta_soc = (cfg.sim.initial_soc - trace.records.back().soc) * 100.0;
  trace.summary.rms_error = std::sqrt(sq_error / static_cast<double>(n));
  trace.summary.distance = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    trace.summary.distance += 0.5 * (trace.records[k].v + trace.records[k - 1].v) *
                              (trace.records[k].t - trace.records[k - 1].t);
  }
  return trace;
}

DemandTrace demand_trace(const DriveCycle& cycle, const Config& cfg) {
  const SimTrace trace = simulate(cycle, Strategy{}, cfg.plant.tire.mu_max, cfg);
  DemandTrace out;
  // The last record carries no step.
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    out.t.push_back(trace.records[k].t);
    out.v.push_back(trace.records[k].v);
    out.p_dem.push_back(trace.records[k].p_dem);
  }
  return out;
}

Tpm demand_tpm(const std::vector<DriveCycle>& cycles, const Config& cfg) {
  Config at_dt = cfg;
  at_dt.sim.dt = cfg.sdp.dt_sdp;
  std::vector<std::vector<double>> sequences;
  for (const DriveCycle& c : cycles) {
    sequences.push_back(demand_trace(c, at_dt).p_dem);
  }
  return estimate_tpm(sequences, cfg.grid.p);
}

std::optional<double> ComparisonRow::improvement() const {
  if (!ed || !sdp || *ed == 0.0) return std::nullopt;
  return 100.0 * (*ed - *sdp) / *ed;
}

namespace {

std::string opt_str(const std::optional<double>& x) {
  if (!x) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", *x);
  return buf;
}

}  // namespace

std::string ComparisonTable::to_csv() const {
  std::ostringstream out;
  out << "cycle,mu_max,dsoc_ed,dsoc_grdp,dsoc_sdp,improvement_pct\n";
  for (const ComparisonRow& r : rows) {
    out << r.cycle << ',' << r.mu_max << ',' << opt_str(r.ed) << ',' << opt_str(r.grdp) << ','
        << opt_str(r.sdp) << ',' << opt_str(r.improvement()) << '\n';
  }
  return out.str();
}

std::string ComparisonTable::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const ComparisonRow& r : rows) {
    nlohmann::json row = {{"cycle", r.cycle}, {"mu_max", r.mu_max}};
    auto put = [&](const char* key, const std::optional<double>& x) {
      row[key] = x ? nlohmann::json(*x) : nlohmann::json(nullptr);
    };
    put("dsoc_ed", r.ed);
    put("dsoc_grdp", r.grdp);
    put("dsoc_sdp", r.sdp);
    put("improvement_pct", r.improvement());
    j.push_back(row);
  }
  return j.dump(2);
}

ComparisonTable compare(const std::vector<DriveCycle>& cycles, const std::vector<double>& mus,
                        bool run_ed, const LinearRule* rule, const Policy* policy, const Config& cfg) {
  ComparisonTable table;
  for (const DriveCycle& c : cycles) {
    for (double mu : mus) {
      table.rows.push_back({c.name, mu, std::nullopt, std::nullopt, std::nullopt});
    }
  }
  const auto cells = static_cast<long>(table.rows.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < cells; ++i) {
    ComparisonRow& row = table.rows[static_cast<std::size_t>(i)];
    const DriveCycle& cycle = cycles[static_cast<std::size_t>(i) / mus.size()];
    if (run_ed) {
      row.ed = simulate(cycle, Strategy{}, row.mu_max, cfg).summary.delta_soc;
    }
    if (rule) {
      Strategy s{StrategyKind::Grdp, *rule};
      row.grdp = simulate(cycle, s, row.mu_max, cfg).summary.delta_soc;
    }
    if (policy) {
      Strategy s{StrategyKind::Sdp, {}, policy};
      row.sdp = simulate(cycle, s, row.mu_max, cfg).summary.delta_soc;
    }
  }
  return table;
}

std::vector<SweepPoint> sweep_sensitivity(double p_dem, double v, double lambda_f, double lambda_r,
                                          std::size_t n, const Config& cfg) {
  if (n < 2) {
    throw Error(ErrorCode::InvalidArgument, "a sweep needs at least two points");
  }
  const PlantParams& plant = cfg.plant;
  plant.validate();
  double lo = std::min(0.0, p_dem);
  double hi = std::max(0.0, p_dem);
  if (p_dem == 0.0) {
    lo = -1000.0;
    hi = 1000.0;
  }
  VehicleState x;
  x.v = v;
  x.omega_f = wheel_speed_for_slip(v, lambda_f, plant);
  x.omega_r = wheel_speed_for_slip(v, lambda_r, plant);
  x.soc = cfg.sdp.nominal_soc;

  std::vector<double> fronts(n);
  for (std::size_t i = 0; i < n; ++i) {
    fronts[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  fronts.front() = lo;
  fronts.back() = hi;
  if (p_dem != 0.0) {
    for (std::size_t i = 0; i < n / 2; ++i) fronts[n - 1 - i] = p_dem - fronts[i];
  } else {
    for (std::size_t i = 0; i < n / 2; ++i) fronts[n - 1 - i] = -fronts[i];
  }
  std::vector<SweepPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pf = fronts[i];
    const StepCost sc = one_step_cost(x, p_dem, {pf, p_dem - pf}, 0.0, cfg.sdp.dt_sdp, plant);
    out[i] = {pf, sc.delta_soc};
  }
  return out;
}

double soc_rmse(const std::vector<SocSample>& reference, const SimTrace& trace) {
  if (reference.empty() || trace.records.empty()) {
    throw Error(ErrorCode::InvalidArgument, "soc_rmse needs non-empty traces");
  }
  const auto& rec = trace.records;
  double sum = 0.0;
  std::size_t j = 0;
  for (const SocSample& s : reference) {
    while (j + 1 < rec.size() && rec[j + 1].t <= s.t) ++j;
    double soc = rec[j].soc;
    if (j + 1 < rec.size() && s.t > rec[j].t) {
      const double w = (s.t - rec[j].t) / (rec[j + 1].t - rec[j].t);
      soc = (1.0 - w) * rec[j].soc + w * rec[j + 1].soc;
    }
    const double e = s.soc - soc;
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(reference.size()));
}

CalibrationResult calibrate_rbatt(const std::vector<SocSample>& reference, const DriveCycle& cycle,
                                  const Strategy& strategy, const Config& cfg, double r_lo,
                                  double r_hi, double tol) {
  if (!(r_lo > 0.0 && r_hi > r_lo && tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "calibration span must satisfy 0 < r_lo < r_hi");
  }
  CalibrationResult res;
  auto rmse_at = [&](double r) {
    Config c = cfg;
    c.plant.battery.resistance = r;
    ++res.evaluations;
    return soc_rmse(reference, simulate(cycle, strategy, c.plant.tire.mu_max, c));
  };
  const double f_lo = rmse_at(r_lo);
  const double f_hi = rmse_at(r_hi);
  const double f_mid = rmse_at(0.5 * (r_lo + r_hi));
  if (f_lo == f_hi && f_lo == f_mid) {
    res.degenerate = true;
    res.resistance = 0.5 * (r_lo + r_hi);
    res.rmse = f_mid;
    return res;
  }

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = r_lo, b = r_hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = rmse_at(c), fd = rmse_at(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = rmse_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = rmse_at(d);
    }
  }
  res.resistance = fc <= fd ? c : d;
  res.rmse = std::min(fc, fd);
  const double edge = 2.0 * tol;
  if (res.resistance - r_lo <= edge || r_hi - res.resistance <= edge || res.rmse >= std::min(f_lo, f_hi)) {
    throw Error(ErrorCode::SpanTooNarrow, "calibration minimum lies on the edge of the search span");
  }
  return res;
}

std::string trace_to_csv(const SimTrace& trace) {
  std::ostringstream out;
  out << "t,v_target,v,p_dem,p_front,p_rear,delivered,lambda_f,lambda_r,soc,p_batt,flags\n";
  char buf[512];
  for (const StepRecord& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.17g,%.10g,%u\n",
                  r.t, r.v_target, r.v, r.p_dem, r.p_front, r.p_rear, r.delivered, r.lambda_f,
                  r.lambda_r, r.soc, r.p_batt, r.flags);
    out << buf;
  }
  return out.str();
}

std::string summary_to_json(const SimTrace& trace) {
  const SimSummary& s = trace.summary;
  nlohmann::json j = {{"cycle", trace.cycle},
                      {"strategy", trace.strategy},
                      {"mu_max", trace.mu_max},
                      {"skid_overlay", trace.skid_overlay},
                      {"records", trace.records.size()},
                      {"delta_soc_pp", s.delta_soc},
                      {"rms_error_mps", s.rms_error},
                      {"max_abs_error_mps", s.max_abs_error},
                      {"slip_violations", s.slip_violations},
                      {"clamped_steps", s.clamped_steps},
                      {"skid_steps", s.skid_steps},
                      {"distance_m", s.distance}};
  return j.dump(2);
}

}  // namespace iwmev
