#include "iwmev/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iwmev/errors.hpp"
#include "iwmev/vehicle_sdp.hpp"

namespace iwmev {

AxleCommand ed_policy(double p_dem) { return {0.5 * p_dem, 0.5 * p_dem}; }

DpSolution solve_deterministic_dp(std::size_t num_states, std::size_t stages, std::size_t initial,
                                  const DpStageFn& stage) {
  if (initial >= num_states) {
    throw Error(ErrorCode::InvalidArgument, "initial DP state out of range");
  }
  // Forward pass: reachable states and their transitions per stage.
  std::vector<std::vector<std::uint32_t>> reach(stages + 1);
  std::vector<std::vector<std::vector<DpTransition>>> moves(stages);
  reach[0] = {static_cast<std::uint32_t>(initial)};
  std::vector<char> seen(num_states);
  for (std::size_t k = 0; k < stages; ++k) {
    std::fill(seen.begin(), seen.end(), 0);
    moves[k].resize(reach[k].size());
    for (std::size_t i = 0; i < reach[k].size(); ++i) {
      moves[k][i] = stage(k, reach[k][i]);
      if (moves[k][i].empty()) {
        throw Error(ErrorCode::InfeasibleStage, "no admissible control at stage " + std::to_string(k));
      }
      for (const DpTransition& m : moves[k][i]) {
        if (m.next >= num_states) {
          throw Error(ErrorCode::InvalidArgument, "DP transition leaves the state space");
        }
        if (!seen[m.next]) {
          seen[m.next] = 1;
          reach[k + 1].push_back(m.next);
        }
      }
    }
  }

  // Backward pass over the reachable sets.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost_to_go(num_states, 0.0);
  std::vector<std::vector<std::uint32_t>> best(stages);
  std::vector<double> current(num_states, inf);
  for (std::size_t k = stages; k-- > 0;) {
    std::fill(current.begin(), current.end(), inf);
    best[k].assign(reach[k].size(), 0);
    for (std::size_t i = 0; i < reach[k].size(); ++i) {
      double b = inf;
      for (std::size_t m = 0; m < moves[k][i].size(); ++m) {
        const DpTransition& t = moves[k][i][m];
        const double c = t.cost + cost_to_go[t.next];
        if (c < b) {
          b = c;
          best[k][i] = static_cast<std::uint32_t>(m);
        }
      }
      if (!std::isfinite(b)) {
        throw Error(ErrorCode::InfeasibleStage, "no finite-cost control at stage " + std::to_string(k));
      }
      current[reach[k][i]] = b;
    }
    cost_to_go.swap(current);
  }

  DpSolution sol;
  sol.total_cost = cost_to_go[initial];
  std::size_t s = initial;
  for (std::size_t k = 0; k < stages; ++k) {
    const auto it = std::find(reach[k].begin(), reach[k].end(), static_cast<std::uint32_t>(s));
    const auto i = static_cast<std::size_t>(it - reach[k].begin());
    const DpTransition& t = moves[k][i][best[k][i]];
    sol.states.push_back(static_cast<std::uint32_t>(s));
    sol.controls.push_back(t.control);
    s = t.next;
  }
  return sol;
}

VehicleDpResult vehicle_deterministic_dp(const DemandTrace& trace, const StateGrid& grid,
                                         const PlantParams& plant, const SdpSettings& settings,
                                         const SkidConfig& skid) {
  grid.validate();
  const std::size_t stages = trace.p_dem.size();
  if (stages == 0 || trace.v.size() != stages || trace.t.size() != stages) {
    throw Error(ErrorCode::InvalidArgument, "demand trace columns must be non-empty and equal length");
  }
  const std::size_t nl = grid.lam.size();
  const std::size_t nu = grid.u.size();
  const double r = plant.vehicle.wheel_radius;
  // Control ids 0..nu-1 are u levels; id nu is the equal split of the stage.
  auto front_of = [&](std::size_t k, std::uint32_t c) {
    return c < nu ? grid.u[c] : 0.5 * trace.p_dem[k];
  };
  auto make_move = [&](std::size_t k, std::size_t state, std::uint32_t control) {
    const double lf = grid.lam[state / nl];
    const double lr = grid.lam[state % nl];
    const double p_dem = trace.p_dem[k];
    VehicleState x;
    x.v = trace.v[k];
    x.omega_f = wheel_speed_for_slip(x.v, lf, plant);
    x.omega_r = wheel_speed_for_slip(x.v, lr, plant);
    x.soc = settings.nominal_soc;
    const double pf = front_of(k, control);
    const AxleCommand cmd = apply_skid_rules(lf, lr, p_dem, {pf, p_dem - pf}, skid);
    const StepCost sc = one_step_cost(x, p_dem, cmd, settings.alpha, settings.dt_sdp, plant);
    DpTransition t;
    t.control = control;
    t.cost = sc.cost;
    if (sc.feasible()) {
      const double nlf = wheel_slip(sc.next.v, sc.next.omega_f, r, plant.slip_epsilon);
      const double nlr = wheel_slip(sc.next.v, sc.next.omega_r, r, plant.slip_epsilon);
      t.next = static_cast<std::uint32_t>(quantize(nlf, grid.lam) * nl + quantize(nlr, grid.lam));
    } else {
      t.next = static_cast<std::uint32_t>(state);
    }
    return t;
  };
  const DpStageFn stage = [&](std::size_t k, std::size_t state) {
    std::vector<DpTransition> out;
    const double lf = grid.lam[state / nl];
    const double lr = grid.lam[state % nl];
    if (skid_violation(lf, lr, trace.p_dem[k], skid).any()) {
      out.push_back(make_move(k, state, static_cast<std::uint32_t>(nu)));
      return out;
    }
    out.reserve(nu + 1);
    // Equal split first so it wins exact ties.
    out.push_back(make_move(k, state, static_cast<std::uint32_t>(nu)));
    for (std::uint32_t c = 0; c < nu; ++c) out.push_back(make_move(k, state, c));
    return out;
  };

  const std::size_t zero = quantize(0.0, grid.lam);
  const std::size_t initial = zero * nl + zero;
  const DpSolution sol = solve_deterministic_dp(nl * nl, stages, initial, stage);

  VehicleDpResult result;
  result.total_cost = sol.total_cost;
  result.trajectory.reserve(stages);
  for (std::size_t k = 0; k < stages; ++k) {
    result.trajectory.push_back({trace.t[k], trace.p_dem[k], front_of(k, sol.controls[k])});
  }
  std::size_t s = initial;
  for (std::size_t k = 0; k < stages; ++k) {
    const DpTransition t = make_move(k, s, static_cast<std::uint32_t>(nu));
    result.ed_cost += t.cost;
    s = t.next;
  }
  return result;
}

AxleCommand apply_rule(const LinearRule& rule, double p_dem, const MotorParams& motor) {
  const double axle_max = 2.0 * motor.max_power;
  const double lo = std::max(p_dem - axle_max, -axle_max);
  const double hi = std::min(p_dem + axle_max, axle_max);
  double front = rule.front(p_dem);
  front = lo <= hi ? std::clamp(front, lo, hi) : 0.5 * p_dem;
  return {front, p_dem - front};
}

GrdpFit grdp_fit(const std::vector<double>& p_dem, const std::vector<double>& p_front) {
  if (p_dem.empty() || p_dem.size() != p_front.size()) {
    throw Error(ErrorCode::InvalidArgument, "grdp_fit needs equally sized, non-empty inputs");
  }
  const double n = static_cast<double>(p_dem.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < p_dem.size(); ++i) {
    mx += p_dem[i];
    my += p_front[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < p_dem.size(); ++i) {
    const double dx = p_dem[i] - mx;
    const double dy = p_front[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) {
    throw Error(ErrorCode::DegenerateFit, "all demand samples are identical");
  }
  GrdpFit fit;
  fit.rule.a = sxy / sxx;
  fit.rule.b = my - fit.rule.a * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

GrdpFit grdp_fit(const std::vector<DpPoint>& trajectory) {
  std::vector<double> x, y;
  x.reserve(trajectory.size());
  y.reserve(trajectory.size());
  for (const DpPoint& p : trajectory) {
    x.push_back(p.p_dem);
    y.push_back(p.p_front);
  }
  return grdp_fit(x, y);
}

}  // namespace iwmev
