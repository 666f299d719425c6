#include "iwmev/vehicle_sdp.hpp"

#include <algorithm>
#include <cmath>

#include "iwmev/errors.hpp"

namespace iwmev {

double wheel_speed_for_slip(double v, double lambda, const PlantParams& plant, double omega_cap) {
  const double r = plant.vehicle.wheel_radius;
  if (v < plant.slip_epsilon) {
    return 0.0;
  }
  if (lambda < 0.0) {
    return v * (1.0 + lambda) / r;
  }
  if (lambda >= 1.0) {
    return std::max(omega_cap, v / r);
  }
  return std::min(v / (r * (1.0 - lambda)), std::max(omega_cap, v / r));
}

GridState reconstruct_state(const StateGrid& grid, std::size_t state, double nominal_soc,
                            const PlantParams& plant) {
  const StateGrid::Tuple t = grid.decompose(state);
  GridState out;
  out.p_dem = grid.p[t.ip];
  out.x.v = grid.v[t.iv];
  out.x.omega_f = wheel_speed_for_slip(out.x.v, grid.lam[t.ilf], plant);
  out.x.omega_r = wheel_speed_for_slip(out.x.v, grid.lam[t.ilr], plant);
  out.x.soc = nominal_soc;
  return out;
}

StepCost one_step_cost(const VehicleState& x, double p_dem, const AxleCommand& cmd, double alpha,
                       double dt, const PlantParams& plant) {
  StepCost out;
  try {
    const StepResult r = plant_step(x, cmd, dt, plant);
    out.next = r.state;
    out.diag = r.diag;
    out.delta_soc = r.diag.charge / plant.battery.capacity * 100.0;
    out.shortfall = p_dem - r.diag.delivered_total();
    out.cost = out.delta_soc + alpha * out.shortfall * out.shortfall;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InfeasiblePower && e.code() != ErrorCode::SingularLoadTransfer) throw;
    out.cost = kInfeasible;
  }
  return out;
}

std::size_t quantize_rest(const StateGrid& grid, double v, double lambda_f, double lambda_r) {
  return grid.rest_index(quantize(v, grid.v), quantize(lambda_f, grid.lam), quantize(lambda_r, grid.lam));
}

VehicleSdpModel::VehicleSdpModel(StateGrid grid, Tpm tpm, PlantParams plant, SdpSettings settings,
                                 SkidConfig skid, bool use_skid_rules)
    : grid_(std::move(grid)),
      tpm_(std::move(tpm)),
      plant_(std::move(plant)),
      settings_(settings),
      skid_(skid) {
  grid_.validate();
  plant_.validate();
  settings_.validate();
  skid_.validate();
  if (tpm_.n != grid_.p.size()) {
    throw Error(ErrorCode::GridMismatch, "TPM size does not match the demand grid");
  }
  const std::size_t n = grid_.num_states();
  const std::size_t nu = grid_.u.size();

  // Admissible controls per state: the full u grid, or the single forced
  // command of the skid rules (encoded through the u level of its front power).
  std::vector<std::vector<std::uint32_t>> allowed(n);
  std::vector<char> forced_zero(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    const StateGrid::Tuple t = grid_.decompose(s);
    const double p_dem = grid_.p[t.ip];
    const SkidViolation viol = use_skid_rules
                                   ? skid_violation(grid_.lam[t.ilf], grid_.lam[t.ilr], p_dem, skid_)
                                   : SkidViolation{};
    if (viol.any()) {
      const AxleCommand forced = apply_skid_rules(grid_.lam[t.ilf], grid_.lam[t.ilr], p_dem, {}, skid_);
      allowed[s].push_back(static_cast<std::uint32_t>(quantize(forced.front, grid_.u)));
      forced_zero[s] = viol.front && viol.rear;
    } else {
      for (std::size_t u = 0; u < nu; ++u) allowed[s].push_back(static_cast<std::uint32_t>(u));
    }
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t s = 0; s < n; ++s) offsets_[s + 1] = offsets_[s] + allowed[s].size();
  const std::size_t total = offsets_[n];
  cost_.assign(total, kInfeasible);
  next_rest_.assign(total, 0);
  control_.assign(total, 0);
  half_demand_gap_.assign(total, 0.0);

#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t s = 0; s < n; ++s) {
    const GridState gs = reconstruct_state(grid_, s, settings_.nominal_soc, plant_);
    for (std::size_t k = 0; k < allowed[s].size(); ++k) {
      const std::size_t slot = offsets_[s] + k;
      const double pf = grid_.u[allowed[s][k]];
      const AxleCommand cmd = forced_zero[s] ? AxleCommand{0.0, 0.0} : AxleCommand{pf, gs.p_dem - pf};
      const StepCost sc = one_step_cost(gs.x, gs.p_dem, cmd, settings_.alpha, settings_.dt_sdp, plant_);
      control_[slot] = allowed[s][k];
      cost_[slot] = sc.cost;
      half_demand_gap_[slot] = std::abs(pf - 0.5 * gs.p_dem);
      if (sc.feasible()) {
        const double lf = wheel_slip(sc.next.v, sc.next.omega_f, plant_.vehicle.wheel_radius, plant_.slip_epsilon);
        const double lr = wheel_slip(sc.next.v, sc.next.omega_r, plant_.vehicle.wheel_radius, plant_.slip_epsilon);
        next_rest_[slot] = static_cast<std::uint32_t>(quantize_rest(grid_, sc.next.v, lf, lr));
      }
    }
  }
}

double VehicleSdpModel::expected_next(std::size_t s, std::size_t a, const std::vector<double>& J) const {
  const std::size_t ip = s / grid_.num_rest();
  const std::size_t rest = next_rest_[offsets_[s] + a];
  const std::size_t stride = grid_.num_rest();
  return expected_value(tpm_.row(ip), [&](std::size_t j) { return J[j * stride + rest]; });
}

double VehicleSdpModel::tie_rank(std::size_t s, std::size_t a) const {
  // Distance to P_dem / 2 first, control index as the secondary key.
  return half_demand_gap_[offsets_[s] + a] * 1e6 + static_cast<double>(control_[offsets_[s] + a]);
}

std::size_t VehicleSdpModel::equal_split_action(std::size_t s) const {
  std::size_t best = 0;
  for (std::size_t a = 1; a < num_actions(s); ++a) {
    if (tie_rank(s, a) < tie_rank(s, best)) best = a;
  }
  return best;
}

TrainResult train_sdp(const VehicleSdpModel& model, const SdpSettings& settings) {
  std::vector<std::size_t> initial(model.num_states());
  for (std::size_t s = 0; s < initial.size(); ++s) initial[s] = model.equal_split_action(s);
  PolicyIterationResult pi = policy_iteration(model, std::move(initial), settings);
  TrainResult out;
  out.policy.grid = model.grid();
  out.policy.front_power.resize(model.num_states());
  for (std::size_t s = 0; s < model.num_states(); ++s) {
    out.policy.front_power[s] = model.front_power(s, pi.policy[s]);
  }
  out.value = std::move(pi.value);
  out.changes = std::move(pi.changes);
  out.eval_sweeps = std::move(pi.eval_sweeps);
  return out;
}

AxleCommand lookup_control(const Policy& policy, double p_dem, double v, double lambda_f,
                           double lambda_r) {
  const StateGrid& g = policy.grid;
  const std::size_t ip = quantize(p_dem, g.p);
  const std::size_t s = g.state_index(ip, quantize_rest(g, v, lambda_f, lambda_r));
  const double node = g.p[ip];
  const double tabulated = policy.front_power[s];
  const double front = node != 0.0 ? tabulated * (p_dem / node) : tabulated;
  return {front, p_dem - front};
}

}  // namespace iwmev
