#pragma once

#include <cstdint>
#include <vector>

#include "iwmev/markov_model.hpp"
#include "iwmev/sdp_solver.hpp"
#include "iwmev/skid_avoidance.hpp"
#include "iwmev/vehicle_model.hpp"

namespace iwmev {

/// Wheel speed that reproduces slip `lambda` at vehicle speed v: the driving
/// branch for lambda >= 0, the braking branch for lambda < 0. Speeds below the
/// slip epsilon give a stationary wheel, and a spinning wheel is capped at
/// omega_cap.
double wheel_speed_for_slip(double v, double lambda, const PlantParams& plant,
                            double omega_cap = 250.0);

struct GridState {
  VehicleState x;
  double p_dem = 0.0;
};

GridState reconstruct_state(const StateGrid& grid, std::size_t state, double nominal_soc,
                            const PlantParams& plant);

struct StepCost {
  double cost = kInfeasible;  // delta SoC [pp] + alpha * shortfall^2
  double delta_soc = 0.0;     // percentage points
  double shortfall = 0.0;     // P_dem - delivered, W
  VehicleState next;
  StepDiagnostics diag;

  bool feasible() const { return std::isfinite(cost); }
};

/// Runs the plant for dt under `cmd` and scores the step. Plant errors
/// (for example an infeasible battery power) give an infeasible result.
StepCost one_step_cost(const VehicleState& x, double p_dem, const AxleCommand& cmd, double alpha,
                       double dt, const PlantParams& plant);

/// Index of (v, lambda_f, lambda_r) of a state after quantisation.
std::size_t quantize_rest(const StateGrid& grid, double v, double lambda_f, double lambda_r);

/// Precomputed vehicle MDP. A state's successor speed and slips are
/// deterministic given the action; only the next demand is random, drawn from
/// the TPM row of the current demand. When the skid rules force the axle
/// powers, the state has a single admissible action.
class VehicleSdpModel {
public:
  VehicleSdpModel(StateGrid grid, Tpm tpm, PlantParams plant, SdpSettings settings, SkidConfig skid,
                  bool use_skid_rules = true);

  std::size_t num_states() const { return grid_.num_states(); }
  std::size_t num_actions(std::size_t s) const { return offsets_[s + 1] - offsets_[s]; }
  double cost(std::size_t s, std::size_t a) const { return cost_[offsets_[s] + a]; }
  double expected_next(std::size_t s, std::size_t a, const std::vector<double>& J) const;
  double tie_rank(std::size_t s, std::size_t a) const;

  /// Front power of action a at state s, W.
  double front_power(std::size_t s, std::size_t a) const { return grid_.u[control_[offsets_[s] + a]]; }
  std::size_t control_index(std::size_t s, std::size_t a) const { return control_[offsets_[s] + a]; }
  /// Action whose control is closest to P_dem / 2.
  std::size_t equal_split_action(std::size_t s) const;

  const StateGrid& grid() const { return grid_; }
  const Tpm& tpm() const { return tpm_; }

private:
  StateGrid grid_;
  Tpm tpm_;
  PlantParams plant_;
  SdpSettings settings_;
  SkidConfig skid_;
  std::vector<std::size_t> offsets_;
  std::vector<double> cost_;
  std::vector<std::uint32_t> next_rest_;
  std::vector<std::uint32_t> control_;
  std::vector<double> half_demand_gap_;
};

/// Tabular front-power law over the grid, W per state.
struct Policy {
  StateGrid grid;
  std::vector<double> front_power;
};

struct TrainResult {
  Policy policy;
  std::vector<double> value;
  std::vector<std::size_t> changes;
  std::vector<int> eval_sweeps;
};

TrainResult train_sdp(const VehicleSdpModel& model, const SdpSettings& settings);

/// Table lookup at the quantised measured state. The tabulated front power is
/// scaled by P_dem / P_node so small demand errors stay on the chosen axle;
/// at the zero-demand node the value is used as is. Returns the command
/// before skid rules and plant limits; front + rear always equals p_dem.
AxleCommand lookup_control(const Policy& policy, double p_dem, double v, double lambda_f,
                           double lambda_r);

}  // namespace iwmev
