#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "iwmev/markov_model.hpp"
#include "iwmev/sdp_solver.hpp"
#include "iwmev/skid_avoidance.hpp"
#include "iwmev/vehicle_model.hpp"

namespace iwmev {

AxleCommand ed_policy(double p_dem);

/// One admissible move of a deterministic stage.
struct DpTransition {
  std::uint32_t control = 0;
  std::uint32_t next = 0;
  double cost = 0.0;
};

using DpStageFn = std::function<std::vector<DpTransition>(std::size_t stage, std::size_t state)>;

struct DpSolution {
  std::vector<std::uint32_t> controls;  // per stage, along the optimal rollout
  std::vector<std::uint32_t> states;    // state at the start of each stage
  double total_cost = 0.0;
};

/// Backward induction over `stages` stages from `initial`, restricted to the
/// states reachable from it. Ties go to the earlier transition in the list
/// returned by `stage`. Throws InfeasibleStage when some reachable state has
/// no transition.
DpSolution solve_deterministic_dp(std::size_t num_states, std::size_t stages, std::size_t initial,
                                  const DpStageFn& stage);

/// Demand trace the DP optimises against: speed and demand per step.
struct DemandTrace {
  std::vector<double> t;
  std::vector<double> v;
  std::vector<double> p_dem;
};

struct DpPoint {
  double t = 0.0;
  double p_dem = 0.0;
  double p_front = 0.0;  // optimal front power, W
};

struct VehicleDpResult {
  std::vector<DpPoint> trajectory;
  double total_cost = 0.0;
  double ed_cost = 0.0;  // equal split scored on the same stage model
};

/// Deterministic DP over a known demand trace with state (lambda_f, lambda_r)
/// on the slip grid and speed pinned to the trace. Controls are the u grid
/// plus the equal split P_dem / 2 of each stage; stage cost is the SDP
/// one-step cost, with the skid rules applied as in simulation.
VehicleDpResult vehicle_deterministic_dp(const DemandTrace& trace, const StateGrid& grid,
                                         const PlantParams& plant, const SdpSettings& settings,
                                         const SkidConfig& skid);

struct LinearRule {
  double a = 0.5;
  double b = 0.0;  // W

  double front(double p_dem) const { return a * p_dem + b; }
};

/// Fitted rule applied with the axle limits: the front power is clipped so
/// both axles stay within 2 * max_power where possible.
AxleCommand apply_rule(const LinearRule& rule, double p_dem, const MotorParams& motor);

struct GrdpFit {
  LinearRule rule;
  double r2 = 0.0;
};

/// Ordinary least squares of front power on demand. Throws DegenerateFit when
/// every demand is identical, InvalidArgument on empty or mismatched input.
GrdpFit grdp_fit(const std::vector<double>& p_dem, const std::vector<double>& p_front);
GrdpFit grdp_fit(const std::vector<DpPoint>& trajectory);

}  // namespace iwmev
