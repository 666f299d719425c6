#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iwmev/baselines.hpp"
#include "iwmev/config.hpp"
#include "iwmev/drive_cycle.hpp"
#include "iwmev/vehicle_sdp.hpp"

namespace iwmev {

enum class StrategyKind { Ed, Grdp, Sdp };

struct Strategy {
  StrategyKind kind = StrategyKind::Ed;
  LinearRule rule;                 // Grdp
  const Policy* policy = nullptr;  // Sdp, not owned
  bool skid_overlay = true;

  std::string name() const;
};

/// Set in StepRecord::flags (alongside the plant ClampFlag bits) when the skid
/// rules changed the strategy's command.
constexpr std::uint32_t kSkidOverride = 1u << 8;

struct StepRecord {
  double t = 0.0;
  double v_target = 0.0;
  double v = 0.0;
  double p_dem = 0.0;
  double p_front = 0.0;    // commanded, after the skid overlay
  double p_rear = 0.0;
  double delivered = 0.0;  // mean wheel power actually applied over the step
  double lambda_f = 0.0;
  double lambda_r = 0.0;
  double soc = 0.0;
  double p_batt = 0.0;
  std::uint32_t flags = 0;
};

struct SimSummary {
  double delta_soc = 0.0;  // percentage points
  double rms_error = 0.0;  // m/s
  double max_abs_error = 0.0;
  std::size_t slip_violations = 0;  // records with a slip outside the band
  std::size_t clamped_steps = 0;
  std::size_t skid_steps = 0;
  double distance = 0.0;  // m
};

struct SimTrace {
  std::string cycle;
  std::string strategy;
  double mu_max = 0.0;
  bool skid_overlay = true;
  std::vector<StepRecord> records;
  SimSummary summary;
};

/// Closed-loop run: the cycle is resampled at cfg.sim.dt; every sample gets a
/// record and every sample but the last advances the plant by one step.
SimTrace simulate(const DriveCycle& cycle, const Strategy& strategy, double mu_max, const Config& cfg);

/// Demand sequence of an equal-split closed-loop run, sampled at cfg.sim.dt.
DemandTrace demand_trace(const DriveCycle& cycle, const Config& cfg);

/// Demand TPM over cfg.grid.p from equal-split runs of `cycles` at the SDP
/// time step.
Tpm demand_tpm(const std::vector<DriveCycle>& cycles, const Config& cfg);

struct ComparisonRow {
  std::string cycle;
  double mu_max = 0.0;
  std::optional<double> ed, grdp, sdp;  // delta SoC, pp

  /// 100 * (ED - SDP) / ED when both are present.
  std::optional<double> improvement() const;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;  // ordered by (cycle, mu)

  std::string to_csv() const;
  std::string to_json() const;
};

/// Runs the strategies on every (cycle, mu) pair. A null rule or policy
/// drops that column.
ComparisonTable compare(const std::vector<DriveCycle>& cycles, const std::vector<double>& mus,
                        bool run_ed, const LinearRule* rule, const Policy* policy, const Config& cfg);

struct SweepPoint {
  double p_front = 0.0;
  double delta_soc = 0.0;
};

/// One-step delta SoC (alpha = 0, no skid rules) over n front powers spanning
/// [min(0, P_dem), max(0, P_dem)], or +-1 kW when P_dem = 0. Points i and
/// n - 1 - i are exact mirror images about P_dem / 2.
std::vector<SweepPoint> sweep_sensitivity(double p_dem, double v, double lambda_f, double lambda_r,
                                          std::size_t n, const Config& cfg);

struct SocSample {
  double t = 0.0;
  double soc = 0.0;
};

struct CalibrationResult {
  double resistance = 0.0;
  double rmse = 0.0;
  int evaluations = 0;
  bool degenerate = false;  // RMSE does not depend on the resistance
};

/// RMSE between a reference SoC trace and the simulated one at the reference
/// times (linear interpolation of the simulated records).
double soc_rmse(const std::vector<SocSample>& reference, const SimTrace& trace);

/// Golden-section search for the battery resistance that best reproduces the
/// reference SoC trace. Throws SpanTooNarrow when the minimiser sits on an
/// edge of [r_lo, r_hi].
CalibrationResult calibrate_rbatt(const std::vector<SocSample>& reference, const DriveCycle& cycle,
                                  const Strategy& strategy, const Config& cfg, double r_lo,
                                  double r_hi, double tol = 1e-6);

std::string trace_to_csv(const SimTrace& trace);
std::string summary_to_json(const SimTrace& trace);

}  // namespace iwmev
