#pragma once

#include <string>
#include <vector>

#include "iwmev/vehicle_model.hpp"

namespace iwmev {

struct CycleSample {
  double t = 0.0;  // s
  double v = 0.0;  // target speed, m/s
};

struct DriveCycle {
  std::string name;
  std::vector<CycleSample> samples;

  std::size_t size() const { return samples.size(); }
  double duration() const { return samples.empty() ? 0.0 : samples.back().t - samples.front().t; }
  /// Distance covered by the target trace (trapezoidal), m.
  double distance() const;
};

enum class SpeedUnit { Mps, Mph, Kph };

SpeedUnit parse_speed_unit(const std::string& text);
double to_mps(double value, SpeedUnit unit);

/// Reads a two-column `t,v` CSV. A non-numeric first line is treated as a
/// header. Throws ParseError on malformed rows and NonMonotoneTime when the
/// time column does not strictly increase.
DriveCycle load_cycle(const std::string& path, SpeedUnit unit = SpeedUnit::Mps);

/// Names of the cycles shipped in the repository's cycles/ directory.
std::vector<std::string> builtin_cycle_names();

/// Accepts a builtin name (ftp75, ftp, hwfet, nycc, udds) or a CSV path.
DriveCycle resolve_cycle(const std::string& name_or_path, SpeedUnit unit = SpeedUnit::Mps,
                         const std::string& cycle_dir = "");

/// Linear interpolation onto t0, t0 + dt, ... up to the last sample; the final
/// sample is kept even when the duration is not a multiple of dt.
DriveCycle resample(const DriveCycle& cycle, double dt);

/// Central differences in the interior, one-sided at the ends.
std::vector<double> target_acceleration(const DriveCycle& cycle);

struct DriverParams {
  double k_p = 800.0;  // W per m/s
  double k_i = 40.0;   // W per m
  bool use_feedforward = true;
  double p_min = -12000.0;  // W
  double p_max = 19000.0;   // W

  void validate() const;
};

/// Power needed to follow (v_target, a_target) at zero slip.
double feedforward_power(double v_target, double a_target, double theta, const VehicleParams& p);

/// Feedforward + PI speed-tracking driver producing the demanded wheel power.
/// The integrator freezes while the output saturates in the direction of the
/// error and while both the vehicle and the target are at rest.
class Driver {
public:
  Driver(DriverParams params, VehicleParams vehicle);

  double demand(const VehicleState& x, double v_target, double a_target, double dt);
  void reset() { integral_ = 0.0; }
  double integral() const { return integral_; }

private:
  DriverParams params_;
  VehicleParams vehicle_;
  double integral_ = 0.0;  // integral of the speed error, m
};

}  // namespace iwmev
