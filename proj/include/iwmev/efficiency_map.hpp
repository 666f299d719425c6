#pragma once

#include <string>
#include <vector>

namespace iwmev {

/// Loss coefficients of the parametric motor model
///   eta(w, T) = P / (P + k_copper*T^2 + k_iron*w + k_windage*w^3 + k_fixed),  P = |T|*w.
struct ParametricLoss {
  double k_copper = 0.008;    // W / (N m)^2
  double k_iron = 0.0;        // W s / rad
  double k_windage = 2.0e-3;  // W s^3 / rad^3
  double k_fixed = 375.0;     // W
  double eta_floor = 0.02;    // used where P = 0

  double efficiency(double omega, double torque) const;
};

/// Efficiency table over (wheel speed [rad/s], |torque| [N m]) with bilinear
/// interpolation. Queries outside the grid clamp to the boundary.
class EfficiencyMap {
public:
  EfficiencyMap() = default;
  EfficiencyMap(std::vector<double> omega_nodes, std::vector<double> torque_nodes,
                std::vector<double> values);

  static EfficiencyMap from_parametric(const ParametricLoss& loss, double omega_max,
                                       double torque_max, double omega_step = 2.0,
                                       double torque_step = 2.0);

  /// Efficiency at (omega, |torque|); the sign of the torque is ignored.
  double at(double omega, double torque) const;

  const std::vector<double>& omega_nodes() const { return omega_; }
  const std::vector<double>& torque_nodes() const { return torque_; }
  const std::vector<double>& values() const { return values_; }
  bool empty() const { return values_.empty(); }

private:
  std::vector<double> omega_;
  std::vector<double> torque_;
  std::vector<double> values_;  // row-major: omega index major
  bool uniform_ = false;
};

struct EfficiencyMaps {
  EfficiencyMap traction;
  EfficiencyMap regen;
};

/// Reads a map CSV with header `omega_rad_s,torque_nm,eta_trac,eta_regen`.
/// Rows must cover the full rectangular (omega, torque) grid.
EfficiencyMaps load_efficiency_csv(const std::string& path);

}  // namespace iwmev
