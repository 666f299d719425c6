#pragma once

#include "iwmev/vehicle_model.hpp"

namespace iwmev {

struct SkidConfig {
  double lambda_crit = 0.2;
  bool extend_to_traction = true;

  void validate() const;
};

struct SkidViolation {
  bool front = false;
  bool rear = false;

  bool any() const { return front || rear; }
};

/// Braking-side violations (slip below -lambda_crit) always count; with
/// extend_to_traction, slip above +lambda_crit counts under positive demand.
SkidViolation skid_violation(double lambda_f, double lambda_r, double p_dem, const SkidConfig& cfg);

/// Rule table: both axles out of band -> (0, 0); one axle out of band -> the
/// other axle takes the whole demand; otherwise the candidate passes through.
AxleCommand apply_skid_rules(double lambda_f, double lambda_r, double p_dem,
                             const AxleCommand& candidate, const SkidConfig& cfg);

}  // namespace iwmev
