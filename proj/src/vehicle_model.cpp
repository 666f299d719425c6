#include "iwmev/vehicle_model.hpp"

#include <algorithm>
#include <cmath>

#include "iwmev/errors.hpp"

namespace iwmev {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::InfeasiblePower: return "InfeasiblePower";
    case ErrorCode::SingularLoadTransfer: return "SingularLoadTransfer";
    case ErrorCode::EmptyObservation: return "EmptyObservation";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::NoFeasibleControl: return "NoFeasibleControl";
    case ErrorCode::InfeasibleStage: return "InfeasibleStage";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::SpanTooNarrow: return "SpanTooNarrow";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
  }
  return "Unknown";
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) {
    throw Error(ErrorCode::InvalidArgument, what);
  }
}

}  // namespace

void VehicleParams::validate() const {
  require(mass > 0 && frontal_area > 0 && air_density > 0 && drag_coeff > 0 && rolling_coeff > 0 &&
              wheelbase > 0 && front_length > 0 && rear_length > 0 && wheel_radius > 0 &&
              wheel_inertia > 0 && gravity > 0,
          "vehicle parameters must be strictly positive");
  // h = 0 removes load transfer, which the symmetry checks rely on.
  require(cg_height >= 0, "cg_height must be non-negative");
  require(std::abs(wheelbase - (front_length + rear_length)) <= 1e-9,
          "wheelbase must equal front_length + rear_length");
}

void TireParams::validate() const {
  require(mu_max > 0 && D > 0 && B > 0 && C > 0, "tire B, C, D and mu_max must be positive");
}

void MotorParams::validate() const {
  require(!maps.traction.empty() && !maps.regen.empty(), "motor efficiency maps are missing");
  require(max_power > 0 && max_drive_torque > 0 && max_regen_torque > 0 && min_speed > 0,
          "motor limits must be positive");
  require(max_brake_torque >= max_regen_torque, "max_brake_torque must cover max_regen_torque");
}

void BatteryParams::validate() const {
  require(open_circuit_voltage > 0 && resistance > 0 && capacity > 0 && max_power > 0,
          "battery parameters must be positive");
}

double BatteryParams::max_feasible_power() const {
  return open_circuit_voltage * open_circuit_voltage / (4.0 * resistance);
}

void PlantParams::validate() const {
  vehicle.validate();
  tire.validate();
  motor.validate();
  battery.validate();
  require(slip_epsilon > 0, "slip_epsilon must be positive");
  require(inner_steps >= 1, "inner_steps must be at least 1");
}

PlantParams default_plant() {
  PlantParams plant;
  plant.motor.maps.traction = EfficiencyMap::from_parametric(ParametricLoss{}, 300.0, 400.0);
  plant.motor.maps.regen = plant.motor.maps.traction;
  return plant;
}

double friction_coefficient(double slip, const TireParams& tire) {
  const double x = tire.B * slip;
  const double phi = x - tire.E * (x - std::atan(x));
  return tire.mu_max * tire.D * std::sin(tire.C * std::atan(phi));
}

double slip_ratio(double v, double omega, double wheel_radius, SlipMode mode, double epsilon) {
  const double tread = wheel_radius * omega;
  if (v < epsilon && std::abs(tread) < epsilon) {
    return 0.0;
  }
  double slip;
  if (mode == SlipMode::Driving) {
    slip = tread > 0.0 ? (tread - v) / tread : -1.0;
  } else {
    slip = v > 0.0 ? (tread - v) / v : 1.0;
  }
  return std::clamp(slip, -1.0, 1.0);
}

SlipMode kinematic_slip_mode(double v, double omega, double wheel_radius) {
  return wheel_radius * omega >= v ? SlipMode::Driving : SlipMode::Braking;
}

double wheel_slip(double v, double omega, double wheel_radius, double epsilon) {
  return slip_ratio(v, omega, wheel_radius, kinematic_slip_mode(v, omega, wheel_radius), epsilon);
}

ResistiveForces resistive_forces(double v, double theta, const VehicleParams& p) {
  ResistiveForces f;
  f.aero = 0.5 * p.air_density * p.frontal_area * p.drag_coeff * v * v;
  f.rolling = p.mass * p.gravity * std::cos(theta) * p.rolling_coeff;
  f.grade = p.mass * p.gravity * std::sin(theta);
  return f;
}

AxleLoads solve_axle_loads_mu(double v, double mu_f, double mu_r, double theta,
                              const VehicleParams& p) {
  const ResistiveForces res = resistive_forces(v, theta, p);
  const double L = p.wheelbase;
  const double h = p.cg_height;
  const double mg = p.mass * p.gravity;
  // Per-wheel normal forces are static_x -/+ transfer * a.
  const double static_f =
      mg / (2 * L) * (p.rear_length * std::cos(theta) - h * std::sin(theta)) - h * res.aero / (2 * L);
  const double static_r =
      mg / (2 * L) * (p.front_length * std::cos(theta) + h * std::sin(theta)) + h * res.aero / (2 * L);
  const double transfer = h * p.mass / (2 * L);

  const double coupling = 1.0 + (h / L) * (mu_f - mu_r);
  if (std::abs(coupling) < 1e-9) {
    throw Error(ErrorCode::SingularLoadTransfer, "load-transfer coupling is singular");
  }
  AxleLoads loads;
  loads.accel = (2 * mu_f * static_f + 2 * mu_r * static_r - res.total()) / (p.mass * coupling);
  loads.front_normal = static_f - transfer * loads.accel;
  loads.rear_normal = static_r + transfer * loads.accel;
  return loads;
}

AxleLoads solve_axle_loads(double v, double omega_f, double omega_r, double theta,
                           const VehicleParams& p, const TireParams& tire, double epsilon) {
  const double mu_f = friction_coefficient(wheel_slip(v, omega_f, p.wheel_radius, epsilon), tire);
  const double mu_r = friction_coefficient(wheel_slip(v, omega_r, p.wheel_radius, epsilon), tire);
  return solve_axle_loads_mu(v, mu_f, mu_r, theta, p);
}

double torque_from_power(double wheel_power, double omega, const MotorParams& motor) {
  const double torque = wheel_power / std::max(omega, motor.min_speed);
  return std::clamp(torque, -motor.max_brake_torque, motor.max_drive_torque);
}

BrakeSplit brake_blend(double torque_demand, const MotorParams& motor) {
  BrakeSplit split;
  split.regen = std::max(torque_demand, -motor.max_regen_torque);
  split.friction = torque_demand - split.regen;
  return split;
}

double motor_efficiency(double wheel_power, double omega, const MotorParams& motor) {
  const double torque = wheel_power / std::max(omega, motor.min_speed);
  return wheel_power >= 0.0 ? motor.maps.traction.at(omega, torque) : motor.maps.regen.at(omega, torque);
}

double motor_battery_power(double wheel_power, double omega, const MotorParams& motor) {
  if (wheel_power == 0.0) {
    return 0.0;
  }
  const double eta = motor_efficiency(wheel_power, omega, motor);
  return wheel_power > 0.0 ? wheel_power / eta : wheel_power * eta;
}

double battery_current(double battery_power, const BatteryParams& battery) {
  const double voc = battery.open_circuit_voltage;
  const double disc = voc * voc - 4.0 * battery.resistance * battery_power;
  if (disc < 0.0) {
    throw Error(ErrorCode::InfeasiblePower,
                "battery power " + std::to_string(battery_power) + " W exceeds V^2/(4R)");
  }
  // (V - sqrt(disc)) / (2R), written without cancellation.
  return 2.0 * battery_power / (voc + std::sqrt(disc));
}

double soc_step(double soc, double current, double dt, const BatteryParams& battery) {
  return std::clamp(soc - current * dt / battery.capacity, 0.0, 1.0);
}

namespace {

struct WheelTorque {
  double motor = 0.0;     // torque produced by the machine (drive or regen)
  double friction = 0.0;  // friction brake torque, <= 0
};

WheelTorque wheel_torque(double wheel_power, double omega, const MotorParams& motor,
                         std::uint32_t& flags) {
  WheelTorque out;
  if (wheel_power == 0.0) {
    return out;
  }
  if (omega < motor.min_speed) {
    flags |= kClampLaunch;
  }
  const double raw = wheel_power / std::max(omega, motor.min_speed);
  const double torque = torque_from_power(wheel_power, omega, motor);
  if (raw > motor.max_drive_torque) {
    flags |= kClampDriveTorque;
  } else if (raw < -motor.max_brake_torque) {
    flags |= kClampBrakeTorque;
  }
  if (torque >= 0.0) {
    out.motor = torque;
  } else {
    const BrakeSplit split = brake_blend(torque, motor);
    out.motor = split.regen;
    out.friction = split.friction;
  }
  return out;
}

// Slip used inside the integrator. Outside the low-speed box it equals
// wheel_slip; inside, the denominator is a smoothed max with epsilon so the
// slip is continuously differentiable in (v, omega), which Newton needs.
double integrator_slip(double v, double omega, double r, double epsilon) {
  constexpr double kBlend = 0.02;  // m/s
  const double tread = r * omega;
  const double m = std::max(tread, v);
  const double denom = 0.5 * (m + epsilon + std::sqrt((m - epsilon) * (m - epsilon) + kBlend * kBlend));
  return std::clamp((tread - v) / denom, -1.0, 1.0);
}

struct Rates {
  double v = 0.0;
  double omega_f = 0.0;
  double omega_r = 0.0;
};

Rates rates(const double z[3], const WheelTorque& tf, const WheelTorque& tr, double theta,
            const PlantParams& plant) {
  const VehicleParams& p = plant.vehicle;
  const double r = p.wheel_radius;
  const double mu_f = friction_coefficient(integrator_slip(z[0], z[1], r, plant.slip_epsilon), plant.tire);
  const double mu_r = friction_coefficient(integrator_slip(z[0], z[2], r, plant.slip_epsilon), plant.tire);
  const AxleLoads loads = solve_axle_loads_mu(z[0], mu_f, mu_r, theta, p);
  return {loads.accel, (tf.motor + tf.friction - r * loads.front_normal * mu_f) / p.wheel_inertia,
          (tr.motor + tr.friction - r * loads.rear_normal * mu_r) / p.wheel_inertia};
}

// Backward Euler residual z - z0 - h f(z). Components pinned at zero whose
// dynamics push them negative (locked wheel, vehicle at rest) count as solved.
struct Residual {
  double e[3];
  bool pinned[3];
  double norm() const { return std::max({std::abs(e[0]), std::abs(e[1]), std::abs(e[2])}); }
};

Residual residual(const double z[3], const double z0[3], double h, const WheelTorque& tf,
                  const WheelTorque& tr, double theta, const PlantParams& plant) {
  const Rates f = rates(z, tf, tr, theta, plant);
  const double fz[3] = {f.v, f.omega_f, f.omega_r};
  Residual res;
  for (int i = 0; i < 3; ++i) {
    res.e[i] = z[i] - z0[i] - h * fz[i];
    res.pinned[i] = z[i] <= 0.0 && res.e[i] >= 0.0;
    if (res.pinned[i]) {
      res.e[i] = 0.0;
    }
  }
  return res;
}

bool solve3(double a[3][3], double b[3]) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (std::abs(a[piv][c]) < 1e-300) return false;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (int r = c + 1; r < 3; ++r) {
      const double m = a[r][c] / a[c][c];
      for (int k = c; k < 3; ++k) a[r][k] -= m * a[c][k];
      b[r] -= m * b[c];
    }
  }
  for (int c = 2; c >= 0; --c) {
    for (int k = c + 1; k < 3; ++k) b[c] -= a[c][k] * b[k];
    b[c] /= a[c][c];
  }
  return true;
}

// One backward Euler sub-step by damped Newton with a finite-difference
// Jacobian. Leaves the best iterate in z and reports convergence.
bool newton_substep(double z[3], double h, const WheelTorque& tf, const WheelTorque& tr,
                      double theta, const PlantParams& plant) {
  const double z0[3] = {z[0], z[1], z[2]};
  Residual res = residual(z, z0, h, tf, tr, theta, plant);
  const double tol = 1e-12 * (1.0 + z[0] + z[1] + z[2]);
  for (int it = 0; res.norm() > tol; ++it) {
    if (it == 30) {
      return false;
    }
    double jac[3][3];
    double rhs[3];
    for (int i = 0; i < 3; ++i) {
      rhs[i] = -res.e[i];
      if (res.pinned[i]) {
        for (int k = 0; k < 3; ++k) jac[i][k] = i == k ? 1.0 : 0.0;
        rhs[i] = 0.0;
      }
    }
    const Rates f0 = rates(z, tf, tr, theta, plant);
    for (int k = 0; k < 3; ++k) {
      double zp[3] = {z[0], z[1], z[2]};
      const double step = 1e-7 * std::max(1.0, std::abs(z[k]));
      zp[k] += step;
      const Rates f1 = rates(zp, tf, tr, theta, plant);
      const double d[3] = {(f1.v - f0.v) / step, (f1.omega_f - f0.omega_f) / step,
                           (f1.omega_r - f0.omega_r) / step};
      for (int i = 0; i < 3; ++i) {
        if (!res.pinned[i]) jac[i][k] = (i == k ? 1.0 : 0.0) - h * d[i];
      }
    }
    if (!solve3(jac, rhs)) {
      return false;
    }
    double t = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 12; ++ls, t *= 0.5) {
      double zt[3];
      for (int i = 0; i < 3; ++i) zt[i] = std::max(0.0, z[i] + t * rhs[i]);
      const Residual rt = residual(zt, z0, h, tf, tr, theta, plant);
      if (rt.norm() < res.norm()) {
        std::copy(zt, zt + 3, z);
        res = rt;
        improved = true;
        break;
      }
    }
    if (!improved) {
      // Stagnation at round-off level still counts as converged.
      return res.norm() <= 1e3 * tol;
    }
  }
  return true;
}

// Halves the step until Newton converges; the last resort keeps the best
// iterate of the smallest step.
void implicit_substep(double z[3], double h, const WheelTorque& tf, const WheelTorque& tr,
                      double theta, const PlantParams& plant, int depth = 0) {
  double trial[3] = {z[0], z[1], z[2]};
  if (newton_substep(trial, h, tf, tr, theta, plant) || depth == 6) {
    std::copy(trial, trial + 3, z);
    return;
  }
  implicit_substep(z, 0.5 * h, tf, tr, theta, plant, depth + 1);
  implicit_substep(z, 0.5 * h, tf, tr, theta, plant, depth + 1);
}

}  // namespace

StepResult plant_step(const VehicleState& x, const AxleCommand& cmd, double dt,
                      const PlantParams& plant) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "plant_step requires dt > 0");
  }
  const VehicleParams& p = plant.vehicle;
  const MotorParams& motor = plant.motor;
  const double r = p.wheel_radius;
  const int n = plant.inner_steps;
  const double h = dt / n;

  StepResult out;
  out.state = x;
  VehicleState& s = out.state;
  StepDiagnostics& d = out.diag;

  double wheel_power_f = 0.5 * cmd.front;
  double wheel_power_r = 0.5 * cmd.rear;
  for (double* pw : {&wheel_power_f, &wheel_power_r}) {
    if (std::abs(*pw) > motor.max_power) {
      *pw = std::copysign(motor.max_power, *pw);
      d.clamp_flags |= kClampMotorPower;
    }
  }

  for (int k = 0; k < n; ++k) {
    WheelTorque tf = wheel_torque(wheel_power_f, s.omega_f, motor, d.clamp_flags);
    WheelTorque tr = wheel_torque(wheel_power_r, s.omega_r, motor, d.clamp_flags);

    // Battery side, per-motor powers at the start of the sub-step.
    double mech_f = tf.motor * s.omega_f;
    double mech_r = tr.motor * s.omega_r;
    double batt = 2.0 * motor_battery_power(mech_f, s.omega_f, motor) +
                  2.0 * motor_battery_power(mech_r, s.omega_r, motor);
    if (std::abs(batt) > plant.battery.max_power) {
      d.clamp_flags |= kClampBattery;
      const double scale = plant.battery.max_power / std::abs(batt);
      for (WheelTorque* t : {&tf, &tr}) {
        if ((batt > 0.0) == (t->motor > 0.0)) {
          const double total = t->motor + t->friction;
          t->motor *= scale;
          // Regen given up to the pack limit is taken by the friction brake.
          if (total < 0.0) {
            t->friction = total - t->motor;
          }
        }
      }
      mech_f = tf.motor * s.omega_f;
      mech_r = tr.motor * s.omega_r;
      batt = 2.0 * motor_battery_power(mech_f, s.omega_f, motor) +
             2.0 * motor_battery_power(mech_r, s.omega_r, motor);
    }
    const double current = battery_current(batt, plant.battery);
    s.soc = soc_step(s.soc, current, h, plant.battery);
    d.battery_power += batt / n;
    d.charge += current * h;
    d.delivered_front += 2.0 * (tf.motor + tf.friction) * s.omega_f / n;
    d.delivered_rear += 2.0 * (tr.motor + tr.friction) * s.omega_r / n;
    d.friction_brake_power += 2.0 * (tf.friction * s.omega_f + tr.friction * s.omega_r) / n;

    double z[3] = {s.v, s.omega_f, s.omega_r};
    implicit_substep(z, h, tf, tr, s.theta, plant);
    s.v = z[0];
    s.omega_f = z[1];
    s.omega_r = z[2];
  }

  d.accel = (s.v - x.v) / dt;
  d.slip_f = wheel_slip(s.v, s.omega_f, r, plant.slip_epsilon);
  d.slip_r = wheel_slip(s.v, s.omega_r, r, plant.slip_epsilon);
  return out;
}

}  // namespace iwmev
