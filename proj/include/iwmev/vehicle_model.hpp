#pragma once

#include <cstdint>

#include "iwmev/efficiency_map.hpp"

namespace iwmev {

// Control-oriented longitudinal model of a four in-wheel-motor EV.
// Left and right wheels of an axle are identical (straight-line driving), so
// the state carries one wheel speed per axle and axle powers split evenly.

struct VehicleParams {
  double mass = 800.0;           // kg
  double frontal_area = 1.66;    // m^2
  double air_density = 1.2;      // kg/m^3
  double drag_coeff = 0.30;
  double rolling_coeff = 0.010;
  double wheelbase = 1.84;       // m
  double front_length = 0.92;    // CG to front axle, m
  double rear_length = 0.92;     // CG to rear axle, m
  double cg_height = 0.6;        // m
  double wheel_radius = 0.33;    // effective tire radius, m
  double wheel_inertia = 1.0;    // kg m^2
  double gravity = 9.81;         // m/s^2

  void validate() const;
};

struct TireParams {
  double B = 10.0;
  double C = 1.9;
  double D = 1.0;
  double E = 0.97;
  double mu_max = 0.8;

  void validate() const;
};

struct MotorParams {
  EfficiencyMaps maps;
  double max_power = 7500.0;         // per motor, W
  double max_drive_torque = 200.0;   // per motor, N m
  double max_regen_torque = 80.0;    // per motor, N m
  double max_brake_torque = 400.0;   // regen + friction per wheel, N m
  double min_speed = 0.5;            // rad/s, below this torque = P / min_speed

  void validate() const;
};

struct BatteryParams {
  double open_circuit_voltage = 72 * 3.3;  // V
  double resistance = 0.063;               // ohm
  double capacity = 200.0 * 3600.0;        // C
  double max_power = 40000.0;              // W, symmetric

  void validate() const;
  /// Largest discharge power with a real current: V^2 / (4 R).
  double max_feasible_power() const;
};

struct PlantParams {
  VehicleParams vehicle;
  TireParams tire;
  MotorParams motor;
  BatteryParams battery;
  double slip_epsilon = 0.1;  // m/s, both speeds below this -> zero slip
  int inner_steps = 10;       // integrator sub-steps per plant_step

  void validate() const;
};

/// Plant with the default efficiency map attached.
PlantParams default_plant();

struct VehicleState {
  double v = 0.0;        // m/s
  double omega_f = 0.0;  // rad/s
  double omega_r = 0.0;  // rad/s
  double soc = 1.0;
  double theta = 0.0;    // road grade, rad
};

/// Total axle wheel powers; each wheel of the axle receives half.
struct AxleCommand {
  double front = 0.0;  // W
  double rear = 0.0;   // W

  double total() const { return front + rear; }
};

enum class SlipMode { Driving, Braking };

double friction_coefficient(double slip, const TireParams& tire);

/// Longitudinal slip for an explicit mode, clamped to [-1, 1].
double slip_ratio(double v, double omega, double wheel_radius, SlipMode mode,
                  double epsilon = 0.1);

/// Driving branch when the tread moves at least as fast as the vehicle,
/// braking branch otherwise; this keeps the result in [-1, 1] without clamping.
SlipMode kinematic_slip_mode(double v, double omega, double wheel_radius);
double wheel_slip(double v, double omega, double wheel_radius, double epsilon = 0.1);

struct ResistiveForces {
  double aero = 0.0;
  double rolling = 0.0;
  double grade = 0.0;

  double total() const { return aero + rolling + grade; }
};

ResistiveForces resistive_forces(double v, double theta, const VehicleParams& p);

struct AxleLoads {
  double front_normal = 0.0;  // per front wheel, N
  double rear_normal = 0.0;   // per rear wheel, N
  double accel = 0.0;         // m/s^2
};

/// Closed-form solution of chassis acceleration and load transfer for the
/// friction coefficients implied by the current slips. Throws
/// SingularLoadTransfer when the coupling is degenerate.
AxleLoads solve_axle_loads(double v, double omega_f, double omega_r, double theta,
                           const VehicleParams& p, const TireParams& tire,
                           double epsilon = 0.1);

/// Same solution for given friction coefficients.
AxleLoads solve_axle_loads_mu(double v, double mu_f, double mu_r, double theta,
                              const VehicleParams& p);

/// Motor torque for a wheel power. Driving torque saturates at
/// max_drive_torque, braking torque at max_brake_torque.
double torque_from_power(double wheel_power, double omega, const MotorParams& motor);

struct BrakeSplit {
  double regen = 0.0;
  double friction = 0.0;
};

/// Splits a (non-positive) brake torque into regenerative and friction parts.
BrakeSplit brake_blend(double torque_demand, const MotorParams& motor);

/// Battery-side power for one motor delivering `wheel_power` at `omega`.
/// Traction divides by the traction efficiency, regeneration multiplies by the
/// regen efficiency.
double motor_battery_power(double wheel_power, double omega, const MotorParams& motor);

/// Efficiency applied by motor_battery_power.
double motor_efficiency(double wheel_power, double omega, const MotorParams& motor);

/// Pack current of the equivalent-circuit battery, positive on discharge.
double battery_current(double battery_power, const BatteryParams& battery);

double soc_step(double soc, double current, double dt, const BatteryParams& battery);

enum ClampFlag : std::uint32_t {
  kClampNone = 0,
  kClampMotorPower = 1u << 0,
  kClampDriveTorque = 1u << 1,
  kClampBrakeTorque = 1u << 2,
  kClampLaunch = 1u << 3,
  kClampBattery = 1u << 4,
};

struct StepDiagnostics {
  double accel = 0.0;            // mean over the step
  double slip_f = 0.0;           // at the end of the step
  double slip_r = 0.0;
  double delivered_front = 0.0;  // mean axle wheel power, W
  double delivered_rear = 0.0;
  double battery_power = 0.0;    // mean pack power, W
  double charge = 0.0;           // pack charge drawn over the step, C
  double friction_brake_power = 0.0;
  std::uint32_t clamp_flags = kClampNone;

  bool clamped() const { return clamp_flags != kClampNone; }
  double delivered_total() const { return delivered_front + delivered_rear; }
};

struct StepResult {
  VehicleState state;
  StepDiagnostics diag;
};

/// Advances the plant by `dt` under a constant axle-power command.
/// Each sub-step is backward Euler on (v, omega_f, omega_r) with motor
/// torques frozen at the sub-step start; v and the wheel speeds stay >= 0.
StepResult plant_step(const VehicleState& x, const AxleCommand& cmd, double dt,
                      const PlantParams& plant);

}  // namespace iwmev
