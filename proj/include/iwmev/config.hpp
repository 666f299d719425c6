#pragma once

#include <cstdint>
#include <string>

#include "iwmev/drive_cycle.hpp"
#include "iwmev/markov_model.hpp"
#include "iwmev/sdp_solver.hpp"
#include "iwmev/skid_avoidance.hpp"
#include "iwmev/vehicle_model.hpp"

namespace iwmev {

struct SimSettings {
  double initial_soc = 0.9;
  double dt = 0.1;                // s
  double demand_noise_std = 0.0;  // W, Gaussian noise on the driver demand
  std::uint64_t seed = 1;
  std::string cycle_dir;          // empty: the repository's cycles/ directory

  void validate() const;
};

/// Motor map source: a CSV file when `csv` is set, else the parametric model
/// sampled on a regular grid.
struct MotorMapSpec {
  std::string csv;
  ParametricLoss loss;
  double omega_max = 300.0;
  double torque_max = 400.0;
  double omega_step = 2.0;
  double torque_step = 2.0;
};

struct Config {
  PlantParams plant;
  MotorMapSpec motor_map;
  DriverParams driver;
  StateGrid grid;
  SdpSettings sdp;
  SkidConfig skid;
  SimSettings sim;

  void validate() const;
};

Config default_config();

/// Reads a JSON config. Missing keys keep their defaults; unknown keys and
/// wrongly typed values throw ParseError. Relative map paths resolve against
/// the config file's directory.
Config load_config(const std::string& path);
Config parse_config(const std::string& json_text, const std::string& base_dir = ".");

/// Builds the efficiency maps described by `spec`.
EfficiencyMaps build_motor_maps(const MotorMapSpec& spec);

std::string config_to_json(const Config& cfg, int indent = 2);

}  // namespace iwmev
