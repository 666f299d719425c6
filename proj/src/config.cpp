#include "iwmev/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iwmev/errors.hpp"

namespace iwmev {

using nlohmann::json;

void SimSettings::validate() const {
  if (!(initial_soc >= 0.0 && initial_soc <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "sim.initial_soc must lie in [0, 1]");
  }
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sim.dt must be positive");
  }
  if (!(demand_noise_std >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sim.demand_noise_std must be non-negative");
  }
}

void Config::validate() const {
  plant.validate();
  driver.validate();
  grid.validate();
  sdp.validate();
  skid.validate();
  sim.validate();
}

EfficiencyMaps build_motor_maps(const MotorMapSpec& spec) {
  if (!spec.csv.empty()) {
    return load_efficiency_csv(spec.csv);
  }
  EfficiencyMap map = EfficiencyMap::from_parametric(spec.loss, spec.omega_max, spec.torque_max,
                                                     spec.omega_step, spec.torque_step);
  return {map, map};
}

Config default_config() {
  Config cfg;
  cfg.grid = default_grid();
  cfg.plant.motor.maps = build_motor_maps(cfg.motor_map);
  return cfg;
}

namespace {

// Reads the keys of one object into bound fields and rejects the rest.
class Section {
public:
  Section(const json& root, const std::string& name) : name_(name) {
    if (root.contains(name)) {
      node_ = &root.at(name);
      if (!node_->is_object()) {
        throw Error(ErrorCode::ParseError, "config section '" + name + "' must be an object");
      }
    }
  }

  template <class T>
  Section& field(const std::string& key, T& target) {
    known_.insert(key);
    if (node_ && node_->contains(key)) {
      try {
        target = node_->at(key).get<T>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, "config " + name_ + "." + key + ": " + e.what());
      }
    }
    return *this;
  }

  bool has(const std::string& key) const { return node_ && node_->contains(key); }

  void finish() const {
    if (!node_) return;
    for (const auto& item : node_->items()) {
      if (!known_.count(item.key())) {
        throw Error(ErrorCode::ParseError, "unknown config key " + name_ + "." + item.key());
      }
    }
  }

private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> known_;
};

}  // namespace

Config parse_config(const std::string& json_text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) {
    throw Error(ErrorCode::ParseError, "config root must be an object");
  }
  const std::set<std::string> sections = {"vehicle", "tire", "motor", "battery", "driver",
                                          "grid",    "sdp",  "skid",  "sim"};
  for (const auto& item : root.items()) {
    if (!sections.count(item.key())) {
      throw Error(ErrorCode::ParseError, "unknown config section '" + item.key() + "'");
    }
  }

  Config cfg = default_config();
  VehicleParams& v = cfg.plant.vehicle;
  Section(root, "vehicle")
      .field("mass", v.mass)
      .field("frontal_area", v.frontal_area)
      .field("air_density", v.air_density)
      .field("drag_coeff", v.drag_coeff)
      .field("rolling_coeff", v.rolling_coeff)
      .field("wheelbase", v.wheelbase)
      .field("front_length", v.front_length)
      .field("rear_length", v.rear_length)
      .field("cg_height", v.cg_height)
      .field("wheel_radius", v.wheel_radius)
      .field("wheel_inertia", v.wheel_inertia)
      .field("gravity", v.gravity)
      .finish();

  TireParams& t = cfg.plant.tire;
  Section(root, "tire")
      .field("B", t.B)
      .field("C", t.C)
      .field("D", t.D)
      .field("E", t.E)
      .field("mu_max", t.mu_max)
      .field("slip_epsilon", cfg.plant.slip_epsilon)
      .finish();

  MotorParams& m = cfg.plant.motor;
  MotorMapSpec& spec = cfg.motor_map;
  Section motor(root, "motor");
  motor.field("max_power", m.max_power)
      .field("max_drive_torque", m.max_drive_torque)
      .field("max_regen_torque", m.max_regen_torque)
      .field("max_brake_torque", m.max_brake_torque)
      .field("min_speed", m.min_speed)
      .field("map_csv", spec.csv)
      .field("k_copper", spec.loss.k_copper)
      .field("k_iron", spec.loss.k_iron)
      .field("k_windage", spec.loss.k_windage)
      .field("k_fixed", spec.loss.k_fixed)
      .field("eta_floor", spec.loss.eta_floor)
      .field("map_omega_max", spec.omega_max)
      .field("map_torque_max", spec.torque_max)
      .field("map_omega_step", spec.omega_step)
      .field("map_torque_step", spec.torque_step)
      .finish();
  if (!spec.csv.empty() && std::filesystem::path(spec.csv).is_relative()) {
    spec.csv = (std::filesystem::path(base_dir) / spec.csv).string();
  }
  m.maps = build_motor_maps(spec);

  BatteryParams& b = cfg.plant.battery;
  double capacity_ah = b.capacity / 3600.0;
  Section(root, "battery")
      .field("open_circuit_voltage", b.open_circuit_voltage)
      .field("resistance", b.resistance)
      .field("capacity_ah", capacity_ah)
      .field("max_power", b.max_power)
      .finish();
  b.capacity = capacity_ah * 3600.0;

  DriverParams& d = cfg.driver;
  Section(root, "driver")
      .field("k_p", d.k_p)
      .field("k_i", d.k_i)
      .field("use_feedforward", d.use_feedforward)
      .field("p_min", d.p_min)
      .field("p_max", d.p_max)
      .finish();

  StateGrid& g = cfg.grid;
  Section(root, "grid").field("p", g.p).field("v", g.v).field("lambda", g.lam).field("u", g.u).finish();

  SdpSettings& s = cfg.sdp;
  Section(root, "sdp")
      .field("gamma", s.gamma)
      .field("alpha", s.alpha)
      .field("eval_tol", s.eval_tol)
      .field("max_eval_sweeps", s.max_eval_sweeps)
      .field("max_policy_iters", s.max_policy_iters)
      .field("change_floor", s.change_floor)
      .field("tie_tol", s.tie_tol)
      .field("dt_sdp", s.dt_sdp)
      .field("nominal_soc", s.nominal_soc)
      .finish();

  Section(root, "skid")
      .field("lambda_crit", cfg.skid.lambda_crit)
      .field("extend_to_traction", cfg.skid.extend_to_traction)
      .finish();

  SimSettings& sim = cfg.sim;
  Section(root, "sim")
      .field("initial_soc", sim.initial_soc)
      .field("dt", sim.dt)
      .field("inner_steps", cfg.plant.inner_steps)
      .field("demand_noise_std", sim.demand_noise_std)
      .field("seed", sim.seed)
      .field("cycle_dir", sim.cycle_dir)
      .finish();
  if (!sim.cycle_dir.empty() && std::filesystem::path(sim.cycle_dir).is_relative()) {
    sim.cycle_dir = (std::filesystem::path(base_dir) / sim.cycle_dir).string();
  }

  cfg.validate();
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MissingArtifact, "cannot open config " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_config(buffer.str(), dir.empty() ? "." : dir);
}

std::string config_to_json(const Config& cfg, int indent) {
  const VehicleParams& v = cfg.plant.vehicle;
  const TireParams& t = cfg.plant.tire;
  const MotorParams& m = cfg.plant.motor;
  const MotorMapSpec& spec = cfg.motor_map;
  const BatteryParams& b = cfg.plant.battery;
  json j;
  j["vehicle"] = {{"mass", v.mass},           {"frontal_area", v.frontal_area},
                  {"air_density", v.air_density}, {"drag_coeff", v.drag_coeff},
                  {"rolling_coeff", v.rolling_coeff}, {"wheelbase", v.wheelbase},
                  {"front_length", v.front_length}, {"rear_length", v.rear_length},
                  {"cg_height", v.cg_height}, {"wheel_radius", v.wheel_radius},
                  {"wheel_inertia", v.wheel_inertia}, {"gravity", v.gravity}};
  j["tire"] = {{"B", t.B}, {"C", t.C}, {"D", t.D}, {"E", t.E}, {"mu_max", t.mu_max},
               {"slip_epsilon", cfg.plant.slip_epsilon}};
  j["motor"] = {{"max_power", m.max_power},
                {"max_drive_torque", m.max_drive_torque},
                {"max_regen_torque", m.max_regen_torque},
                {"max_brake_torque", m.max_brake_torque},
                {"min_speed", m.min_speed},
                {"map_csv", spec.csv},
                {"k_copper", spec.loss.k_copper},
                {"k_iron", spec.loss.k_iron},
                {"k_windage", spec.loss.k_windage},
                {"k_fixed", spec.loss.k_fixed},
                {"eta_floor", spec.loss.eta_floor},
                {"map_omega_max", spec.omega_max},
                {"map_torque_max", spec.torque_max},
                {"map_omega_step", spec.omega_step},
                {"map_torque_step", spec.torque_step}};
  j["battery"] = {{"open_circuit_voltage", b.open_circuit_voltage},
                  {"resistance", b.resistance},
                  {"capacity_ah", b.capacity / 3600.0},
                  {"max_power", b.max_power}};
  j["driver"] = {{"k_p", cfg.driver.k_p}, {"k_i", cfg.driver.k_i},
                 {"use_feedforward", cfg.driver.use_feedforward},
                 {"p_min", cfg.driver.p_min}, {"p_max", cfg.driver.p_max}};
  j["grid"] = {{"p", cfg.grid.p}, {"v", cfg.grid.v}, {"lambda", cfg.grid.lam}, {"u", cfg.grid.u}};
  j["sdp"] = {{"gamma", cfg.sdp.gamma},
              {"alpha", cfg.sdp.alpha},
              {"eval_tol", cfg.sdp.eval_tol},
              {"max_eval_sweeps", cfg.sdp.max_eval_sweeps},
              {"max_policy_iters", cfg.sdp.max_policy_iters},
              {"change_floor", cfg.sdp.change_floor},
              {"tie_tol", cfg.sdp.tie_tol},
              {"dt_sdp", cfg.sdp.dt_sdp},
              {"nominal_soc", cfg.sdp.nominal_soc}};
  j["skid"] = {{"lambda_crit", cfg.skid.lambda_crit},
               {"extend_to_traction", cfg.skid.extend_to_traction}};
  j["sim"] = {{"initial_soc", cfg.sim.initial_soc},
              {"dt", cfg.sim.dt},
              {"inner_steps", cfg.plant.inner_steps},
              {"demand_noise_std", cfg.sim.demand_noise_std},
              {"seed", cfg.sim.seed},
              {"cycle_dir", cfg.sim.cycle_dir}};
  return j.dump(indent);
}

}  // namespace iwmev
