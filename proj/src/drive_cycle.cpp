#include "iwmev/drive_cycle.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "iwmev/errors.hpp"

#ifndef IWMEV_DATA_DIR
#define IWMEV_DATA_DIR "."
#endif

namespace iwmev {

double DriveCycle::distance() const {
  double d = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    d += 0.5 * (samples[i].v + samples[i - 1].v) * (samples[i].t - samples[i - 1].t);
  }
  return d;
}

SpeedUnit parse_speed_unit(const std::string& text) {
  std::string s = text;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "mps" || s == "m/s") return SpeedUnit::Mps;
  if (s == "mph") return SpeedUnit::Mph;
  if (s == "kph" || s == "km/h" || s == "kmh") return SpeedUnit::Kph;
  throw Error(ErrorCode::InvalidArgument, "unknown speed unit '" + text + "' (mps, mph, kph)");
}

double to_mps(double value, SpeedUnit unit) {
  switch (unit) {
    case SpeedUnit::Mps: return value;
    case SpeedUnit::Mph: return value * 0.44704;
    case SpeedUnit::Kph: return value / 3.6;
  }
  return value;
}

namespace {

bool parse_row(const std::string& line, double& t, double& v) {
  std::string row = line;
  std::replace(row.begin(), row.end(), ',', ' ');
  std::istringstream in(row);
  std::string rest;
  return static_cast<bool>(in >> t >> v) && !(in >> rest);
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

}  // namespace

DriveCycle load_cycle(const std::string& path, SpeedUnit unit) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::ParseError, "cannot open cycle file " + path);
  }
  DriveCycle cycle;
  cycle.name = stem_of(path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    double t, v;
    if (!parse_row(line, t, v)) {
      if (cycle.samples.empty() && line_no == 1) continue;  // header
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": expected 't,v'");
    }
    if (!std::isfinite(t) || !std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) + ": speed must be finite and non-negative");
    }
    if (!cycle.samples.empty() && !(t > cycle.samples.back().t)) {
      throw Error(ErrorCode::NonMonotoneTime,
                  path + ":" + std::to_string(line_no) + ": time must strictly increase");
    }
    cycle.samples.push_back({t, to_mps(v, unit)});
  }
  if (cycle.samples.empty()) {
    throw Error(ErrorCode::ParseError, path + ": no samples");
  }
  return cycle;
}

std::vector<std::string> builtin_cycle_names() { return {"ftp75", "hwfet", "nycc", "udds"}; }

DriveCycle resolve_cycle(const std::string& name_or_path, SpeedUnit unit, const std::string& cycle_dir) {
  std::string key = name_or_path;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  if (key == "ftp") key = "ftp75";
  const auto names = builtin_cycle_names();
  if (std::find(names.begin(), names.end(), key) != names.end() &&
      !std::filesystem::exists(name_or_path)) {
    const std::string dir = cycle_dir.empty() ? std::string(IWMEV_DATA_DIR) + "/cycles" : cycle_dir;
    DriveCycle c = load_cycle(dir + "/" + key + ".csv", SpeedUnit::Mps);
    c.name = key;
    return c;
  }
  return load_cycle(name_or_path, unit);
}

DriveCycle resample(const DriveCycle& cycle, double dt) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "resample requires dt > 0");
  }
  DriveCycle out;
  out.name = cycle.name;
  if (cycle.samples.empty()) return out;
  const double t0 = cycle.samples.front().t;
  const double t1 = cycle.samples.back().t;
  const auto steps = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9));
  out.samples.reserve(steps + 2);
  std::size_t j = 0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    while (j + 1 < cycle.samples.size() && cycle.samples[j + 1].t <= t) ++j;
    double v;
    if (j + 1 >= cycle.samples.size() || cycle.samples[j].t == t) {
      v = cycle.samples[j].v;
    } else {
      const CycleSample& a = cycle.samples[j];
      const CycleSample& b = cycle.samples[j + 1];
      const double w = (t - a.t) / (b.t - a.t);
      v = (1.0 - w) * a.v + w * b.v;
    }
    out.samples.push_back({t, v});
  }
  if (t1 - out.samples.back().t > 1e-9 * std::max(1.0, std::abs(t1))) {
    out.samples.push_back(cycle.samples.back());
  }
  return out;
}

std::vector<double> target_acceleration(const DriveCycle& cycle) {
  const auto& s = cycle.samples;
  std::vector<double> a(s.size(), 0.0);
  if (s.size() < 2) return a;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == s.size() ? k : k + 1;
    a[k] = (s[hi].v - s[lo].v) / (s[hi].t - s[lo].t);
  }
  return a;
}

void DriverParams::validate() const {
  if (!(k_p >= 0.0 && k_i >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "driver gains must be non-negative");
  }
  if (!(p_min < p_max)) {
    throw Error(ErrorCode::InvalidArgument, "driver p_min must be below p_max");
  }
}

double feedforward_power(double v_target, double a_target, double theta, const VehicleParams& p) {
  const ResistiveForces f = resistive_forces(v_target, theta, p);
  return (p.mass * a_target + f.total()) * v_target;
}

Driver::Driver(DriverParams params, VehicleParams vehicle)
    : params_(params), vehicle_(vehicle) {
  params_.validate();
}

double Driver::demand(const VehicleState& x, double v_target, double a_target, double dt) {
  const double error = v_target - x.v;
  const double ff = params_.use_feedforward ? feedforward_power(v_target, a_target, x.theta, vehicle_) : 0.0;
  const bool resting = v_target <= 1e-6 && x.v <= 1e-6;
  const double trial_integral = resting ? integral_ : integral_ + error * dt;
  const double raw = ff + params_.k_p * error + params_.k_i * trial_integral;
  const double out = std::clamp(raw, params_.p_min, params_.p_max);
  const bool winding_up = (raw > params_.p_max && error > 0.0) || (raw < params_.p_min && error < 0.0);
  if (!winding_up) {
    integral_ = trial_integral;
  }
  return out;
}

}  // namespace iwmev
