#include "iwmev/efficiency_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "iwmev/errors.hpp"

namespace iwmev {

double ParametricLoss::efficiency(double omega, double torque) const {
  const double t = std::abs(torque);
  const double w = std::max(omega, 0.0);
  const double power = t * w;
  if (power <= 0.0) {
    return eta_floor;
  }
  const double loss = k_copper * t * t + k_iron * w + k_windage * w * w * w + k_fixed;
  return std::clamp(power / (power + loss), eta_floor, 1.0);
}

namespace {

bool is_uniform(const std::vector<double>& nodes) {
  if (nodes.size() < 3) {
    return true;
  }
  const double step = nodes[1] - nodes[0];
  for (std::size_t i = 2; i < nodes.size(); ++i) {
    if (std::abs((nodes[i] - nodes[i - 1]) - step) > 1e-9 * std::max(1.0, std::abs(step))) {
      return false;
    }
  }
  return true;
}

void check_axis(const std::vector<double>& nodes, const char* name) {
  if (nodes.empty()) {
    throw Error(ErrorCode::InvalidArgument, std::string("efficiency map has no ") + name + " nodes");
  }
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(nodes[i] > nodes[i - 1])) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string("efficiency map ") + name + " nodes must be strictly increasing");
    }
  }
}

// Cell index and interpolation weight for x on the node axis, clamped.
struct Locate {
  std::size_t i;
  double w;
};

Locate locate(const std::vector<double>& nodes, double x, bool uniform) {
  const std::size_t n = nodes.size();
  if (n == 1 || x <= nodes.front()) {
    return {0, 0.0};
  }
  if (x >= nodes.back()) {
    return {n - 2, 1.0};
  }
  std::size_t i;
  if (uniform) {
    const double step = nodes[1] - nodes[0];
    i = std::min<std::size_t>(static_cast<std::size_t>((x - nodes[0]) / step), n - 2);
  } else {
    i = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin()) - 1;
  }
  return {i, (x - nodes[i]) / (nodes[i + 1] - nodes[i])};
}

}  // namespace

EfficiencyMap::EfficiencyMap(std::vector<double> omega_nodes, std::vector<double> torque_nodes,
                             std::vector<double> values)
    : omega_(std::move(omega_nodes)), torque_(std::move(torque_nodes)), values_(std::move(values)) {
  check_axis(omega_, "omega");
  check_axis(torque_, "torque");
  if (values_.size() != omega_.size() * torque_.size()) {
    throw Error(ErrorCode::InvalidArgument, "efficiency map value count does not match grid");
  }
  for (double eta : values_) {
    if (!(eta > 0.0 && eta <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "efficiency map values must lie in (0, 1]");
    }
  }
  uniform_ = is_uniform(omega_) && is_uniform(torque_);
}

EfficiencyMap EfficiencyMap::from_parametric(const ParametricLoss& loss, double omega_max,
                                             double torque_max, double omega_step,
                                             double torque_step) {
  std::vector<double> omega;
  for (int i = 0; i * omega_step <= omega_max + 1e-9; ++i) {
    omega.push_back(i * omega_step);
  }
  std::vector<double> torque;
  for (int j = 0; j * torque_step <= torque_max + 1e-9; ++j) {
    torque.push_back(j * torque_step);
  }
  std::vector<double> values;
  values.reserve(omega.size() * torque.size());
  for (double w : omega) {
    for (double t : torque) {
      values.push_back(loss.efficiency(w, t));
    }
  }
  return EfficiencyMap(std::move(omega), std::move(torque), std::move(values));
}

double EfficiencyMap::at(double omega, double torque) const {
  const Locate a = locate(omega_, omega, uniform_);
  const Locate b = locate(torque_, std::abs(torque), uniform_);
  const std::size_t nt = torque_.size();
  if (nt == 1 && omega_.size() == 1) {
    return values_[0];
  }
  auto v = [&](std::size_t i, std::size_t j) {
    return values_[std::min(i, omega_.size() - 1) * nt + std::min(j, nt - 1)];
  };
  const double v00 = v(a.i, b.i);
  const double v01 = v(a.i, b.i + 1);
  const double v10 = v(a.i + 1, b.i);
  const double v11 = v(a.i + 1, b.i + 1);
  return (1.0 - a.w) * ((1.0 - b.w) * v00 + b.w * v01) + a.w * ((1.0 - b.w) * v10 + b.w * v11);
}

EfficiencyMaps load_efficiency_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MissingArtifact, "cannot open efficiency map " + path);
  }
  std::string line;
  std::getline(in, line);
  if (line.rfind("omega_rad_s,torque_nm,eta_trac,eta_regen", 0) != 0) {
    throw Error(ErrorCode::ParseError,
                path + ": expected header omega_rad_s,torque_nm,eta_trac,eta_regen");
  }
  std::map<std::pair<double, double>, std::pair<double, double>> cells;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") {
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double w, t, et, er;
    if (!(row >> w >> t >> et >> er)) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": malformed row");
    }
    cells[{w, t}] = {et, er};
  }
  std::vector<double> omega, torque;
  for (const auto& [key, _] : cells) {
    omega.push_back(key.first);
    torque.push_back(key.second);
  }
  std::sort(omega.begin(), omega.end());
  omega.erase(std::unique(omega.begin(), omega.end()), omega.end());
  std::sort(torque.begin(), torque.end());
  torque.erase(std::unique(torque.begin(), torque.end()), torque.end());
  if (cells.size() != omega.size() * torque.size()) {
    throw Error(ErrorCode::ParseError, path + ": efficiency rows do not form a full grid");
  }
  std::vector<double> trac, regen;
  for (double w : omega) {
    for (double t : torque) {
      const auto& cell = cells.at({w, t});
      trac.push_back(cell.first);
      regen.push_back(cell.second);
    }
  }
  return {EfficiencyMap(omega, torque, std::move(trac)), EfficiencyMap(omega, torque, std::move(regen))};
}

}  // namespace iwmev
