#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace iwmev {

/// Nearest node; an exact midpoint goes to the lower index and values outside
/// the span clamp to the end nodes. `grid` must be sorted ascending.
std::size_t quantize(double value, std::span<const double> grid);

/// Discretised SDP domain. States are (demand, speed, front slip, rear slip)
/// tuples flattened with the demand index most significant.
struct StateGrid {
  std::vector<double> p;    // demand levels, W
  std::vector<double> v;    // speeds, m/s
  std::vector<double> lam;  // slip levels shared by both axles
  std::vector<double> u;    // front-axle power levels, W

  void validate() const;

  std::size_t num_states() const { return p.size() * v.size() * lam.size() * lam.size(); }
  /// Number of (speed, front slip, rear slip) combinations.
  std::size_t num_rest() const { return v.size() * lam.size() * lam.size(); }

  std::size_t rest_index(std::size_t iv, std::size_t ilf, std::size_t ilr) const {
    return (iv * lam.size() + ilf) * lam.size() + ilr;
  }
  std::size_t state_index(std::size_t ip, std::size_t rest) const { return ip * num_rest() + rest; }

  struct Tuple {
    std::size_t ip, iv, ilf, ilr;
  };
  Tuple decompose(std::size_t state) const;

  bool operator==(const StateGrid&) const = default;
};

/// Demand -12..19 kW in 1 kW steps, speeds {0, 5, 10, 25} m/s, eleven slip
/// levels, and front powers every 0.5 kW over the demand span.
StateGrid default_grid();

/// Evenly spaced levels from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Row-stochastic demand transition matrix, row-major n x n.
struct Tpm {
  std::size_t n = 0;
  std::vector<double> p;
  std::vector<double> counts;

  double at(std::size_t i, std::size_t j) const { return p[i * n + j]; }
  std::span<const double> row(std::size_t i) const { return {p.data() + i * n, n}; }
};

/// Counts level-to-level transitions inside each sequence (never across
/// sequence boundaries) and normalises each row; rows never visited become a
/// self-transition. Throws EmptyObservation when no sequence has two samples.
Tpm estimate_tpm(const std::vector<std::vector<double>>& sequences, std::span<const double> levels);

/// Normalises a count matrix the same way estimate_tpm does.
Tpm tpm_from_counts(std::size_t n, std::vector<double> counts);

template <class F>
double expected_value(std::span<const double> row, F&& f) {
  double sum = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] != 0.0) {
      sum += row[j] * f(j);
    }
  }
  return sum;
}

}  // namespace iwmev
