#include "iwmev/markov_model.hpp"

#include <algorithm>
#include <cmath>

#include "iwmev/errors.hpp"

namespace iwmev {

std::size_t quantize(double value, std::span<const double> grid) {
  if (grid.empty()) {
    throw Error(ErrorCode::InvalidArgument, "quantize on an empty grid");
  }
  if (value <= grid.front()) return 0;
  if (value >= grid.back()) return grid.size() - 1;
  const auto hi = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), value) - grid.begin());
  const std::size_t lo = hi - 1;
  return value - grid[lo] <= grid[hi] - value ? lo : hi;
}

namespace {

void check_increasing(const std::vector<double>& g, const char* name) {
  if (g.empty()) {
    throw Error(ErrorCode::InvalidArgument, std::string("grid '") + name + "' is empty");
  }
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (!(g[i] > g[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, std::string("grid '") + name + "' must be strictly increasing");
    }
  }
}

}  // namespace

void StateGrid::validate() const {
  check_increasing(p, "p");
  check_increasing(v, "v");
  check_increasing(lam, "lambda");
  check_increasing(u, "u");
  if (v.front() < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "speed grid must be non-negative");
  }
  if (lam.front() < -1.0 || lam.back() > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "slip grid must lie in [-1, 1]");
  }
}

StateGrid::Tuple StateGrid::decompose(std::size_t state) const {
  const std::size_t nl = lam.size();
  Tuple t{};
  t.ilr = state % nl;
  state /= nl;
  t.ilf = state % nl;
  state /= nl;
  t.iv = state % v.size();
  t.ip = state / v.size();
  return t;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  out.back() = hi;
  return out;
}

StateGrid default_grid() {
  StateGrid g;
  for (int kw = -12; kw <= 19; ++kw) g.p.push_back(1000.0 * kw);
  g.v = {0.0, 5.0, 10.0, 25.0};
  g.lam = {-1.0, -0.35, -0.21, -0.1, -0.001, 0.0, 0.001, 0.1, 0.21, 0.35, 1.0};
  for (int half_kw = -24; half_kw <= 38; ++half_kw) g.u.push_back(500.0 * half_kw);
  return g;
}

Tpm tpm_from_counts(std::size_t n, std::vector<double> counts) {
  Tpm tpm;
  tpm.n = n;
  tpm.counts = std::move(counts);
  tpm.p.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += tpm.counts[i * n + j];
    if (total <= 0.0) {
      tpm.p[i * n + i] = 1.0;
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) tpm.p[i * n + j] = tpm.counts[i * n + j] / total;
  }
  return tpm;
}

Tpm estimate_tpm(const std::vector<std::vector<double>>& sequences, std::span<const double> levels) {
  const std::size_t n = levels.size();
  std::vector<double> counts(n * n, 0.0);
  bool any = false;
  for (const auto& seq : sequences) {
    if (seq.size() < 2) continue;
    any = true;
    std::size_t prev = quantize(seq[0], levels);
    for (std::size_t k = 1; k < seq.size(); ++k) {
      const std::size_t next = quantize(seq[k], levels);
      counts[prev * n + next] += 1.0;
      prev = next;
    }
  }
  if (!any) {
    throw Error(ErrorCode::EmptyObservation, "no demand sequence has at least two samples");
  }
  return tpm_from_counts(n, std::move(counts));
}

}  // namespace iwmev
