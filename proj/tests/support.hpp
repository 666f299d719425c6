#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "iwmev/sdp_solver.hpp"

namespace iwmev::testing {

// Small random finite MDP with dense rows.
struct RandomMdp {
  std::size_t states;
  std::size_t actions;
  DenseMdp mdp;
};

inline RandomMdp random_mdp(std::mt19937_64& rng, std::size_t max_states, std::size_t max_actions) {
  std::uniform_int_distribution<std::size_t> ns(1, max_states), na(1, max_actions);
  const std::size_t n = ns(rng), m = na(rng);
  std::uniform_real_distribution<double> cost(0.0, 10.0), w(0.0, 1.0);
  std::bernoulli_distribution sparse(0.3);
  DenseMdp mdp(n, m);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < m; ++a) {
      mdp.set_cost(s, a, cost(rng));
      std::vector<double> row(n);
      double sum = 0.0;
      for (double& p : row) {
        p = sparse(rng) ? 0.0 : w(rng);
        sum += p;
      }
      if (sum == 0.0) {
        row[s] = sum = 1.0;
      }
      for (double& p : row) p /= sum;
      mdp.set_transition(s, a, row);
    }
  }
  return {n, m, std::move(mdp)};
}

// Solves A x = b by Gaussian elimination with partial pivoting (A is n x n, row-major).
inline std::vector<double> linear_solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    }
    for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t c = n; c-- > 0;) {
    double s = b[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= a[c * n + k] * x[k];
    x[c] = s / a[c * n + c];
  }
  return x;
}

// Exact discounted cost of a stationary policy: (I - gamma P_pi)^-1 c_pi.
inline std::vector<double> policy_cost(const DenseMdp& mdp, const std::vector<std::size_t>& policy,
                                       double gamma) {
  const std::size_t n = mdp.num_states();
  std::vector<double> a(n * n, 0.0), b(n);
  for (std::size_t s = 0; s < n; ++s) {
    a[s * n + s] = 1.0;
    for (std::size_t t = 0; t < n; ++t) a[s * n + t] -= gamma * mdp.probability(s, policy[s], t);
    b[s] = mdp.cost(s, policy[s]);
  }
  return linear_solve(a, b);
}

// Pointwise minimum over every stationary deterministic policy.
inline std::vector<double> brute_force_optimum(const DenseMdp& mdp, double gamma) {
  const std::size_t n = mdp.num_states(), m = mdp.num_actions(0);
  std::vector<std::size_t> policy(n, 0);
  std::vector<double> best(n, INFINITY);
  while (true) {
    const std::vector<double> j = policy_cost(mdp, policy, gamma);
    for (std::size_t s = 0; s < n; ++s) best[s] = std::min(best[s], j[s]);
    std::size_t i = 0;
    while (i < n && ++policy[i] == m) policy[i++] = 0;
    if (i == n) break;
  }
  return best;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  std::random_device rd;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("iwmev_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace iwmev::testing
