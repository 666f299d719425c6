#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <vector>

#include "iwmev/errors.hpp"

namespace iwmev {

struct SdpSettings {
  double gamma = 0.95;
  double alpha = 1e-9;         // per W^2 of unmet demand
  double eval_tol = 1e-13;     // sup-norm change that ends an evaluation
  int max_eval_sweeps = 20000;
  int max_policy_iters = 50;
  std::size_t change_floor = 0;  // stop once a step changes at most this many states
  double tie_tol = 1e-10;      // relative; Q-values this close are treated as equal
  double dt_sdp = 0.1;         // s
  double nominal_soc = 0.7;

  void validate() const;
};

constexpr double kInfeasible = std::numeric_limits<double>::infinity();

/// A finite MDP as seen by the solver. `cost` returns kInfeasible for
/// inadmissible pairs; `expected_next` is E[J(next state)] under action a;
/// `tie_rank` orders equally good actions (lower wins, then lower index).
template <class M>
concept MdpModel = requires(const M& m, std::size_t s, std::size_t a, const std::vector<double>& J) {
  { m.num_states() } -> std::convertible_to<std::size_t>;
  { m.num_actions(s) } -> std::convertible_to<std::size_t>;
  { m.cost(s, a) } -> std::convertible_to<double>;
  { m.expected_next(s, a, J) } -> std::convertible_to<double>;
  { m.tie_rank(s, a) } -> std::convertible_to<double>;
};

struct EvaluationStats {
  int sweeps = 0;
  double residual = 0.0;
};

struct PolicyIterationResult {
  std::vector<std::size_t> policy;
  std::vector<double> value;
  std::vector<std::size_t> changes;  // changed entries per improvement step
  std::vector<int> eval_sweeps;
  bool converged = false;
};

/// Jacobi sweeps J <- c_pi + gamma * P_pi J starting from `value`.
/// Throws NonConvergence when the sweep cap leaves a residual above
/// 100 * eval_tol.
template <MdpModel M>
EvaluationStats evaluate_policy(const M& model, const std::vector<std::size_t>& policy,
                                const SdpSettings& settings, std::vector<double>& value) {
  const std::size_t n = model.num_states();
  if (value.size() != n) value.assign(n, 0.0);
  std::vector<double> next(n);
  EvaluationStats stats;
  for (stats.sweeps = 1; stats.sweeps <= settings.max_eval_sweeps; ++stats.sweeps) {
    double residual = 0.0;
#pragma omp parallel for reduction(max : residual) schedule(static)
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t a = policy[s];
      next[s] = model.cost(s, a) + settings.gamma * model.expected_next(s, a, value);
      residual = std::max(residual, std::abs(next[s] - value[s]));
    }
    value.swap(next);
    stats.residual = residual;
    if (!(residual >= settings.eval_tol)) {
      return stats;
    }
  }
  stats.sweeps = settings.max_eval_sweeps;
  if (stats.residual > 100.0 * settings.eval_tol) {
    throw Error(ErrorCode::NonConvergence, "policy evaluation hit the sweep cap");
  }
  return stats;
}

/// Greedy policy with respect to `value`. Among near-optimal actions the
/// incumbent (if given) is kept, otherwise the lowest tie_rank wins. Throws
/// NoFeasibleControl when a state has no admissible action.
template <MdpModel M>
std::vector<std::size_t> improve_policy(const M& model, const std::vector<double>& value,
                                        const SdpSettings& settings,
                                        const std::vector<std::size_t>* incumbent = nullptr) {
  const std::size_t n = model.num_states();
  std::vector<std::size_t> policy(n, 0);
  bool infeasible = false;
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t na = model.num_actions(s);
    std::vector<double> q(na);
    double best = kInfeasible;
    for (std::size_t a = 0; a < na; ++a) {
      const double c = model.cost(s, a);
      q[a] = std::isfinite(c) ? c + settings.gamma * model.expected_next(s, a, value) : kInfeasible;
      best = std::min(best, q[a]);
    }
    if (!std::isfinite(best)) {
      infeasible = true;
      continue;
    }
    const double cutoff = best + settings.tie_tol * std::max(1.0, std::abs(best));
    if (incumbent && (*incumbent)[s] < na && q[(*incumbent)[s]] <= cutoff) {
      policy[s] = (*incumbent)[s];
      continue;
    }
    std::size_t chosen = na;
    double chosen_rank = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      if (!(q[a] <= cutoff)) continue;
      const double rank = model.tie_rank(s, a);
      if (chosen == na || rank < chosen_rank) {
        chosen = a;
        chosen_rank = rank;
      }
    }
    policy[s] = chosen;
  }
  if (infeasible) {
    throw Error(ErrorCode::NoFeasibleControl, "a state has no admissible control");
  }
  return policy;
}

/// Alternates evaluation and improvement from `initial` until no entry (or at
/// most change_floor entries) changes. Throws NonConvergence after
/// max_policy_iters improvement steps without settling.
template <MdpModel M>
PolicyIterationResult policy_iteration(const M& model, std::vector<std::size_t> initial,
                                       const SdpSettings& settings) {
  settings.validate();
  PolicyIterationResult result;
  result.policy = std::move(initial);
  if (result.policy.size() != model.num_states()) {
    throw Error(ErrorCode::InvalidArgument, "initial policy size does not match the state count");
  }
  for (int iter = 0; iter < settings.max_policy_iters; ++iter) {
    const EvaluationStats stats = evaluate_policy(model, result.policy, settings, result.value);
    result.eval_sweeps.push_back(stats.sweeps);
    std::vector<std::size_t> improved = improve_policy(model, result.value, settings, &result.policy);
    std::size_t changed = 0;
    for (std::size_t s = 0; s < improved.size(); ++s) {
      changed += improved[s] != result.policy[s];
    }
    result.changes.push_back(changed);
    result.policy = std::move(improved);
    if (changed <= settings.change_floor) {
      if (changed > 0) {
        result.eval_sweeps.push_back(evaluate_policy(model, result.policy, settings, result.value).sweeps);
      }
      result.converged = true;
      return result;
    }
  }
  throw Error(ErrorCode::NonConvergence, "policy iteration did not settle within max_policy_iters");
}

/// Lowest-rank action per state, the customary starting policy.
template <MdpModel M>
std::vector<std::size_t> preferred_policy(const M& model) {
  std::vector<std::size_t> policy(model.num_states(), 0);
  for (std::size_t s = 0; s < policy.size(); ++s) {
    double best = kInfeasible;
    for (std::size_t a = 0; a < model.num_actions(s); ++a) {
      if (!std::isfinite(model.cost(s, a))) continue;
      const double rank = model.tie_rank(s, a);
      if (rank < best) {
        best = rank;
        policy[s] = a;
      }
    }
  }
  return policy;
}

/// Explicit finite MDP with dense transition rows; used for small problems
/// and tests.
class DenseMdp {
public:
  DenseMdp(std::size_t states, std::size_t actions);

  void set_cost(std::size_t s, std::size_t a, double c) { cost_[s * actions_ + a] = c; }
  /// Sets P(. | s, a); the row must be stochastic.
  void set_transition(std::size_t s, std::size_t a, std::vector<double> row);

  std::size_t num_states() const { return states_; }
  std::size_t num_actions(std::size_t) const { return actions_; }
  double cost(std::size_t s, std::size_t a) const { return cost_[s * actions_ + a]; }
  double expected_next(std::size_t s, std::size_t a, const std::vector<double>& J) const;
  double tie_rank(std::size_t, std::size_t a) const { return static_cast<double>(a); }
  double probability(std::size_t s, std::size_t a, std::size_t next) const {
    return trans_[(s * actions_ + a) * states_ + next];
  }

private:
  std::size_t states_;
  std::size_t actions_;
  std::vector<double> cost_;
  std::vector<double> trans_;
};

}  // namespace iwmev
