#include "iwmev/sdp_solver.hpp"

#include <algorithm>
#include <numeric>

namespace iwmev {

void SdpSettings::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1)");
  }
  if (!(alpha >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must be non-negative");
  }
  if (!(eval_tol > 0.0) || max_eval_sweeps < 1 || max_policy_iters < 1 || !(tie_tol >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid policy-iteration limits");
  }
  if (!(dt_sdp > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "dt_sdp must be positive");
  }
  if (!(nominal_soc >= 0.0 && nominal_soc <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "nominal_soc must lie in [0, 1]");
  }
}

DenseMdp::DenseMdp(std::size_t states, std::size_t actions)
    : states_(states),
      actions_(actions),
      cost_(states * actions, 0.0),
      trans_(states * actions * states, 0.0) {
  if (states == 0 || actions == 0) {
    throw Error(ErrorCode::InvalidArgument, "an MDP needs at least one state and one action");
  }
  for (std::size_t s = 0; s < states; ++s) {
    for (std::size_t a = 0; a < actions; ++a) {
      trans_[(s * actions + a) * states + s] = 1.0;
    }
  }
}

void DenseMdp::set_transition(std::size_t s, std::size_t a, std::vector<double> row) {
  if (row.size() != states_) {
    throw Error(ErrorCode::InvalidArgument, "transition row has the wrong length");
  }
  const double total = std::accumulate(row.begin(), row.end(), 0.0);
  const bool negative = std::any_of(row.begin(), row.end(), [](double x) { return x < 0.0; });
  if (negative || std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "transition row must be a probability vector");
  }
  std::copy(row.begin(), row.end(), trans_.begin() + static_cast<std::ptrdiff_t>((s * actions_ + a) * states_));
}

double DenseMdp::expected_next(std::size_t s, std::size_t a, const std::vector<double>& J) const {
  const double* row = trans_.data() + (s * actions_ + a) * states_;
  double sum = 0.0;
  for (std::size_t j = 0; j < states_; ++j) sum += row[j] * J[j];
  return sum;
}

}  // namespace iwmev
