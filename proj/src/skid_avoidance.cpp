#include "iwmev/skid_avoidance.hpp"

#include "iwmev/errors.hpp"

namespace iwmev {

void SkidConfig::validate() const {
  if (!(lambda_crit > 0.0 && lambda_crit < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda_crit must lie in (0, 1)");
  }
}

SkidViolation skid_violation(double lambda_f, double lambda_r, double p_dem, const SkidConfig& cfg) {
  const bool traction = cfg.extend_to_traction && p_dem > 0.0;
  auto out_of_band = [&](double lambda) {
    return lambda < -cfg.lambda_crit || (traction && lambda > cfg.lambda_crit);
  };
  return {out_of_band(lambda_f), out_of_band(lambda_r)};
}

AxleCommand apply_skid_rules(double lambda_f, double lambda_r, double p_dem,
                             const AxleCommand& candidate, const SkidConfig& cfg) {
  const SkidViolation s = skid_violation(lambda_f, lambda_r, p_dem, cfg);
  if (s.front && s.rear) return {0.0, 0.0};
  if (s.front) return {0.0, p_dem};
  if (s.rear) return {p_dem, 0.0};
  return candidate;
}

}  // namespace iwmev
