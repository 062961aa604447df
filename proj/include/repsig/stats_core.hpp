#pragma once

// Standard normal numerics and the Z-score curves used to reason about
// repeated-significance plans. Every Z in this library is two-sided.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "repsig/errors.hpp"

namespace repsig {

struct SignificancePoint {
  double p = 1.0;
  double z = 0.0;
};

// Parameters of the continuous-monitoring comparator bound.
struct AlwaysValidParams {
  double rho = 1.0;
  double alpha = 0.05;
  std::uint64_t t = 1;
};

struct EffectModel {
  double mu = 0.0;
  double sigma = 1.0;
};

namespace detail {

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw domain_error(std::string(what) + ": argument must be finite");
  }
}

inline void require_alpha(double alpha, const char* what) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw domain_error(std::string(what) + ": alpha must lie in (0, 1)");
  }
}

// Wichura's AS241 (PPND16). Relative accuracy about 1e-16 over (0, 1).
inline double ppnd16(double p) {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        ((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
             6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
           1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
         1.3314166789178437745e+2) * r + 3.3871328727963666080e+0;
    const double den =
        ((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
             3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
           5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
         4.2313330701600911252e+1) * r + 1.0;
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        ((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
             2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
           3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
         4.63033784615654529590e+0) * r + 1.42343711074968357734e+0;
    const double den =
        ((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
             1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
           6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
         2.05319162663775882187e+0) * r + 1.0;
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
             1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
           2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
         5.46378491116411436990e+0) * r + 6.65790464350110377720e+0;
    const double den =
        ((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
             1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
           1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
         5.99832206555887937690e-1) * r + 1.0;
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

}  // namespace detail

/// Standard normal CDF.
inline double std_normal_cdf(double z) {
  detail::require_finite(z, "std_normal_cdf");
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// Standard normal quantile on the open interval (0, 1).
inline double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw domain_error("std_normal_quantile: p must lie in (0, 1)");
  }
  return detail::ppnd16(p);
}

/// Upper tail 1 - cdf(z), computed without cancellation.
inline double std_normal_upper_tail(double z) {
  detail::require_finite(z, "std_normal_upper_tail");
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

/// Z such that a two-sided test at that score has p-value `p`.
inline double z_from_p_two_sided(double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw domain_error("z_from_p_two_sided: p must lie in (0, 1]");
  }
  // Working from the lower tail keeps precision for tiny p.
  // Adding 0.0 maps -0.0 to +0.0 at p = 1.
  return -detail::ppnd16(0.5 * p) + 0.0;
}

inline double p_from_z_two_sided(double z) {
  if (std::isnan(z) || z < 0.0) {
    throw domain_error("p_from_z_two_sided: z must be nonnegative");
  }
  if (std::isinf(z)) return 0.0;
  return std::erfc(z / std::numbers::sqrt2);
}

inline SignificancePoint significance_from_p(double p) {
  return {p, z_from_p_two_sided(p)};
}

/// Z required when alpha is split uniformly over dm (criterion, decision point) pairs.
inline double required_z_uniform(double alpha, std::uint64_t dm) {
  detail::require_alpha(alpha, "required_z_uniform");
  if (dm == 0) throw domain_error("required_z_uniform: dm must be >= 1");
  return z_from_p_two_sided(alpha / static_cast<double>(dm));
}

/// Z required when significance must hold at a fraction u of uniformly
/// budgeted decision points.
inline double required_z_by_rate(double alpha, double u) {
  detail::require_alpha(alpha, "required_z_by_rate");
  if (!(u > 0.0 && u <= 1.0)) {
    throw domain_error("required_z_by_rate: u must lie in (0, 1]");
  }
  return z_from_p_two_sided(u * alpha);
}

/// Relative test length needed to reach score `z` compared to `z_ref`.
inline double sample_size_ratio(double z_ref, double z) {
  if (!(z_ref > 0.0) || !(z > 0.0) || !std::isfinite(z_ref) || !std::isfinite(z)) {
    throw domain_error("sample_size_ratio: both scores must be positive and finite");
  }
  const double ratio = z_ref / z;
  return ratio * ratio;
}

inline void validate(const AlwaysValidParams& params) {
  if (!(params.rho > 0.0) || !std::isfinite(params.rho)) {
    throw domain_error("AlwaysValidParams: rho must be positive");
  }
  detail::require_alpha(params.alpha, "AlwaysValidParams");
  if (params.t < 1) throw domain_error("AlwaysValidParams: t must be >= 1");
}

namespace detail {

// Comparator bound as a function of x = t * rho^2; real-valued so that
// callers can search over x directly.
inline double always_valid_z_at(double x, double alpha) {
  const double radicand = (2.0 * (x + 1.0) / x) * std::log(std::sqrt(x + 1.0) / alpha);
  const double z = std::sqrt(radicand);
  if (!std::isfinite(z)) throw numeric_error("always_valid_z: non-finite result");
  return z;
}

}  // namespace detail

/// Required |Z| of the normal-mixture continuous-monitoring bound after t observations.
inline double always_valid_z(const AlwaysValidParams& params) {
  validate(params);
  const double x = static_cast<double>(params.t) * params.rho * params.rho;
  return detail::always_valid_z_at(x, params.alpha);
}

/// x = t * rho^2 at which the comparator bound is smallest. The minimum value
/// depends only on alpha; rho only moves where along t it occurs.
inline double always_valid_argmin_x(double alpha) {
  detail::require_alpha(alpha, "always_valid_argmin_x");
  // Golden-section on log x; the bound is unimodal in x.
  double lo = std::log(1e-6);
  double hi = std::log(1e8);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [alpha](double log_x) { return detail::always_valid_z_at(std::exp(log_x), alpha); };
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = f(a);
  double fb = f(b);
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = f(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = f(b);
    }
  }
  return std::exp(0.5 * (lo + hi));
}

/// rho that places the comparator's minimum at observation count `t_target`.
inline double always_valid_rho_for_minimum_at(double t_target, double alpha) {
  if (!(t_target >= 1.0) || !std::isfinite(t_target)) {
    throw domain_error("always_valid_rho_for_minimum_at: t_target must be >= 1");
  }
  return std::sqrt(always_valid_argmin_x(alpha) / t_target);
}

}  // namespace repsig
