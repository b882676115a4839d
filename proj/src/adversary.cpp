#include "wmqkd/adversary.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wmqkd {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::None: return "none";
    case Strategy::InterceptResend: return "intercept_resend";
    case Strategy::FakeWmStrategy1: return "fake_wm_strategy1";
    case Strategy::FakeWmStrategy2: return "fake_wm_strategy2";
    case Strategy::BiasedObservables: return "biased_observables";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::None, Strategy::InterceptResend, Strategy::FakeWmStrategy1,
                     Strategy::FakeWmStrategy2, Strategy::BiasedObservables}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown attack strategy '" + std::string(name) + "'");
}

namespace {
void require_probability_half_to_one(double p, const char* name) {
  if (!(p >= 0.5 && p <= 1.0))
    throw std::invalid_argument(std::string("attack.") + name + " must lie in [0.5, 1]");
}
void require_finite(const std::optional<double>& v, const char* name) {
  if (v && !std::isfinite(*v)) throw std::invalid_argument(std::string("attack.") + name + " must be finite");
}
}  // namespace

void AttackConfig::validate() const {
  require_probability_half_to_one(p_basis, "p_basis");
  require_probability_half_to_one(p_h, "p_h");
  require_finite(alpha, "alpha");
  require_finite(alpha_x, "alpha_x");
  require_finite(alpha_z, "alpha_z");
  if (g_eve && !(*g_eve >= 0.0)) throw std::invalid_argument("attack.g_eve must be >= 0");
  if (sigma_eve && !(*sigma_eve > 0.0)) throw std::invalid_argument("attack.sigma_eve must be > 0");
  if (!std::isfinite(phi) || !std::isfinite(phi_prime))
    throw std::invalid_argument("attack.phi and attack.phi_prime must be finite");
  if (strategy == Strategy::FakeWmStrategy1 && !alpha)
    throw std::invalid_argument("attack.alpha is required for fake_wm_strategy1");
  if (strategy == Strategy::FakeWmStrategy2 && alpha_x.has_value() != alpha_z.has_value())
    throw std::invalid_argument("attack.alpha_x and attack.alpha_z must be given together");
}

PointerConfig AttackConfig::eve_pointer(const PointerConfig& bob) const {
  PointerConfig eve;
  eve.g = g_eve.value_or(bob.g);
  eve.sigma_md = sigma_eve.value_or(bob.sigma_md);
  return eve;
}

double fake_pointer(double delta_plus, double delta_minus, Family guessed_observable,
                    Basis guessed_basis, const AttackConfig& cfg, double g_eve) {
  double a = 0.0;
  if (cfg.strategy == Strategy::FakeWmStrategy1) {
    a = cfg.alpha.value();
  } else if (cfg.strategy == Strategy::FakeWmStrategy2) {
    a = guessed_basis == Basis::X ? cfg.alpha_x.value() : cfg.alpha_z.value();
  } else {
    throw std::invalid_argument("fake_pointer: strategy does not fake pointer readings");
  }
  const double delta = guessed_observable == Family::Plus ? delta_plus : delta_minus;
  return 0.5 * g_eve + a * (delta - 0.5 * g_eve);
}

double strategy1_predicted_qber(double alpha, double p_h) { return 0.5 * (1.0 - alpha * p_h); }

double strategy1_predicted_variance_ratio(double p_h) {
  const double k = 2.0 * p_h - 1.0;
  if (k == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (k * k);
}

double strategy2_qber_lower_bound(double p_basis, double p_h, double sigma_ratio) {
  if (!(sigma_ratio >= 1.0)) throw std::invalid_argument("strategy2_qber_lower_bound: sigma_ratio < 1");
  return 0.5 * (1.0 - sigma_ratio * p_basis * p_h);
}

double strategy2_crossover_sigma_ratio(double p_product, double delta_sec, double delta_wm) {
  if (!(p_product > 0.0)) throw std::invalid_argument("strategy2_crossover_sigma_ratio: p_product <= 0");
  return (1.0 - 2.0 * (delta_sec - delta_wm)) / p_product;
}

double strategy2_saturating_alpha(double sigma_sec_sq, const PointerConfig& eve) {
  if (!(sigma_sec_sq > 0.0)) throw std::invalid_argument("strategy2_saturating_alpha: sigma_sec_sq <= 0");
  // A reading with shift probability q has variance sigma^2 + g^2 q(1-q) <= sigma^2 + g^2/4.
  return std::sqrt(sigma_sec_sq / (eve.sigma_md * eve.sigma_md + 0.25 * eve.g * eve.g));
}

BiasAngles optimal_bias_angles(double r_x_plus, double r_z_plus, double r_x_0, double r_z_0,
                               double p_h) {
  if (!(p_h >= 0.5 && p_h <= 1.0)) throw std::invalid_argument("optimal_bias_angles: p_h outside [0.5, 1]");
  const double k = 2.0 * p_h - 1.0;
  const double num = r_x_plus - k * r_z_plus - r_z_0 + k * r_x_0;
  const double den = r_x_plus + k * r_z_plus + r_z_0 + k * r_x_0;
  const double num_p = r_x_plus + k * r_z_plus - r_z_0 - k * r_x_0;
  const double den_p = r_x_plus - k * r_z_plus + r_z_0 - k * r_x_0;
  // atan2 equals the arctan of the ratio whenever the denominator is positive
  // and picks the maximizing branch otherwise.
  BiasAngles out;
  if (num == 0.0 && den == 0.0) {
    out.preferred = false;
  } else {
    out.phi = std::atan2(num, den);
  }
  if (num_p == 0.0 && den_p == 0.0) {
    out.preferred = false;
  } else {
    out.phi_prime = std::atan2(num_p, den_p);
  }
  if (!out.preferred) out = BiasAngles{0.0, 0.0, false};
  return out;
}

ErrorPair biased_estimates(double r_x_plus, double r_z_0, double phi) {
  if (!(std::abs(phi) < std::numbers::pi)) throw std::invalid_argument("biased_estimates: |phi| >= pi");
  return {0.5 - 0.5 * r_x_plus * (std::cos(phi) + std::sin(phi)),
          0.5 - 0.5 * r_z_0 * (std::cos(phi) - std::sin(phi))};
}

ErrorPair biased_error_rates(double r_x_plus, double r_z_plus, double r_x_0, double r_z_0,
                             double p_h, double phi, double phi_prime) {
  const double k = 2.0 * p_h - 1.0;
  const double a = std::numbers::pi / 4.0 + phi;
  const double ap = std::numbers::pi / 4.0 + phi_prime;
  const double s = std::sin(a), c = std::cos(a), sp = std::sin(ap), cp = std::cos(ap);
  const double rx = (r_x_plus * (s + sp) + r_z_plus * k * (c - cp)) / std::numbers::sqrt2;
  const double rz = (r_z_0 * (c + cp) + r_x_0 * k * (s - sp)) / std::numbers::sqrt2;
  return {0.5 * (1.0 - rx), 0.5 * (1.0 - rz)};
}

}  // namespace wmqkd
