#include "wmqkd/weak_measurement.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wmqkd {

void PointerConfig::validate() const {
  if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("pointer.g must be >= 0");
  if (!(sigma_md > 0.0) || !std::isfinite(sigma_md))
    throw std::invalid_argument("pointer.sigma_md must be > 0");
  if (!(sigma_phi >= 0.0) || !std::isfinite(sigma_phi))
    throw std::invalid_argument("pointer.sigma_phi must be >= 0");
  if (!std::isfinite(bias_phi)) throw std::invalid_argument("pointer.bias_phi must be finite");
}

BlochState kraus_update(const BlochState& s, const Projector& p, const PointerConfig& cfg, double x) {
  const BlochState n = p.axis();
  const double r_par = s.dot(n);
  const BlochState r_perp = s + (-r_par) * n;
  const double prob = 0.5 * (1.0 + r_par);

  // Amplitudes a = exp(-x^2/4s^2), b = exp(-(x-g)^2/4s^2), rescaled by the larger
  // one in the log domain so far-tail readings do not underflow.
  const double four_var = 4.0 * cfg.sigma_md * cfg.sigma_md;
  const double la = -(x * x) / four_var;
  const double lb = -((x - cfg.g) * (x - cfg.g)) / four_var;
  const double m = std::max(la, lb);
  const double a = std::exp(la - m);
  const double b = std::exp(lb - m);

  const double z = b * b * prob + a * a * (1.0 - prob);
  const double par = (b * b * prob - a * a * (1.0 - prob)) / z;
  const double perp = a * b / z;
  return par * n + perp * r_perp;
}

double dephasing_factor(double g, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("dephasing_factor: sigma must be > 0");
  if (!(g >= 0.0)) throw std::invalid_argument("dephasing_factor: g must be >= 0");
  return std::exp(-(g * g) / (8.0 * sigma * sigma));
}

BlochState dephased_state(const BlochState& s, const Projector& p, const PointerConfig& cfg) {
  const BlochState n = p.shifted(cfg.bias_phi).axis();
  const double r_par = s.dot(n);
  const double k = dephasing_factor(cfg.g, cfg.sigma_md);
  return k * s + ((1.0 - k) * r_par) * n;
}

double wm_disturbance_error(double g, double sigma) {
  return 0.25 * (1.0 - dephasing_factor(g, sigma));
}

double pointer_mean(const BlochState& s, const Projector& p, const PointerConfig& cfg) {
  return cfg.g * mean_expectation(p.shifted(cfg.bias_phi), s, cfg.sigma_phi);
}

double pointer_variance(const BlochState& s, const Projector& p, const PointerConfig& cfg) {
  // Conditioned on the angle the shift is Bernoulli(q); marginally it is
  // Bernoulli(E[q]), so the branch term uses the averaged expectation.
  const double q = mean_expectation(p.shifted(cfg.bias_phi), s, cfg.sigma_phi);
  return cfg.sigma_md * cfg.sigma_md + cfg.g * cfg.g * q * (1.0 - q);
}

double convert_variance(double v, VarianceConvention from, VarianceConvention to, double g) {
  if (from == to) return v;
  if (!(g > 0.0)) throw std::invalid_argument("convert_variance: coupling must be > 0");
  return from == VarianceConvention::Physical ? v / (g * g) : v * g * g;
}

double sigma_md_sq_lower_bound(double pooled_variance, double g, double sigma_phi_upper) {
  return pooled_variance - 0.25 * g * g * (1.0 + sigma_phi_upper * sigma_phi_upper);
}

}  // namespace wmqkd
