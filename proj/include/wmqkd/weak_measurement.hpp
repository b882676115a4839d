#pragma once

#include "wmqkd/qubit.hpp"
#include "wmqkd/rng.hpp"

namespace wmqkd {

struct PointerConfig {
  double g = 0.05;
  double sigma_md = 1.0;
  double sigma_phi = 0.0;
  double bias_phi = 0.0;

  double weakness() const { return g / sigma_md; }
  bool is_weak() const { return weakness() <= 0.5; }
  void validate() const;
};

struct PointerSample {
  double value = 0.0;
  BlochState posterior;
};

// Posterior after reading x from a pointer coupled to projector p.
BlochState kraus_update(const BlochState& s, const Projector& p, const PointerConfig& cfg, double x);

// Draws the projector actually measured on one signal (bias plus angle noise).
template <class Urbg>
Projector effective_projector(const Projector& p, const PointerConfig& cfg, Urbg& rng) {
  Projector eff = p.shifted(cfg.bias_phi);
  if (cfg.sigma_phi > 0.0) eff = eff.shifted(cfg.sigma_phi * standard_normal(rng));
  return eff;
}

template <class Urbg>
PointerSample sample_weak_measurement(const BlochState& s, const Projector& p,
                                      const PointerConfig& cfg, Urbg& rng) {
  const Projector eff = effective_projector(p, cfg, rng);
  const bool shifted = bernoulli(rng, expectation(eff, s));
  const double x = (shifted ? cfg.g : 0.0) + cfg.sigma_md * standard_normal(rng);
  return {x, kraus_update(s, eff, cfg, x)};
}

// Pointer-averaged state: the component along p's axis is kept, the rest
// shrinks by exp(-g^2 / 8 sigma^2). Uses cfg.bias_phi, ignores angle noise.
BlochState dephased_state(const BlochState& s, const Projector& p, const PointerConfig& cfg);

double dephasing_factor(double g, double sigma);

// 1/4 (1 - exp(-g^2 / 8 sigma^2))
double wm_disturbance_error(double g, double sigma);

// Exact moments of the pointer reading, including bias and angle noise.
double pointer_mean(const BlochState& s, const Projector& p, const PointerConfig& cfg);
double pointer_variance(const BlochState& s, const Projector& p, const PointerConfig& cfg);

// Two conventions for pointer variance: physical units, or divided by g^2 as
// in the attack analysis (where Var = (g sigma)^2 means sigma is in units of g).
enum class VarianceConvention { Physical, CouplingScaled };

double convert_variance(double v, VarianceConvention from, VarianceConvention to, double g);

// Lower bound on sigma_MD^2 (physical) from an observed pooled pointer variance,
// removing the largest possible branch term g^2/4 and the angle-noise term
// g^2 sigma_phi_upper^2 / 4. May be <= 0, meaning no useful bound.
double sigma_md_sq_lower_bound(double pooled_variance, double g, double sigma_phi_upper);

}  // namespace wmqkd
