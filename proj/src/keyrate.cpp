#include "wmqkd/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "wmqkd/qubit.hpp"

namespace wmqkd {

void DecoyConfig::validate() const {
  if (!(nu > 0.0 && nu < mu)) throw std::invalid_argument("decoy: need 0 < nu < mu");
}

SystemParams SystemParams::ideal() {
  SystemParams p;
  p.eta_d = 1.0;
  p.y0 = 0.0;
  p.loss_db_per_km = 0.0;
  return p;
}

double SystemParams::channel_efficiency() const {
  return eta_d * std::pow(10.0, -loss_db_per_km * distance_km / 10.0);
}

void SystemParams::validate() const {
  auto prob = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string("system.") + name + " must lie in [0, 1]");
  };
  prob(eta_d, "eta_d");
  prob(y0, "y0");
  prob(e_d, "e_d");
  prob(q, "q");
  if (!(loss_db_per_km >= 0.0)) throw std::invalid_argument("system.loss_db_per_km must be >= 0");
  if (!(distance_km >= 0.0)) throw std::invalid_argument("system.distance_km must be >= 0");
  if (!(f_ec >= 1.0)) throw std::invalid_argument("system.f_ec must be >= 1");
}

double transmittance(const SystemParams& p, double gamma) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("transmittance: gamma must be >= 0");
  return p.y0 + 1.0 - std::exp(-p.channel_efficiency() * gamma);
}

double exact_single_photon_gain(const SystemParams& p, double mu) {
  return mu * std::exp(-mu) * (p.y0 + p.channel_efficiency());
}

Clamped q1_lower(double q_mu, double q_nu, double q_vac, const DecoyConfig& cfg) {
  const double mu = cfg.mu, nu = cfg.nu;
  const double denom = mu * nu - nu * nu;
  if (!(denom > 0.0)) throw std::invalid_argument("q1_lower: mu nu - nu^2 must be > 0");
  const double bracket = q_nu * std::exp(nu) - q_mu * std::exp(mu) * (nu * nu) / (mu * mu) -
                         q_vac * (mu * mu - nu * nu) / (mu * mu);
  const double v = mu * mu * std::exp(-mu) / denom * bracket;
  return v < 0.0 ? Clamped{0.0, true} : Clamped{v, false};
}

Clamped eps1_upper(double eps_nu, double q_nu, double eps_vac, double q_vac, double q1_l,
                   const DecoyConfig& cfg) {
  if (!(q1_l > 0.0)) throw std::invalid_argument("eps1_upper: Q1_L must be > 0");
  const double v = (eps_nu * q_nu * std::exp(cfg.nu) - eps_vac * q_vac) /
                   (q1_l * std::exp(cfg.mu) * cfg.nu / cfg.mu);
  if (v < 0.0) return {0.0, true};
  if (v > 0.5) return {0.5, true};
  return {v, false};
}

namespace {

Clamped rate_form(double q1_l, double e1, double q_mu, double e_mu, const SystemParams& p) {
  const double r = p.q * (q1_l * (1.0 - binary_entropy(e1)) -
                          q_mu * p.f_ec * binary_entropy(std::clamp(e_mu, 0.0, 1.0)));
  return r < 0.0 ? Clamped{0.0, true} : Clamped{r, false};
}

}  // namespace

Clamped decoy_rate(double q1_l, double eps1_u, double q_mu, double eps_mu, const SystemParams& p) {
  return rate_form(q1_l, std::clamp(eps1_u, 0.0, 0.5), q_mu, eps_mu, p);
}

Clamped wm_decoy_rate(double q1_l, double q_mu, double delta_z_mu, double delta_x_nu,
                      double delta_x_vac, double q_nu, double q_vac, const SystemParams& p,
                      const DecoyConfig& cfg) {
  const Clamped dx1 = eps1_upper(delta_x_nu, q_nu, delta_x_vac, q_vac, q1_l, cfg);
  Clamped r = rate_form(q1_l, dx1.value, q_mu, delta_z_mu, p);
  r.clamped = r.clamped || dx1.clamped;
  return r;
}

IdealizedRate idealized_rate(double delta_x, double delta_z) {
  if (!(delta_x >= 0.0 && delta_x <= 0.5 && delta_z >= 0.0 && delta_z <= 0.5))
    throw std::domain_error("idealized_rate: error rates must lie in [0, 1/2]");
  IdealizedRate r;
  r.smoothed = std::max(0.0, 1.0 - 2.0 * binary_entropy(0.5 * (delta_x + delta_z)));
  r.split = std::max(0.0, 1.0 - binary_entropy(delta_x) - binary_entropy(delta_z));
  return r;
}

double honest_error_rate(const SystemParams& p, double gamma) {
  const double q = transmittance(p, gamma);
  if (!(q > 0.0)) return 0.5;
  return p.e_d + (0.5 - p.e_d) * (p.y0 / q);
}

DecoyPoint decoy_point(const SystemParams& p, const DecoyConfig& cfg, double delta_wm) {
  p.validate();
  cfg.validate();
  DecoyPoint pt;
  pt.distance_km = p.distance_km;
  pt.q_mu = transmittance(p, cfg.mu);
  pt.q_nu = transmittance(p, cfg.nu);
  pt.q_vac = transmittance(p, 0.0);
  pt.eps_mu = honest_error_rate(p, cfg.mu);
  pt.eps_nu = honest_error_rate(p, cfg.nu);
  pt.delta_z_mu = pt.eps_mu + (1.0 - p.y0 / pt.q_mu) * delta_wm;
  pt.delta_x_nu = pt.eps_nu + (1.0 - p.y0 / pt.q_nu) * delta_wm;
  pt.q1_l = q1_lower(pt.q_mu, pt.q_nu, pt.q_vac, cfg);
  pt.q1_exact = exact_single_photon_gain(p, cfg.mu);
  if (pt.q1_l.value > 0.0) {
    pt.eps1_u = eps1_upper(pt.eps_nu, pt.q_nu, 0.5, pt.q_vac, pt.q1_l.value, cfg);
    pt.delta_x1_u = eps1_upper(pt.delta_x_nu, pt.q_nu, 0.5, pt.q_vac, pt.q1_l.value, cfg);
    pt.rate_bb84 = decoy_rate(pt.q1_l.value, pt.eps1_u.value, pt.q_mu, pt.eps_mu, p);
    pt.rate_wm = wm_decoy_rate(pt.q1_l.value, pt.q_mu, pt.delta_z_mu, pt.delta_x_nu, 0.5, pt.q_nu,
                               pt.q_vac, p, cfg);
  } else {
    pt.eps1_u = pt.delta_x1_u = {0.5, true};
    pt.rate_bb84 = pt.rate_wm = {0.0, true};
  }
  return pt;
}

IntensityChoice optimize_intensities(const SystemParams& p, const std::vector<double>& mu_grid,
                                     const std::vector<double>& nu_grid, double delta_wm, bool wm) {
  IntensityChoice best;
  bool found = false;
  for (double mu : mu_grid) {
    for (double nu : nu_grid) {
      if (!(nu > 0.0 && nu < mu)) continue;
      const DecoyConfig cfg{mu, nu};
      const DecoyPoint pt = decoy_point(p, cfg, delta_wm);
      const double r = wm ? pt.rate_wm.value : pt.rate_bb84.value;
      if (!found || r > best.rate) {
        best = {cfg, r};
        found = true;
      }
    }
  }
  if (!found) throw std::invalid_argument("optimize_intensities: no grid point with 0 < nu < mu");
  return best;
}

}  // namespace wmqkd
