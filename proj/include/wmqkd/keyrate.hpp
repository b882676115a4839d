#pragma once

#include <vector>

namespace wmqkd {

struct DecoyConfig {
  double mu = 0.48;
  double nu = 0.05;

  void validate() const;
};

struct SystemParams {
  double eta_d = 0.145;
  double y0 = 6e-6;
  double loss_db_per_km = 0.2;
  double distance_km = 0.0;
  double f_ec = 1.22;
  double e_d = 0.0;
  double q = 0.5;

  // Lossless, dark-count-free, noiseless detector.
  static SystemParams ideal();
  // eta = eta_d 10^(-loss L / 10)
  double channel_efficiency() const;
  void validate() const;
};

// A bound or rate together with whether clamping into its domain changed it.
struct Clamped {
  double value = 0.0;
  bool clamped = false;
};

// Q_gamma = Y0 + 1 - exp(-eta gamma)
double transmittance(const SystemParams& p, double gamma);

// Exact single-photon gain mu e^{-mu} (Y0 + eta) of the Poissonian model.
double exact_single_photon_gain(const SystemParams& p, double mu);

Clamped q1_lower(double q_mu, double q_nu, double q_vac, const DecoyConfig& cfg);

// Upper bound on the single-photon error rate, clamped to [0, 1/2].
Clamped eps1_upper(double eps_nu, double q_nu, double eps_vac, double q_vac, double q1_l,
                   const DecoyConfig& cfg);

Clamped decoy_rate(double q1_l, double eps1_u, double q_mu, double eps_mu, const SystemParams& p);

Clamped wm_decoy_rate(double q1_l, double q_mu, double delta_z_mu, double delta_x_nu,
                      double delta_x_vac, double q_nu, double q_vac, const SystemParams& p,
                      const DecoyConfig& cfg);

struct IdealizedRate {
  double smoothed = 0.0;  // max(1 - 2 H2((dx + dz)/2), 0)
  double split = 0.0;     // max(1 - H2(dx) - H2(dz), 0)
};

// Inputs must lie in [0, 1/2]; std::domain_error otherwise.
IdealizedRate idealized_rate(double delta_x, double delta_z);

// Error rate of an honest intensity class: intrinsic e_d plus half of the dark clicks.
double honest_error_rate(const SystemParams& p, double gamma);

struct DecoyPoint {
  double distance_km = 0.0;
  double q_mu = 0.0;
  double q_nu = 0.0;
  double q_vac = 0.0;
  double eps_mu = 0.0;
  double eps_nu = 0.0;
  double delta_z_mu = 0.0;  // eps plus the weak-measurement debit
  double delta_x_nu = 0.0;
  Clamped q1_l;
  double q1_exact = 0.0;
  Clamped eps1_u;
  Clamped delta_x1_u;
  Clamped rate_bb84;
  Clamped rate_wm;
};

// Both protocols on the honest Poissonian model at p.distance_km. delta_wm is
// the weak-measurement error, weighted by the non-dark fraction of each class.
DecoyPoint decoy_point(const SystemParams& p, const DecoyConfig& cfg, double delta_wm);

struct IntensityChoice {
  DecoyConfig cfg;
  double rate = 0.0;
};

// Grid search over (mu, nu) with nu < mu, maximizing the chosen protocol's rate.
IntensityChoice optimize_intensities(const SystemParams& p, const std::vector<double>& mu_grid,
                                     const std::vector<double>& nu_grid, double delta_wm, bool wm);

}  // namespace wmqkd
