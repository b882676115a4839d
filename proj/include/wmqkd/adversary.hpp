#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "wmqkd/qubit.hpp"
#include "wmqkd/rng.hpp"
#include "wmqkd/weak_measurement.hpp"

namespace wmqkd {

enum class Strategy {
  None,
  InterceptResend,
  FakeWmStrategy1,
  FakeWmStrategy2,
  BiasedObservables,
};

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct AttackConfig {
  Strategy strategy = Strategy::None;
  double p_basis = 0.5;
  double p_h = 0.5;
  std::optional<double> alpha;    // strategy 1
  std::optional<double> alpha_x;  // strategy 2; unset means variance-saturating
  std::optional<double> alpha_z;
  std::optional<double> g_eve;      // unset means Bob's g
  std::optional<double> sigma_eve;  // unset means Bob's sigma_md
  double phi = 0.0;
  double phi_prime = 0.0;
  bool plus_first = true;  // order of Eve's two weak measurements

  void validate() const;
  PointerConfig eve_pointer(const PointerConfig& bob) const;
};

template <class Urbg>
Basis guess_basis(Basis actual, double p_basis, Urbg& rng) {
  return bernoulli(rng, p_basis) ? actual : other(actual);
}

template <class Urbg>
Family guess_observable(Family actual, double p_h, Urbg& rng) {
  return bernoulli(rng, p_h) ? actual : other(actual);
}

struct InterceptOutcome {
  BlochState resent;
  Basis guessed_basis = Basis::Z;
  int outcome = 0;
};

// Eve guesses the basis, measures the arriving state strongly in it and
// re-emits the eigenstate she saw.
template <class Urbg>
InterceptOutcome intercept_resend(Basis true_basis, const BlochState& arriving, double p_basis,
                                  Urbg& rng) {
  const Basis guessed = guess_basis(true_basis, p_basis, rng);
  const int outcome = bernoulli(rng, bit_error_probability(arriving, guessed, 0)) ? 1 : 0;
  return {bb84_state(guessed, outcome), guessed, outcome};
}

template <class Urbg>
BlochState eve_intercept_resend(Basis true_basis, int true_bit, const AttackConfig& cfg, Urbg& rng) {
  return intercept_resend(true_basis, bb84_state(true_basis, true_bit), cfg.p_basis, rng).resent;
}

struct EveReadings {
  double delta_plus = 0.0;
  double delta_minus = 0.0;
  BlochState posterior;
};

// Eve weakly measures both H+ and H- in sequence on the same signal.
template <class Urbg>
EveReadings eve_weak_readings(const BlochState& s, const PointerConfig& eve, bool plus_first,
                              Urbg& rng) {
  const Projector first = Projector::h(plus_first ? Family::Plus : Family::Minus);
  const Projector second = Projector::h(plus_first ? Family::Minus : Family::Plus);
  const PointerSample a = sample_weak_measurement(s, first, eve, rng);
  const PointerSample b = sample_weak_measurement(a.posterior, second, eve, rng);
  return plus_first ? EveReadings{a.value, b.value, b.posterior}
                    : EveReadings{b.value, a.value, b.posterior};
}

// g_eve/2 + alpha (Delta - g_eve/2), with Delta picked by Eve's observable guess
// and alpha by strategy (and, for strategy 2, by her basis guess).
double fake_pointer(double delta_plus, double delta_minus, Family guessed_observable,
                    Basis guessed_basis, const AttackConfig& cfg, double g_eve);

double strategy1_predicted_qber(double alpha, double p_h);
double strategy1_predicted_variance_ratio(double p_h);

double strategy2_qber_lower_bound(double p_basis, double p_h, double sigma_ratio);
// sigma_sec/sigma_MD at which the strategy-2 bound reaches delta_sec - delta_wm.
double strategy2_crossover_sigma_ratio(double p_product, double delta_sec, double delta_wm = 0.0);
// Largest alpha keeping every fake-reading variance at or below sigma_sec_sq.
double strategy2_saturating_alpha(double sigma_sec_sq, const PointerConfig& eve);

struct BiasAngles {
  double phi = 0.0;
  double phi_prime = 0.0;
  bool preferred = true;  // false when the channel carries no information to bias on
};

// Bias pair maximizing Bob's apparent Bloch lengths. Inputs are the channel
// images of |+> (r_x_plus, r_z_plus) and |0> (r_x_0, r_z_0).
BiasAngles optimal_bias_angles(double r_x_plus, double r_z_plus, double r_x_0, double r_z_0,
                               double p_h);

struct ErrorPair {
  double delta_x = 0.0;
  double delta_z = 0.0;
  double average() const { return 0.5 * (delta_x + delta_z); }
};

// Same bias on both observables, depolarizing-type channel.
ErrorPair biased_estimates(double r_x_plus, double r_z_0, double phi);

// Apparent error rates when Eve biases Bob's observables with (phi, phi_prime)
// after guessing his choice with probability p_h. Unital channel assumed.
ErrorPair biased_error_rates(double r_x_plus, double r_z_plus, double r_x_0, double r_z_0,
                             double p_h, double phi, double phi_prime);

}  // namespace wmqkd
