#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wmqkd/adversary.hpp"
#include "wmqkd/rng.hpp"

using namespace wmqkd;

TEST_CASE("strategy names round-trip") {
  for (Strategy s : {Strategy::None, Strategy::InterceptResend, Strategy::FakeWmStrategy1,
                     Strategy::FakeWmStrategy2, Strategy::BiasedObservables})
    CHECK(parse_strategy(to_string(s)) == s);
  CHECK_THROWS_AS(parse_strategy("pns"), std::invalid_argument);
}

TEST_CASE("attack config validation") {
  AttackConfig a;
  CHECK_NOTHROW(a.validate());
  a.p_basis = 0.4;
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  a = AttackConfig{};
  a.p_h = 1.01;
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  a = AttackConfig{};
  a.strategy = Strategy::FakeWmStrategy1;
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  a.alpha = 1.0;
  CHECK_NOTHROW(a.validate());
  a = AttackConfig{};
  a.strategy = Strategy::FakeWmStrategy2;
  a.alpha_x = 1.0;
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  a.alpha_z = 1.0;
  CHECK_NOTHROW(a.validate());

  PointerConfig bob{0.05, 2.0, 0.0, 0.0};
  CHECK(AttackConfig{}.eve_pointer(bob).g == 0.05);
  CHECK(AttackConfig{}.eve_pointer(bob).sigma_md == 2.0);
  AttackConfig clumsy;
  clumsy.g_eve = 0.2;
  CHECK(clumsy.eve_pointer(bob).g == 0.2);
}

TEST_CASE("intercept-resend with perfect basis knowledge") {
  AttackConfig cfg;
  cfg.strategy = Strategy::InterceptResend;
  cfg.p_basis = 1.0;
  CounterRng rng(1, 2);
  for (int i = 0; i < 1000; ++i) {
    const BlochState s = eve_intercept_resend(Basis::Z, 0, cfg, rng);
    CHECK(s.z == 1.0);
    CHECK(s.x == 0.0);
  }
}

TEST_CASE("intercept-resend error rates") {
  for (double pb : {0.5, 0.9}) {
    AttackConfig cfg;
    cfg.strategy = Strategy::InterceptResend;
    cfg.p_basis = pb;
    CounterRng rng(42, static_cast<std::uint64_t>(pb * 100));
    const int n = 400000;
    double err = 0.0, zsum = 0.0;
    for (int i = 0; i < n; ++i) {
      const BlochState s = eve_intercept_resend(Basis::Z, 0, cfg, rng);
      zsum += s.z;
      err += bernoulli(rng, bit_error_probability(s, Basis::Z, 0)) ? 1.0 : 0.0;
    }
    const double expected = 0.5 * (1.0 - pb);
    const double se = std::sqrt(expected * (1 - expected) / n);
    CHECK(std::abs(err / n - expected) < 3 * se);
    if (pb == 0.5) CHECK(std::abs(zsum / n - 0.5) < 3 * std::sqrt(0.75 / n));
  }
}

TEST_CASE("fake pointer rule") {
  AttackConfig s1;
  s1.strategy = Strategy::FakeWmStrategy1;
  s1.alpha = 1.0;
  CHECK(fake_pointer(0.7, -0.2, Family::Plus, Basis::Z, s1, 0.05) == doctest::Approx(0.7));
  CHECK(fake_pointer(0.7, -0.2, Family::Minus, Basis::Z, s1, 0.05) == doctest::Approx(-0.2));
  s1.alpha = 0.0;
  CHECK(fake_pointer(0.7, -0.2, Family::Plus, Basis::Z, s1, 0.05) == 0.025);

  AttackConfig s2;
  s2.strategy = Strategy::FakeWmStrategy2;
  s2.alpha_x = 2.0;
  s2.alpha_z = 0.5;
  CHECK(fake_pointer(1.0, 0.0, Family::Plus, Basis::X, s2, 0.0) == 2.0);
  CHECK(fake_pointer(1.0, 0.0, Family::Plus, Basis::Z, s2, 0.0) == 0.5);
  CHECK_THROWS_AS(fake_pointer(1.0, 0.0, Family::Plus, Basis::Z, AttackConfig{}, 0.0), std::invalid_argument);
}

TEST_CASE("strategy-1 faked mean with perfect observable knowledge") {
  AttackConfig cfg;
  cfg.strategy = Strategy::FakeWmStrategy1;
  cfg.alpha = 1.2;
  cfg.p_h = 1.0;
  const PointerConfig eve{0.05, 1.0, 0.0, 0.0};
  CounterRng rng(8, 8);
  const int n = 1'000'000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const EveReadings er = eve_weak_readings(bb84_state(Basis::Z, 0), eve, true, rng);
    const Family guess = guess_observable(Family::Plus, cfg.p_h, rng);
    const double v = fake_pointer(er.delta_plus, er.delta_minus, guess, Basis::Z, cfg, eve.g);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - eve.g * (0.5 + 1.2 / (2.0 * std::numbers::sqrt2))) < 4 * se);
}

TEST_CASE("measurement order only matters at second order") {
  const PointerConfig eve{0.05, 1.0, 0.0, 0.0};
  const BlochState s = bb84_state(Basis::X, 0);
  // Second-measured observable sees the first one's dephasing: shift ~ g^2/8 sigma^2.
  const double direct = expectation(Projector::h_minus(), s);
  const double after = expectation(Projector::h_minus(), dephased_state(s, Projector::h_plus(), eve));
  CHECK(std::abs(direct - after) < eve.g * eve.g / 8.0);
  CHECK(std::abs(direct - after) > 0.0);

  CounterRng r1(3, 0), r2(3, 1);
  const int n = 400000;
  double a = 0.0, b = 0.0;
  for (int i = 0; i < n; ++i) {
    a += eve_weak_readings(s, eve, true, r1).delta_plus;
    b += eve_weak_readings(s, eve, false, r2).delta_plus;
  }
  CHECK(std::abs(a / n - b / n) < 4 * std::sqrt(2.0 / n));
}

TEST_CASE("strategy-1 predictions") {
  CHECK(strategy1_predicted_qber(1.0, 1.0) == 0.0);
  CHECK(strategy1_predicted_qber(0.0, 0.7) == 0.5);
  CHECK(strategy1_predicted_qber(1.0, 0.9) == doctest::Approx(0.05));
  CHECK(strategy1_predicted_variance_ratio(0.9) == doctest::Approx(1.5625));
  CHECK(strategy1_predicted_variance_ratio(1.0) == 1.0);
  CHECK(std::isinf(strategy1_predicted_variance_ratio(0.5)));
}

TEST_CASE("strategy-2 bound and crossover") {
  CHECK(strategy2_qber_lower_bound(0.5, 0.7, 1.0) == doctest::Approx(0.325));
  CHECK(strategy2_qber_lower_bound(1.0, 1.0, 1.0) == 0.0);
  CHECK_THROWS_AS(strategy2_qber_lower_bound(0.5, 0.5, 0.9), std::invalid_argument);
  const double x = strategy2_crossover_sigma_ratio(0.35, 0.11);
  CHECK(x == doctest::Approx(2.22857142857143).epsilon(1e-13));
  CHECK(strategy2_qber_lower_bound(0.5, 0.7, x) == doctest::Approx(0.11).epsilon(1e-13));
  CHECK(x > 2.0);
  const PointerConfig eve{0.05, 1.0, 0.0, 0.0};
  CHECK(strategy2_saturating_alpha(1.0 + 0.25 * 0.05 * 0.05, eve) == doctest::Approx(1.0));
  CHECK(strategy2_saturating_alpha(4.0 * (1.0 + 0.25 * 0.05 * 0.05), eve) == doctest::Approx(2.0));
}

TEST_CASE("optimal bias angles") {
  const BiasAngles dep = optimal_bias_angles(0.8, 0.0, 0.0, 0.8, 0.9);
  CHECK(dep.phi == 0.0);
  CHECK(dep.phi_prime == 0.0);
  CHECK(dep.preferred);

  const BiasAngles none = optimal_bias_angles(0.0, 0.0, 0.0, 0.0, 0.8);
  CHECK_FALSE(none.preferred);
  CHECK(none.phi == 0.0);
  CHECK(none.phi_prime == 0.0);

  // p_H = 1/2: both reduce to atan((r_x+ - r_z0)/(r_x+ + r_z0)).
  const BiasAngles half = optimal_bias_angles(0.9, -0.1, 0.2, 0.7, 0.5);
  CHECK(half.phi == doctest::Approx(std::atan((0.9 - 0.7) / (0.9 + 0.7))));
  CHECK(half.phi_prime == doctest::Approx(half.phi));

  // Rotation channel, full knowledge: brute-force grid minimizer of the apparent error.
  const double th = 0.1;
  const double rxp = std::cos(th), rzp = -std::sin(th), rx0 = std::sin(th), rz0 = std::cos(th);
  const BiasAngles best = optimal_bias_angles(rxp, rzp, rx0, rz0, 1.0);
  double best_val = 1e9, bp = 0.0, bq = 0.0;
  for (int i = -800; i <= 800; ++i) {
    for (int j = -800; j <= 800; ++j) {
      const double v = biased_error_rates(rxp, rzp, rx0, rz0, 1.0, 1e-3 * i, 1e-3 * j).average();
      if (v < best_val) {
        best_val = v;
        bp = 1e-3 * i;
        bq = 1e-3 * j;
      }
    }
  }
  CHECK(std::abs(best.phi - bp) <= 1e-3);
  CHECK(std::abs(best.phi_prime - bq) <= 1e-3);
  CHECK_THROWS_AS(optimal_bias_angles(1, 0, 0, 1, 0.3), std::invalid_argument);
}

TEST_CASE("biased estimates") {
  const ErrorPair z = biased_estimates(0.8, 0.6, 0.0);
  CHECK(z.delta_x == doctest::Approx(0.1));
  CHECK(z.delta_z == doctest::Approx(0.2));

  const ErrorPair neg = biased_estimates(1.0, 1.0, std::numbers::pi / 4);
  CHECK(neg.delta_x == doctest::Approx((1.0 - std::numbers::sqrt2) / 2.0));
  CHECK(neg.delta_x < 0.0);

  const ErrorPair e = biased_estimates(0.8, 0.8, 0.1);
  CHECK(e.delta_x == doctest::Approx(0.0620649672300584).epsilon(1e-13));
  CHECK(e.delta_z == doctest::Approx(0.1419317005475210).epsilon(1e-13));
  CHECK(e.average() == doctest::Approx(0.1019983338887897).epsilon(1e-13));
  CHECK(e.average() >= 0.1);
  CHECK_THROWS_AS(biased_estimates(0.8, 0.8, 4.0), std::invalid_argument);
}

TEST_CASE("biasing never beats the unbiased rate on depolarizing channels") {
  for (double err : {0.02, 0.08, 0.11}) {
    const double r = 1.0 - 2.0 * err;
    const double truth = 1.0 - 2.0 * binary_entropy(err);
    for (int i = -156; i <= 156; ++i) {
      const double phi = 0.01 * i;
      const double db = biased_estimates(r, r, phi).average();
      const double rate = 1.0 - 2.0 * binary_entropy(db);
      if (i == 0) CHECK(std::abs(rate - truth) <= 1e-12);
      else CHECK(rate < truth);
    }
  }
}

TEST_CASE("general biased rates reduce to the symmetric formula") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int i = 0; i < 200; ++i) {
    const double r = 0.5 + 0.4 * std::abs(u(rng));
    const double phi = u(rng);
    const ErrorPair a = biased_estimates(r, r, phi);
    const ErrorPair b = biased_error_rates(r, 0.0, 0.0, r, 0.5 + 0.8 * std::abs(u(rng)), phi, phi);
    CHECK(a.delta_x == doctest::Approx(b.delta_x).epsilon(1e-12));
    CHECK(a.delta_z == doctest::Approx(b.delta_z).epsilon(1e-12));
  }
}
