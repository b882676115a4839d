#pragma once

#include <cstdint>

namespace wmqkd {

enum class Basis : std::uint8_t { Z = 0, X = 1 };

// Which member of the H family: + has axis (sin, 0, cos), - has axis (-sin, 0, cos).
enum class Family : std::uint8_t { Plus = 0, Minus = 1 };

inline Basis other(Basis b) { return b == Basis::Z ? Basis::X : Basis::Z; }
inline Family other(Family f) { return f == Family::Plus ? Family::Minus : Family::Plus; }

struct BlochState {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  bool is_valid(double tol = 1e-12) const;
  BlochState negated() const { return {-x, -y, -z}; }
  double dot(const BlochState& o) const { return x * o.x + y * o.y + z * o.z; }
};

BlochState operator+(const BlochState& a, const BlochState& b);
BlochState operator*(double k, const BlochState& s);

// Pure BB84 state. Throws std::invalid_argument unless bit is 0 or 1.
BlochState bb84_state(Basis basis, int bit);

struct Projector {
  Family family = Family::Plus;
  double bias = 0.0;  // phi; the total angle is pi/4 + bias

  static Projector h_plus(double bias = 0.0) { return {Family::Plus, bias}; }
  static Projector h_minus(double bias = 0.0) { return {Family::Minus, bias}; }
  static Projector h(Family f, double bias = 0.0) { return {f, bias}; }

  double total_angle() const;
  BlochState axis() const;
  Projector shifted(double dphi) const { return {family, bias + dphi}; }
};

double expectation(const Projector& p, const BlochState& s);

// Expectation averaged over a zero-mean Gaussian perturbation of the bias
// with standard deviation sigma_phi (closed form).
double mean_expectation(const Projector& p, const BlochState& s, double sigma_phi);

struct ChannelModel {
  double depolarizing_prob = 0.0;
  double rotation_theta = 0.0;

  void validate() const;
};

// Rotate in the X-Z plane (z axis toward x), then shrink by (1 - p).
BlochState apply_channel(const ChannelModel& c, const BlochState& s);

// Rotation angle whose action on BB84 states yields bit error rate e.
double rotation_for_error_rate(double e);

// Probability that a strong measurement of s along the BB84 state (basis, bit)
// returns the other bit.
double bit_error_probability(const BlochState& s, Basis basis, int bit);

double binary_entropy(double x);

}  // namespace wmqkd
