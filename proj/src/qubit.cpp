#include "wmqkd/qubit.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wmqkd {

double BlochState::norm() const { return std::sqrt(x * x + y * y + z * z); }

bool BlochState::is_valid(double tol) const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) &&
         x * x + y * y + z * z <= 1.0 + tol;
}

BlochState operator+(const BlochState& a, const BlochState& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}

BlochState operator*(double k, const BlochState& s) { return {k * s.x, k * s.y, k * s.z}; }

BlochState bb84_state(Basis basis, int bit) {
  if (bit != 0 && bit != 1) throw std::invalid_argument("bb84_state: bit must be 0 or 1");
  const double sign = bit == 0 ? 1.0 : -1.0;
  return basis == Basis::Z ? BlochState{0.0, 0.0, sign} : BlochState{sign, 0.0, 0.0};
}

double Projector::total_angle() const { return std::numbers::pi / 4.0 + bias; }

BlochState Projector::axis() const {
  const double a = total_angle();
  const double sx = family == Family::Plus ? std::sin(a) : -std::sin(a);
  return {sx, 0.0, std::cos(a)};
}

double expectation(const Projector& p, const BlochState& s) {
  return 0.5 * (1.0 + p.axis().dot(s));
}

double mean_expectation(const Projector& p, const BlochState& s, double sigma_phi) {
  if (sigma_phi < 0.0) throw std::invalid_argument("mean_expectation: sigma_phi < 0");
  // E[sin(a + e)] = sin(a) exp(-s^2/2) for e ~ N(0, s^2); same for cos.
  const double shrink = std::exp(-0.5 * sigma_phi * sigma_phi);
  return 0.5 * (1.0 + shrink * p.axis().dot(s));
}

void ChannelModel::validate() const {
  if (!(depolarizing_prob >= 0.0 && depolarizing_prob <= 1.0))
    throw std::invalid_argument("channel.depolarizing_prob must lie in [0, 1]");
  if (!std::isfinite(rotation_theta))
    throw std::invalid_argument("channel.rotation_theta must be finite");
}

BlochState apply_channel(const ChannelModel& c, const BlochState& s) {
  const double ct = std::cos(c.rotation_theta);
  const double st = std::sin(c.rotation_theta);
  const double k = 1.0 - c.depolarizing_prob;
  return {k * (s.x * ct + s.z * st), k * s.y, k * (-s.x * st + s.z * ct)};
}

double rotation_for_error_rate(double e) {
  if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("rotation_for_error_rate: e outside [0, 1]");
  return 2.0 * std::asin(std::sqrt(e));
}

double bit_error_probability(const BlochState& s, Basis basis, int bit) {
  return 0.5 * (1.0 - s.dot(bb84_state(basis, bit)));
}

double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("binary_entropy: argument " + std::to_string(x) + " outside [0, 1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

}  // namespace wmqkd
