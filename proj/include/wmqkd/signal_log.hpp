#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "wmqkd/qubit.hpp"

namespace wmqkd {

// Bob's strong-measurement result. Withheld marks a click whose bit value was
// discarded; it still counts as a detection.
enum class Outcome : std::int8_t { Zero = 0, One = 1, NoClick = -1, Withheld = 2 };

enum class IntensityClass : std::uint8_t { Signal = 0, Decoy = 1, Vacuum = 2 };

struct SignalRecord {
  int s_a = 0;
  Basis basis = Basis::Z;
  Family observable = Family::Plus;
  double omega = 0.0;
  Outcome s_b = Outcome::NoClick;
  IntensityClass intensity = IntensityClass::Signal;

  bool clicked() const { return s_b != Outcome::NoClick; }
};

class SignalLog {
 public:
  SignalLog() = default;
  explicit SignalLog(std::vector<SignalRecord> records) : records_(std::move(records)) {}

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const SignalRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<SignalRecord>& records() const { return records_; }
  void reserve(std::size_t n) { records_.reserve(n); }
  void push_back(const SignalRecord& r) { records_.push_back(r); }
  void append(const SignalLog& other);

  // Drops every entry whose s_B is a no-click.
  SignalLog without_no_clicks() const;
  // Replaces every 0/1 outcome with Withheld.
  SignalLog with_outcomes_withheld() const;

  // CSV with header s_A,b,h,omega,s_B,intensity_class. Throws
  // std::invalid_argument naming the line on malformed input.
  void write_csv(std::ostream& os) const;
  static SignalLog read_csv(std::istream& is);

 private:
  std::vector<SignalRecord> records_;
};

}  // namespace wmqkd
