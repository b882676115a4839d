#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wmqkd/qubit.hpp"
#include "wmqkd/signal_log.hpp"
#include "wmqkd/weak_measurement.hpp"

namespace wmqkd {

// A condition cell cannot be estimated (too few readings, all-dark class, ...).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Running mean and sum of squared deviations; merge() is the pairwise
// parallel-variance combination.
struct CellStats {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x);
  static CellStats merge(const CellStats& a, const CellStats& b);
  static CellStats from_moments(std::size_t count, double mean, double variance);
  double variance() const;             // n - 1 denominator
  double population_variance() const;  // n denominator
};

// Conditions are indexed by (s_A, b, h) read as a 3-bit number.
constexpr std::size_t kCellCount = 8;
constexpr std::size_t cell_index(int bit, Basis b, Family h) {
  return 4u * static_cast<std::size_t>(bit) + 2u * static_cast<std::size_t>(b) +
         static_cast<std::size_t>(h);
}
std::string cell_name(std::size_t index);  // e.g. "0Z+"

using CellArray = std::array<CellStats, kCellCount>;
using MeanArray = std::array<double, kCellCount>;

MeanArray means_of(const CellArray& cells);

// Folds the clicked entries of one intensity class into the 8 cells. Works in
// fixed-size blocks merged in order, so the result does not depend on threads.
CellArray accumulate_cells(const SignalLog& log, IntensityClass cls, unsigned workers = 1);

// As accumulate_cells, but throws EstimationError if a cell has fewer than two readings.
CellArray condition_and_average(const SignalLog& log, IntensityClass cls = IntensityClass::Signal,
                                unsigned workers = 1);

struct Couplings {
  double g_plus = 0.0;
  double g_minus = 0.0;
};

Couplings estimate_couplings(const MeanArray& means, double dark_fraction);

struct BlochEstimates {
  double r_x_plus = 0.0;   // r_x of the |+> image
  double r_x_minus = 0.0;  // r_x of the |-> image
  double r_z_zero = 0.0;
  double r_z_one = 0.0;
  double delta_x = 0.0;
  double delta_z = 0.0;
  double delta_b = 0.0;
};

// Expectations are mu / ((1 - d) g): the photon-click part of each cell mean,
// so the result excludes dark clicks until corrected_error_rate adds them.
BlochEstimates estimate_error_rates(const MeanArray& means, const Couplings& g,
                                    double dark_fraction = 0.0);

double dark_count_fraction(double q_gamma, double q_vac);
double corrected_error_rate(double delta_tilde, double d_gamma);
double compute_qber(double delta_b, double delta_wm, double d_mu);

struct EstimationThresholds {
  double delta_sec = 0.11;
  double g_sec = 0.06;
  double sigma_sec_sq = 1.000625;  // physical units
  double variance_equality_significance = 0.01;
  double bound_significance = 0.01;
  double sigma_phi_upper = 0.0;  // known bound on Bob's angle noise

  // g_sec = 1.2 g and sigma_sec^2 = sigma_MD^2 + g^2/4 for the given pointer.
  static EstimationThresholds for_pointer(const PointerConfig& p);
  void validate() const;
};

struct Verdicts {
  bool nonnegative = true;
  bool coupling_bound = true;
  bool variance_bound = true;
  bool variance_equality = true;
  double max_variance_ratio = 1.0;     // largest pairwise sigma_a^2 / sigma_a'^2
  double min_equality_p_value = 1.0;   // smallest two-sided F-test p over the 28 pairs
  double min_bound_p_value = 1.0;      // smallest chi-square p over the 8 cells

  bool all() const { return nonnegative && coupling_bound && variance_bound && variance_equality; }
};

struct ClassEstimate {
  IntensityClass intensity = IntensityClass::Signal;
  std::size_t sent = 0;
  std::size_t clicks = 0;
  double gain = 0.0;
  double dark_fraction = 0.0;
  CellArray cells{};
  Couplings couplings;
  BlochEstimates raw;  // before dark-count correction
  double delta_x = 0.0;
  double delta_z = 0.0;
  double delta_b = 0.0;
  double se_g_plus = 0.0;
  double se_g_minus = 0.0;
  double se_delta_x = 0.0;  // of the raw estimates
  double se_delta_z = 0.0;
  double se_delta_b = 0.0;
};

struct EstimationReport {
  ClassEstimate signal;
  std::optional<ClassEstimate> decoy;
  double vacuum_gain = 0.0;
  std::size_t vacuum_sent = 0;
  std::size_t vacuum_clicks = 0;
  double pooled_variance = 0.0;
  double sigma_md_sq_lower = 0.0;
  double delta_wm = 0.0;
  double qber = 0.0;
  double se_qber = 0.0;
  double variance_ratio_x_over_z = 1.0;  // pooled X-cell over pooled Z-cell variance
  Verdicts verdicts;
  bool qber_exceeded = false;
  bool abort = false;

  std::vector<std::pair<std::string, double>> fields() const;
  std::string to_text() const;
};

// Cells and gain for one intensity class, from a log or from a model.
struct ClassData {
  CellArray cells{};
  std::size_t sent = 0;
  std::size_t clicks = 0;
  double gain = 0.0;
};

struct EstimationOptions {
  // Used when the log has no vacuum pulses.
  double known_vacuum_yield = 0.0;
  unsigned workers = 1;
};

Verdicts wm_verification(const EstimationReport& report, const EstimationThresholds& th);

EstimationReport estimate_from_classes(const ClassData& signal, const std::optional<ClassData>& decoy,
                                       double vacuum_gain, std::size_t vacuum_sent,
                                       std::size_t vacuum_clicks, const EstimationThresholds& th);

// The full estimation subroutine on a log (no-clicks may still be present;
// they feed the gains).
EstimationReport estimate(const SignalLog& log, const EstimationThresholds& th,
                          const EstimationOptions& opts = {});

}  // namespace wmqkd
