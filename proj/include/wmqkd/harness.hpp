#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wmqkd/adversary.hpp"
#include "wmqkd/estimation.hpp"
#include "wmqkd/keyrate.hpp"
#include "wmqkd/qubit.hpp"
#include "wmqkd/signal_log.hpp"
#include "wmqkd/weak_measurement.hpp"

namespace wmqkd {

enum class SourceKind { SinglePhoton, WeakCoherent };

struct IntensityMix {
  double signal = 1.0;
  double decoy = 0.0;
  double vacuum = 0.0;

  void validate() const;
  double probability(IntensityClass c) const;
};

// Explicitly configured thresholds; anything unset follows the pointer.
struct ThresholdOverrides {
  std::optional<double> delta_sec;
  std::optional<double> g_sec;
  std::optional<double> sigma_sec_sq;
  std::optional<double> variance_equality_significance;
  std::optional<double> bound_significance;
  std::optional<double> sigma_phi_upper;
};

struct ProtocolConfig {
  std::size_t n_signals = 1'000'000;
  PointerConfig pointer;
  ChannelModel channel;
  AttackConfig attack;
  SystemParams system = SystemParams::ideal();
  DecoyConfig decoy;
  IntensityMix mix;
  ThresholdOverrides thresholds;
  std::uint64_t seed = 1;
  SourceKind source = SourceKind::SinglePhoton;
  Basis strong_basis = Basis::Z;  // basis of Bob's final strong measurement
  unsigned workers = 0;           // 0 means one per hardware thread

  void validate() const;
  EstimationThresholds effective_thresholds() const;
  // The configured channel followed by the intrinsic-error rotation for system.e_d.
  ChannelModel effective_channel() const;
  // Attack with strategy-2 amplifications filled in when left unset.
  AttackConfig effective_attack() const;
  unsigned effective_workers() const;
  double intensity(IntensityClass c) const;
  // Click probabilities for a pulse of the given class.
  double photon_click_probability(IntensityClass c) const;
  double dark_click_probability(IntensityClass c) const;
};

// Exact bit-error probability of the state reaching Bob's strong measurement,
// in Alice's basis, averaged over signal-intensity clicks (dark clicks count 1/2).
struct GroundTruth {
  double delta_x = 0.0;
  double delta_z = 0.0;
  double delta_b = 0.0;
};

enum class KeyRateKind { Idealized, WmDecoy };

struct StepTimings {
  double simulate_s = 0.0;
  double estimate_s = 0.0;
  double key_rate_s = 0.0;
};

struct RunResult {
  EstimationReport report;
  std::size_t sifted_key_length = 0;
  std::size_t sifted_errors = 0;
  double sifted_error_rate = 0.0;
  GroundTruth truth;
  double key_rate = 0.0;
  KeyRateKind key_rate_kind = KeyRateKind::Idealized;
  bool key_rate_clamped = false;
  bool abort = false;
  bool attack_active = false;
  bool undetected_attack = false;  // no abort although the true delta_b exceeds delta_sec
  StepTimings timings;

  std::vector<std::pair<std::string, double>> fields(bool with_timings = false) const;
  std::string to_text(bool with_timings = false) const;
};

struct Simulation {
  SignalLog log;
  GroundTruth truth;
  std::size_t sifted_key_length = 0;
  std::size_t sifted_errors = 0;
};

// Generates the signal log. Deterministic in (config, seed) for any worker count.
Simulation simulate(const ProtocolConfig& cfg);

// Estimation report and key rate for an already simulated log.
RunResult finish_run(const ProtocolConfig& cfg, const Simulation& sim);

RunResult run_protocol(const ProtocolConfig& cfg);

// Exact expected cell statistics at the configured signal count, without sampling.
RunResult run_analytic(const ProtocolConfig& cfg);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const;
  std::size_t column(std::string_view name) const;  // throws if absent
};

enum class SweepMode { Analytic, MonteCarlo };

// Sets a numeric config field by dotted path such as "pointer.g" or
// "system.distance_km". Throws std::invalid_argument on an unknown path.
void set_parameter(ProtocolConfig& cfg, std::string_view path, double value);
std::vector<std::string> sweep_axes();

Table sweep(const ProtocolConfig& base, std::string_view axis, const std::vector<double>& values,
            SweepMode mode);

// Rate against weak-measurement strength, channel errors 0, 2, 5 and 8 %.
Table figure3();
// Biased-observable rates against phi at depolarizing error rates 8 and 11 %.
Table figure5();
// Decoy-state rates of both protocols against distance.
Table figure6();

SystemParams figure6_system();
DecoyConfig figure6_decoy();
constexpr double kFigure6WeakRatio = 0.05;

}  // namespace wmqkd
