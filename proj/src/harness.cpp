#include "wmqkd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "wmqkd/format.hpp"
#include "wmqkd/rng.hpp"

namespace wmqkd {

void IntensityMix::validate() const {
  if (!(signal >= 0.0 && decoy >= 0.0 && vacuum >= 0.0))
    throw std::invalid_argument("intensity fractions must be >= 0");
  if (std::abs(signal + decoy + vacuum - 1.0) > 1e-9)
    throw std::invalid_argument("intensity fractions must sum to 1");
  if (!(signal > 0.0)) throw std::invalid_argument("intensity.signal must be > 0");
}

double IntensityMix::probability(IntensityClass c) const {
  switch (c) {
    case IntensityClass::Signal: return signal;
    case IntensityClass::Decoy: return decoy;
    case IntensityClass::Vacuum: return vacuum;
  }
  return 0.0;
}

void ProtocolConfig::validate() const {
  if (n_signals < 1) throw std::invalid_argument("protocol.n_signals must be >= 1");
  pointer.validate();
  channel.validate();
  attack.validate();
  system.validate();
  mix.validate();
  if (mix.decoy > 0.0) decoy.validate();
  if (!(decoy.mu > 0.0)) throw std::invalid_argument("decoy.mu must be > 0");
  if (source == SourceKind::SinglePhoton && mix.decoy > 0.0)
    throw std::invalid_argument("decoy pulses need source = weak_coherent");
  for (IntensityClass c : {IntensityClass::Signal, IntensityClass::Decoy, IntensityClass::Vacuum}) {
    if (photon_click_probability(c) + dark_click_probability(c) > 1.0 + 1e-15)
      throw std::invalid_argument("system: click probabilities exceed 1 (y0 too large)");
  }
  effective_thresholds().validate();
}

EstimationThresholds ProtocolConfig::effective_thresholds() const {
  EstimationThresholds th = EstimationThresholds::for_pointer(pointer);
  if (thresholds.delta_sec) th.delta_sec = *thresholds.delta_sec;
  if (thresholds.g_sec) th.g_sec = *thresholds.g_sec;
  if (thresholds.sigma_sec_sq) th.sigma_sec_sq = *thresholds.sigma_sec_sq;
  if (thresholds.variance_equality_significance)
    th.variance_equality_significance = *thresholds.variance_equality_significance;
  if (thresholds.bound_significance) th.bound_significance = *thresholds.bound_significance;
  if (thresholds.sigma_phi_upper) th.sigma_phi_upper = *thresholds.sigma_phi_upper;
  return th;
}

ChannelModel ProtocolConfig::effective_channel() const {
  ChannelModel c = channel;
  c.rotation_theta += rotation_for_error_rate(system.e_d);
  return c;
}

AttackConfig ProtocolConfig::effective_attack() const {
  AttackConfig a = attack;
  if (a.strategy == Strategy::FakeWmStrategy2 && !a.alpha_x) {
    const double alpha =
        strategy2_saturating_alpha(effective_thresholds().sigma_sec_sq, a.eve_pointer(pointer));
    a.alpha_x = alpha;
    a.alpha_z = alpha;
  }
  return a;
}

unsigned ProtocolConfig::effective_workers() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

double ProtocolConfig::intensity(IntensityClass c) const {
  switch (c) {
    case IntensityClass::Signal: return decoy.mu;
    case IntensityClass::Decoy: return decoy.nu;
    case IntensityClass::Vacuum: return 0.0;
  }
  return 0.0;
}

double ProtocolConfig::photon_click_probability(IntensityClass c) const {
  if (c == IntensityClass::Vacuum) return 0.0;
  const double eta = system.channel_efficiency();
  if (source == SourceKind::SinglePhoton) return eta;
  return 1.0 - std::exp(-eta * intensity(c));
}

double ProtocolConfig::dark_click_probability(IntensityClass) const { return system.y0; }

namespace {

constexpr std::size_t kBlock = 1u << 16;

IntensityClass draw_class(const IntensityMix& mix, double u) {
  if (u < mix.signal) return IntensityClass::Signal;
  if (u < mix.signal + mix.decoy) return IntensityClass::Decoy;
  return IntensityClass::Vacuum;
}

struct TruthSums {
  double err_x = 0.0;
  double err_z = 0.0;
  std::size_t n_x = 0;
  std::size_t n_z = 0;

  void add(Basis b, double err) {
    if (b == Basis::X) {
      err_x += err;
      ++n_x;
    } else {
      err_z += err;
      ++n_z;
    }
  }
  void merge(const TruthSums& o) {
    err_x += o.err_x;
    err_z += o.err_z;
    n_x += o.n_x;
    n_z += o.n_z;
  }
  GroundTruth finish() const {
    GroundTruth t;
    t.delta_x = n_x ? err_x / static_cast<double>(n_x) : 0.0;
    t.delta_z = n_z ? err_z / static_cast<double>(n_z) : 0.0;
    t.delta_b = 0.5 * (t.delta_x + t.delta_z);
    return t;
  }
};

struct BlockOutput {
  std::vector<SignalRecord> records;
  TruthSums truth;
  std::size_t sifted = 0;
  std::size_t sifted_errors = 0;
};

struct SignalContext {
  const ProtocolConfig& cfg;
  AttackConfig attack;
  ChannelModel channel;
  PointerConfig eve;
  std::array<double, 3> photon_p{};
  std::array<double, 3> dark_p{};
};

// One signal from source to Bob's strong measurement. The strong measurement
// is the last draw from the stream, so its basis never changes any reading.
void simulate_signal(const SignalContext& ctx, std::uint64_t index, BlockOutput& out) {
  const ProtocolConfig& cfg = ctx.cfg;
  CounterRng rng(cfg.seed, index);
  SignalRecord rec;
  rec.s_a = bernoulli(rng, 0.5) ? 1 : 0;
  rec.basis = bernoulli(rng, 0.5) ? Basis::X : Basis::Z;
  rec.observable = bernoulli(rng, 0.5) ? Family::Minus : Family::Plus;
  rec.intensity = draw_class(cfg.mix, uniform01(rng));
  const auto k = static_cast<std::size_t>(rec.intensity);

  const double u = uniform01(rng);
  const bool photon = u < ctx.photon_p[k];
  const bool dark = !photon && u < ctx.photon_p[k] + ctx.dark_p[k];

  double err = 0.5;
  if (!photon && !dark) {
    rec.s_b = Outcome::NoClick;
    rec.omega = std::nan("");
    out.records.push_back(rec);
    return;
  }
  if (dark) {
    rec.omega = cfg.pointer.sigma_md * standard_normal(rng);
    rec.s_b = bernoulli(rng, 0.5) ? Outcome::One : Outcome::Zero;
  } else {
    const BlochState s = apply_channel(ctx.channel, bb84_state(rec.basis, rec.s_a));
    const Projector bob = Projector::h(rec.observable);
    BlochState at_bob;
    switch (ctx.attack.strategy) {
      case Strategy::None: {
        const PointerSample ps = sample_weak_measurement(s, bob, cfg.pointer, rng);
        rec.omega = ps.value;
        at_bob = ps.posterior;
        break;
      }
      case Strategy::InterceptResend: {
        const InterceptOutcome io = intercept_resend(rec.basis, s, ctx.attack.p_basis, rng);
        const PointerSample ps = sample_weak_measurement(io.resent, bob, cfg.pointer, rng);
        rec.omega = ps.value;
        at_bob = ps.posterior;
        break;
      }
      case Strategy::BiasedObservables: {
        const Family guess = guess_observable(rec.observable, ctx.attack.p_h, rng);
        const double bias = guess == Family::Plus ? ctx.attack.phi : ctx.attack.phi_prime;
        const PointerSample ps = sample_weak_measurement(s, bob.shifted(bias), cfg.pointer, rng);
        rec.omega = ps.value;
        at_bob = ps.posterior;
        break;
      }
      case Strategy::FakeWmStrategy1: {
        const EveReadings er = eve_weak_readings(s, ctx.eve, ctx.attack.plus_first, rng);
        const Family guess = guess_observable(rec.observable, ctx.attack.p_h, rng);
        rec.omega = fake_pointer(er.delta_plus, er.delta_minus, guess, Basis::Z, ctx.attack, ctx.eve.g);
        const int o = bernoulli(rng, bit_error_probability(er.posterior, Basis::Z, 0)) ? 1 : 0;
        at_bob = bb84_state(Basis::Z, o);
        break;
      }
      case Strategy::FakeWmStrategy2: {
        const InterceptOutcome io = intercept_resend(rec.basis, s, ctx.attack.p_basis, rng);
        const EveReadings er = eve_weak_readings(io.resent, ctx.eve, ctx.attack.plus_first, rng);
        const Family guess = guess_observable(rec.observable, ctx.attack.p_h, rng);
        rec.omega = fake_pointer(er.delta_plus, er.delta_minus, guess, io.guessed_basis, ctx.attack,
                                 ctx.eve.g);
        at_bob = io.resent;
        break;
      }
    }
    err = bit_error_probability(at_bob, rec.basis, rec.s_a);
    const int o = bernoulli(rng, bit_error_probability(at_bob, cfg.strong_basis, 0)) ? 1 : 0;
    rec.s_b = o ? Outcome::One : Outcome::Zero;
  }

  if (rec.intensity == IntensityClass::Signal) {
    out.truth.add(rec.basis, err);
    if (rec.basis == cfg.strong_basis) {
      ++out.sifted;
      if (static_cast<int>(rec.s_b) != rec.s_a) ++out.sifted_errors;
    }
  }
  out.records.push_back(rec);
}

template <class Fn>
void parallel_blocks(std::size_t n_blocks, unsigned workers, Fn&& fn) {
  const unsigned n_threads =
      static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(workers, n_blocks)));
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t b = next++; b < n_blocks; b = next++) fn(b);
  };
  if (n_threads == 1) {
    loop();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(loop);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Simulation simulate(const ProtocolConfig& cfg) {
  cfg.validate();
  SignalContext ctx{cfg, cfg.effective_attack(), cfg.effective_channel(), {}, {}, {}};
  ctx.eve = ctx.attack.eve_pointer(cfg.pointer);
  for (IntensityClass c : {IntensityClass::Signal, IntensityClass::Decoy, IntensityClass::Vacuum}) {
    const auto k = static_cast<std::size_t>(c);
    ctx.photon_p[k] = cfg.photon_click_probability(c);
    ctx.dark_p[k] = cfg.dark_click_probability(c);
  }

  const std::size_t n_blocks = (cfg.n_signals + kBlock - 1) / kBlock;
  std::vector<BlockOutput> blocks(n_blocks);
  parallel_blocks(n_blocks, cfg.effective_workers(), [&](std::size_t b) {
    const std::size_t lo = b * kBlock;
    const std::size_t hi = std::min(cfg.n_signals, lo + kBlock);
    BlockOutput& out = blocks[b];
    out.records.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) simulate_signal(ctx, i, out);
  });

  Simulation sim;
  std::vector<SignalRecord> all;
  all.reserve(cfg.n_signals);
  TruthSums truth;
  for (auto& blk : blocks) {
    all.insert(all.end(), blk.records.begin(), blk.records.end());
    truth.merge(blk.truth);
    sim.sifted_key_length += blk.sifted;
    sim.sifted_errors += blk.sifted_errors;
  }
  sim.log = SignalLog(std::move(all));
  sim.truth = truth.finish();
  return sim;
}

namespace {

void fill_key_rate(const ProtocolConfig& cfg, RunResult& r) {
  r.abort = r.report.abort;
  r.attack_active = cfg.attack.strategy != Strategy::None;
  r.undetected_attack =
      r.attack_active && !r.abort && r.truth.delta_b > cfg.effective_thresholds().delta_sec;
  r.sifted_error_rate = r.sifted_key_length
                            ? static_cast<double>(r.sifted_errors) / static_cast<double>(r.sifted_key_length)
                            : 0.0;

  const EstimationReport& rep = r.report;
  const bool decoy_ready = cfg.source == SourceKind::WeakCoherent && rep.decoy.has_value() &&
                           rep.vacuum_sent > 0;
  r.key_rate_kind = decoy_ready ? KeyRateKind::WmDecoy : KeyRateKind::Idealized;
  if (r.abort) {
    r.key_rate = 0.0;
    return;
  }
  if (decoy_ready) {
    const ClassEstimate& s = rep.signal;
    const ClassEstimate& d = *rep.decoy;
    DecoyConfig dc = cfg.decoy;
    const Clamped q1 = q1_lower(s.gain, d.gain, rep.vacuum_gain, dc);
    if (q1.value <= 0.0) {
      r.key_rate = 0.0;
      r.key_rate_clamped = true;
      return;
    }
    const double dz_mu = s.delta_z + (1.0 - s.dark_fraction) * rep.delta_wm;
    const double dx_nu = d.delta_x + (1.0 - d.dark_fraction) * rep.delta_wm;
    const Clamped rate = wm_decoy_rate(q1.value, s.gain, std::clamp(dz_mu, 0.0, 0.5),
                                       std::clamp(dx_nu, 0.0, 0.5), 0.5, d.gain, rep.vacuum_gain,
                                       cfg.system, dc);
    r.key_rate = rate.value;
    r.key_rate_clamped = rate.clamped || q1.clamped;
  } else {
    const double q = std::clamp(rep.qber, 0.0, 0.5);
    r.key_rate_clamped = q != rep.qber;
    r.key_rate = idealized_rate(q, q).smoothed;
  }
}

}  // namespace

RunResult finish_run(const ProtocolConfig& cfg, const Simulation& sim) {
  RunResult r;
  auto t0 = std::chrono::steady_clock::now();
  EstimationOptions opts;
  opts.known_vacuum_yield = cfg.system.y0;
  opts.workers = cfg.effective_workers();
  r.report = estimate(sim.log, cfg.effective_thresholds(), opts);
  r.timings.estimate_s = seconds_since(t0);
  r.truth = sim.truth;
  r.sifted_key_length = sim.sifted_key_length;
  r.sifted_errors = sim.sifted_errors;
  t0 = std::chrono::steady_clock::now();
  fill_key_rate(cfg, r);
  r.timings.key_rate_s = seconds_since(t0);
  return r;
}

RunResult run_protocol(const ProtocolConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const Simulation sim = simulate(cfg);
  const double t_sim = seconds_since(t0);
  RunResult r = finish_run(cfg, sim);
  r.timings.simulate_s = t_sim;
  return r;
}

// Analytic mode: every cell is a finite Gaussian mixture whose moments are
// exact; the expected counts at n_signals set the statistical tests.
namespace {

struct Mixture {
  struct Branch {
    double weight, mean, var;
  };
  std::vector<Branch> branches;

  void add(double w, double m, double v) {
    if (w > 0.0) branches.push_back({w, m, v});
  }
  void add_pointer(double w, double q, double g, double var) {
    add(w * q, g, var);
    add(w * (1.0 - q), 0.0, var);
  }
  void add_fake(double w, double q, double g_eve, double alpha, double var_eve) {
    add(w * q, 0.5 * g_eve + alpha * 0.5 * g_eve, alpha * alpha * var_eve);
    add(w * (1.0 - q), 0.5 * g_eve - alpha * 0.5 * g_eve, alpha * alpha * var_eve);
  }
  double weight() const {
    double s = 0.0;
    for (const auto& b : branches) s += b.weight;
    return s;
  }
  double mean() const {
    double s = 0.0;
    for (const auto& b : branches) s += b.weight * b.mean;
    return s / weight();
  }
  double variance() const {
    const double m = mean();
    double s = 0.0;
    for (const auto& b : branches) s += b.weight * (b.var + (b.mean - m) * (b.mean - m));
    return s / weight();
  }
};

struct CellModel {
  Mixture pointer;
  double error = 0.0;  // photon clicks only
};

// Shift probabilities of Eve's sequential H+ / H- readings and the state left behind.
struct EveModel {
  double q_plus, q_minus;
  BlochState after;
};

EveModel eve_model(const BlochState& s, const PointerConfig& eve, bool plus_first) {
  const Projector first = Projector::h(plus_first ? Family::Plus : Family::Minus);
  const Projector second = Projector::h(plus_first ? Family::Minus : Family::Plus);
  const double q1 = expectation(first, s);
  const BlochState s1 = dephased_state(s, first, eve);
  const double q2 = expectation(second, s1);
  const BlochState s2 = dephased_state(s1, second, eve);
  return plus_first ? EveModel{q1, q2, s2} : EveModel{q2, q1, s2};
}

// Bob's weak measurement of P on s: pointer mixture and the error of the
// averaged posterior (angle noise is ignored for the posterior).
void bob_measures(CellModel& m, double w, const BlochState& s, const Projector& p,
                  const PointerConfig& ptr, Basis basis, int bit) {
  const double var = ptr.sigma_md * ptr.sigma_md;
  m.pointer.add_pointer(w, mean_expectation(p.shifted(ptr.bias_phi), s, ptr.sigma_phi), ptr.g, var);
  m.error += w * bit_error_probability(dephased_state(s, p, ptr), basis, bit);
}

CellModel photon_cell(const ProtocolConfig& cfg, const AttackConfig& atk, const ChannelModel& ch,
                      int bit, Basis basis, Family h) {
  const BlochState s = apply_channel(ch, bb84_state(basis, bit));
  const Projector bob = Projector::h(h);
  const PointerConfig& ptr = cfg.pointer;
  const PointerConfig eve = atk.eve_pointer(ptr);
  const double var_eve = eve.sigma_md * eve.sigma_md;
  CellModel m;

  auto guesses = [&](double p, auto&& fn) {
    fn(p, true);
    fn(1.0 - p, false);
  };

  switch (atk.strategy) {
    case Strategy::None:
      bob_measures(m, 1.0, s, bob, ptr, basis, bit);
      break;
    case Strategy::BiasedObservables:
      guesses(atk.p_h, [&](double w, bool right) {
        const Family guess = right ? h : other(h);
        bob_measures(m, w, s, bob.shifted(guess == Family::Plus ? atk.phi : atk.phi_prime), ptr,
                     basis, bit);
      });
      break;
    case Strategy::InterceptResend:
      guesses(atk.p_basis, [&](double w, bool right) {
        const Basis gb = right ? basis : other(basis);
        const double p1 = bit_error_probability(s, gb, 0);
        bob_measures(m, w * (1.0 - p1), bb84_state(gb, 0), bob, ptr, basis, bit);
        bob_measures(m, w * p1, bb84_state(gb, 1), bob, ptr, basis, bit);
      });
      break;
    case Strategy::FakeWmStrategy1: {
      const EveModel em = eve_model(s, eve, atk.plus_first);
      guesses(atk.p_h, [&](double w, bool right) {
        const Family guess = right ? h : other(h);
        m.pointer.add_fake(w, guess == Family::Plus ? em.q_plus : em.q_minus, eve.g, *atk.alpha, var_eve);
      });
      const double p1 = bit_error_probability(em.after, Basis::Z, 0);
      m.error = (1.0 - p1) * bit_error_probability(bb84_state(Basis::Z, 0), basis, bit) +
                p1 * bit_error_probability(bb84_state(Basis::Z, 1), basis, bit);
      break;
    }
    case Strategy::FakeWmStrategy2:
      guesses(atk.p_basis, [&](double wb, bool right_basis) {
        const Basis gb = right_basis ? basis : other(basis);
        const double alpha = gb == Basis::X ? *atk.alpha_x : *atk.alpha_z;
        const double p1 = bit_error_probability(s, gb, 0);
        for (int o : {0, 1}) {
          const double wo = wb * (o ? p1 : 1.0 - p1);
          if (wo <= 0.0) continue;
          const BlochState resent = bb84_state(gb, o);
          const EveModel em = eve_model(resent, eve, atk.plus_first);
          guesses(atk.p_h, [&](double wh, bool right) {
            const Family guess = right ? h : other(h);
            m.pointer.add_fake(wo * wh, guess == Family::Plus ? em.q_plus : em.q_minus, eve.g, alpha,
                               var_eve);
          });
          m.error += wo * bit_error_probability(resent, basis, bit);
        }
      });
      break;
  }
  return m;
}

std::size_t expected_count(double x) { return static_cast<std::size_t>(std::llround(std::max(0.0, x))); }

}  // namespace

RunResult run_analytic(const ProtocolConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const AttackConfig atk = cfg.effective_attack();
  const ChannelModel ch = cfg.effective_channel();
  const double n = static_cast<double>(cfg.n_signals);
  const double dark_var = cfg.pointer.sigma_md * cfg.pointer.sigma_md;

  std::array<CellModel, kCellCount> photon;
  for (int bit : {0, 1})
    for (Basis b : {Basis::Z, Basis::X})
      for (Family h : {Family::Plus, Family::Minus})
        photon[cell_index(bit, b, h)] = photon_cell(cfg, atk, ch, bit, b, h);

  auto class_data = [&](IntensityClass c, TruthSums* truth) {
    const double pp = cfg.photon_click_probability(c);
    const double pd = cfg.dark_click_probability(c);
    const double gain = pp + pd;
    const double sent = n * cfg.mix.probability(c);
    ClassData d;
    d.sent = expected_count(sent);
    d.clicks = expected_count(sent * gain);
    d.gain = gain;
    const double dark = gain > 0.0 ? pd / gain : 0.0;
    for (std::size_t i = 0; i < kCellCount; ++i) {
      Mixture mix;
      for (const auto& br : photon[i].pointer.branches) mix.add((1.0 - dark) * br.weight, br.mean, br.var);
      mix.add(dark, 0.0, dark_var);
      const std::size_t count = expected_count(sent * gain / 8.0);
      d.cells[i] = mix.branches.empty() ? CellStats{} : CellStats::from_moments(count, mix.mean(), mix.variance());
      if (truth) {
        const Basis b = (i & 2u) ? Basis::X : Basis::Z;
        const double e = (1.0 - dark) * photon[i].error + dark * 0.5;
        // Equal expected weight per cell, so a unit weight per cell averages correctly.
        truth->add(b, e);
      }
    }
    return d;
  };

  TruthSums truth;
  const ClassData sig = class_data(IntensityClass::Signal, &truth);
  std::optional<ClassData> dec;
  if (cfg.mix.decoy > 0.0) dec = class_data(IntensityClass::Decoy, nullptr);
  const double vac_sent = n * cfg.mix.vacuum;
  const double q_vac = cfg.system.y0;
  const double t_sim = seconds_since(t0);

  RunResult r;
  const auto t1 = std::chrono::steady_clock::now();
  r.report = estimate_from_classes(sig, dec, q_vac, expected_count(vac_sent),
                                   expected_count(vac_sent * q_vac), cfg.effective_thresholds());
  r.timings.simulate_s = t_sim;
  r.timings.estimate_s = seconds_since(t1);
  r.truth = truth.finish();
  r.sifted_key_length = expected_count(sig.clicks * 0.5);
  const double sifted_rate = cfg.strong_basis == Basis::Z ? r.truth.delta_z : r.truth.delta_x;
  r.sifted_errors = expected_count(static_cast<double>(r.sifted_key_length) * sifted_rate);
  const auto t2 = std::chrono::steady_clock::now();
  fill_key_rate(cfg, r);
  r.sifted_error_rate = sifted_rate;
  r.timings.key_rate_s = seconds_since(t2);
  return r;
}

std::vector<std::pair<std::string, double>> RunResult::fields(bool with_timings) const {
  auto out = report.fields();
  out.emplace_back("sifted_key_length", static_cast<double>(sifted_key_length));
  out.emplace_back("sifted_errors", static_cast<double>(sifted_errors));
  out.emplace_back("sifted_error_rate", sifted_error_rate);
  out.emplace_back("truth.delta_x", truth.delta_x);
  out.emplace_back("truth.delta_z", truth.delta_z);
  out.emplace_back("truth.delta_b", truth.delta_b);
  out.emplace_back("key_rate", key_rate);
  out.emplace_back("key_rate_decoy", key_rate_kind == KeyRateKind::WmDecoy ? 1.0 : 0.0);
  out.emplace_back("key_rate_clamped", key_rate_clamped ? 1.0 : 0.0);
  out.emplace_back("attack_active", attack_active ? 1.0 : 0.0);
  out.emplace_back("undetected_attack", undetected_attack ? 1.0 : 0.0);
  if (with_timings) {
    out.emplace_back("time.simulate_s", timings.simulate_s);
    out.emplace_back("time.estimate_s", timings.estimate_s);
    out.emplace_back("time.key_rate_s", timings.key_rate_s);
  }
  return out;
}

std::string RunResult::to_text(bool with_timings) const {
  std::string s;
  for (const auto& [k, v] : fields(with_timings)) s += k + " = " + format_double(v) + "\n";
  return s;
}

std::string Table::to_csv() const {
  std::string s;
  for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
  s += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + format_double(row[i]);
    s += '\n';
  }
  return s;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw std::invalid_argument("table has no column '" + std::string(name) + "'");
}

namespace {

using Setter = std::function<void(ProtocolConfig&, double)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"n_signals", [](ProtocolConfig& c, double v) {
         if (!(v >= 1.0)) throw std::invalid_argument("n_signals must be >= 1");
         c.n_signals = static_cast<std::size_t>(v);
       }},
      {"seed", [](ProtocolConfig& c, double v) { c.seed = static_cast<std::uint64_t>(v); }},
      {"pointer.g", [](ProtocolConfig& c, double v) { c.pointer.g = v; }},
      {"pointer.sigma_md", [](ProtocolConfig& c, double v) { c.pointer.sigma_md = v; }},
      {"pointer.g_over_sigma", [](ProtocolConfig& c, double v) { c.pointer.g = v * c.pointer.sigma_md; }},
      {"pointer.sigma_phi", [](ProtocolConfig& c, double v) { c.pointer.sigma_phi = v; }},
      {"pointer.bias_phi", [](ProtocolConfig& c, double v) { c.pointer.bias_phi = v; }},
      {"channel.depolarizing_prob", [](ProtocolConfig& c, double v) { c.channel.depolarizing_prob = v; }},
      {"channel.rotation_theta", [](ProtocolConfig& c, double v) { c.channel.rotation_theta = v; }},
      // Depolarizing strength giving bit error rate v on every BB84 state.
      {"channel.error_rate", [](ProtocolConfig& c, double v) { c.channel.depolarizing_prob = 2.0 * v; }},
      {"attack.p_basis", [](ProtocolConfig& c, double v) { c.attack.p_basis = v; }},
      {"attack.p_h", [](ProtocolConfig& c, double v) { c.attack.p_h = v; }},
      {"attack.alpha", [](ProtocolConfig& c, double v) { c.attack.alpha = v; }},
      {"attack.alpha_x", [](ProtocolConfig& c, double v) { c.attack.alpha_x = v; }},
      {"attack.alpha_z", [](ProtocolConfig& c, double v) { c.attack.alpha_z = v; }},
      {"attack.g_eve", [](ProtocolConfig& c, double v) { c.attack.g_eve = v; }},
      {"attack.sigma_eve", [](ProtocolConfig& c, double v) { c.attack.sigma_eve = v; }},
      {"attack.phi", [](ProtocolConfig& c, double v) { c.attack.phi = v; }},
      {"attack.phi_prime", [](ProtocolConfig& c, double v) { c.attack.phi_prime = v; }},
      {"system.eta_d", [](ProtocolConfig& c, double v) { c.system.eta_d = v; }},
      {"system.y0", [](ProtocolConfig& c, double v) { c.system.y0 = v; }},
      {"system.loss_db_per_km", [](ProtocolConfig& c, double v) { c.system.loss_db_per_km = v; }},
      {"system.distance_km", [](ProtocolConfig& c, double v) { c.system.distance_km = v; }},
      {"system.f_ec", [](ProtocolConfig& c, double v) { c.system.f_ec = v; }},
      {"system.e_d", [](ProtocolConfig& c, double v) { c.system.e_d = v; }},
      {"system.q", [](ProtocolConfig& c, double v) { c.system.q = v; }},
      {"decoy.mu", [](ProtocolConfig& c, double v) { c.decoy.mu = v; }},
      {"decoy.nu", [](ProtocolConfig& c, double v) { c.decoy.nu = v; }},
      {"thresholds.delta_sec", [](ProtocolConfig& c, double v) { c.thresholds.delta_sec = v; }},
      {"thresholds.g_sec", [](ProtocolConfig& c, double v) { c.thresholds.g_sec = v; }},
      {"thresholds.sigma_sec_sq", [](ProtocolConfig& c, double v) { c.thresholds.sigma_sec_sq = v; }},
      {"thresholds.variance_equality_significance",
       [](ProtocolConfig& c, double v) { c.thresholds.variance_equality_significance = v; }},
      {"thresholds.bound_significance", [](ProtocolConfig& c, double v) { c.thresholds.bound_significance = v; }},
      {"thresholds.sigma_phi_upper", [](ProtocolConfig& c, double v) { c.thresholds.sigma_phi_upper = v; }},
  };
  return table;
}

}  // namespace

void set_parameter(ProtocolConfig& cfg, std::string_view path, double value) {
  const auto& t = setters();
  const auto it = t.find(path);
  if (it == t.end()) throw std::invalid_argument("unknown sweep axis '" + std::string(path) + "'");
  it->second(cfg, value);
}

std::vector<std::string> sweep_axes() {
  std::vector<std::string> out;
  for (const auto& [k, v] : setters()) out.push_back(k);
  return out;
}

Table sweep(const ProtocolConfig& base, std::string_view axis, const std::vector<double>& values,
            SweepMode mode) {
  Table t;
  t.columns = {std::string(axis), "qber",        "se_qber",       "delta_x",        "delta_z",
               "delta_b",         "delta_wm",    "truth_delta_b", "sifted_error_rate", "key_rate",
               "nonnegative",     "coupling_bound", "variance_bound", "variance_equality", "abort"};
  for (double v : values) {
    ProtocolConfig cfg = base;
    set_parameter(cfg, axis, v);
    const RunResult r = mode == SweepMode::Analytic ? run_analytic(cfg) : run_protocol(cfg);
    const Verdicts& vd = r.report.verdicts;
    t.rows.push_back({v, r.report.qber, r.report.se_qber, r.report.signal.delta_x,
                      r.report.signal.delta_z, r.report.signal.delta_b, r.report.delta_wm,
                      r.truth.delta_b, r.sifted_error_rate, r.key_rate,
                      vd.nonnegative ? 1.0 : 0.0, vd.coupling_bound ? 1.0 : 0.0,
                      vd.variance_bound ? 1.0 : 0.0, vd.variance_equality ? 1.0 : 0.0,
                      r.abort ? 1.0 : 0.0});
  }
  return t;
}

Table figure3() {
  Table t;
  t.columns = {"g_over_sigma", "channel_error", "qber", "rate"};
  for (double e : {0.0, 0.02, 0.05, 0.08}) {
    for (int i = 0; i <= 50; ++i) {
      const double kappa = 0.01 * i;
      const double q = e + wm_disturbance_error(kappa, 1.0);
      t.rows.push_back({kappa, e, q, idealized_rate(q, q).smoothed});
    }
  }
  return t;
}

Table figure5() {
  Table t;
  t.columns = {"qber", "phi", "delta_x_tilde", "delta_z_tilde", "delta_b_tilde", "rate_smoothed",
               "rate_split_biased", "rate_unbiased"};
  for (double e : {0.08, 0.11}) {
    const double r = 1.0 - 2.0 * e;
    const double unbiased = 1.0 - 2.0 * binary_entropy(e);
    for (int i = -50; i <= 50; ++i) {
      const double phi = 0.01 * i;
      const ErrorPair ep = biased_estimates(r, r, phi);
      const double smoothed = 1.0 - 2.0 * binary_entropy(ep.average());
      const bool in_range = ep.delta_x >= 0.0 && ep.delta_x <= 1.0 && ep.delta_z >= 0.0 && ep.delta_z <= 1.0;
      const double split = in_range ? 1.0 - binary_entropy(ep.delta_x) - binary_entropy(ep.delta_z)
                                    : std::nan("");
      t.rows.push_back({e, phi, ep.delta_x, ep.delta_z, ep.average(), smoothed, split, unbiased});
    }
  }
  return t;
}

SystemParams figure6_system() {
  SystemParams p;
  p.eta_d = 0.145;
  p.y0 = 6e-6;
  p.loss_db_per_km = 0.2;
  p.f_ec = 1.22;
  p.e_d = 0.015;
  p.q = 0.5;
  return p;
}

DecoyConfig figure6_decoy() { return {0.48, 0.05}; }

Table figure6() {
  Table t;
  t.columns = {"distance_km", "q_mu",       "q_nu",        "q_vac",    "q1_lower", "eps_mu",
               "eps1_upper",  "delta_x1_upper", "rate_bb84", "rate_wm", "relative_gap"};
  const double dwm = wm_disturbance_error(kFigure6WeakRatio, 1.0);
  for (int km = 0; km <= 150; km += 2) {
    SystemParams p = figure6_system();
    p.distance_km = km;
    const DecoyPoint pt = decoy_point(p, figure6_decoy(), dwm);
    const double gap = pt.rate_bb84.value > 0.0
                           ? (pt.rate_bb84.value - pt.rate_wm.value) / pt.rate_bb84.value
                           : std::nan("");
    t.rows.push_back({static_cast<double>(km), pt.q_mu, pt.q_nu, pt.q_vac, pt.q1_l.value, pt.eps_mu,
                      pt.eps1_u.value, pt.delta_x1_u.value, pt.rate_bb84.value, pt.rate_wm.value, gap});
  }
  return t;
}

}  // namespace wmqkd
