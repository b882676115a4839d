// Acceptance checks. One PASS/FAIL line per criterion; the process exits
// nonzero when any criterion fails.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "wmqkd/adversary.hpp"
#include "wmqkd/estimation.hpp"
#include "wmqkd/harness.hpp"
#include "wmqkd/keyrate.hpp"
#include "wmqkd/qubit.hpp"
#include "wmqkd/weak_measurement.hpp"

using namespace wmqkd;

namespace {

// Tolerances
constexpr double kExactTol = 1e-12;
constexpr double kIdentityTol = 1e-12;
constexpr double kTheoremTol = 1e-9;
constexpr double kGridStep = 1e-3;
constexpr double kCrossoverTarget = 2.229;
constexpr double kCrossoverTol = 1e-3;
constexpr double kFig3MaxReduction = 0.01;
constexpr double kFig6MaxGap = 0.05;

int failures = 0;

void detail(const std::string& s) { std::printf("       %s\n", s.c_str()); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void report(int id, const char* name, bool ok, double seconds) {
  std::printf("[%s] criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, name, seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class F>
void criterion(int id, const char* name, F body) {
  const auto t0 = std::chrono::steady_clock::now();
  const bool ok = body();
  report(id, name, ok, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

using Columns = std::array<BlochState, 3>;

// Random unital map: rotation * diag(l) * rotation with |l_i| <= 1.
Columns random_unital(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rotation = [&] {
    BlochState a{n(rng), n(rng), n(rng)}, b{n(rng), n(rng), n(rng)};
    a = (1.0 / a.norm()) * a;
    b = b + (-b.dot(a)) * a;
    b = (1.0 / b.norm()) * b;
    const BlochState c{a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
    return Columns{a, b, c};  // rows of an orthogonal matrix
  };
  const Columns r1 = rotation(), r2 = rotation();
  const std::array<double, 3> l{u(rng), u(rng), u(rng)};
  Columns cols{};
  for (int j = 0; j < 3; ++j) {
    const BlochState e{j == 0 ? 1.0 : 0.0, j == 1 ? 1.0 : 0.0, j == 2 ? 1.0 : 0.0};
    BlochState v{};
    for (int k = 0; k < 3; ++k) v = v + (l[k] * r2[k].dot(e)) * r1[k];
    cols[j] = v;
  }
  return cols;
}

BlochState image(const Columns& c, const BlochState& s) { return s.x * c[0] + s.y * c[1] + s.z * c[2]; }

double basis_error(const std::function<BlochState(const BlochState&)>& map, Basis b) {
  return 0.5 * (bit_error_probability(map(bb84_state(b, 0)), b, 0) +
                bit_error_probability(map(bb84_state(b, 1)), b, 1));
}

bool c1() {
  const double d = wm_disturbance_error(0.10, 1.0);
  const double closed = 0.25 * (1.0 - std::exp(-0.00125));
  bool ok = d < 4e-4 && std::abs(d - closed) <= kExactTol;
  detail(fmt("delta_wm(0.10) = %.15g, closed form %.15g", d, closed));

  ProtocolConfig cfg;
  cfg.n_signals = 10'000'000;
  cfg.pointer.g = 0.10;
  cfg.seed = 101;
  const RunResult r = run_protocol(cfg);
  const double n = static_cast<double>(r.sifted_key_length);
  const double se = std::sqrt(d * (1.0 - d) / n);
  const double z = (r.sifted_error_rate - d) / se;
  detail(fmt("Monte Carlo flip rate %.6g over %.0f sifted signals, z = %.2f", r.sifted_error_rate, n, z));
  return ok && std::abs(z) <= 3.0;
}

bool c2() {
  const Table t = figure3();
  const std::size_t kc = t.column("g_over_sigma"), ec = t.column("channel_error"), rc = t.column("rate");
  auto rate = [&](double e, double k) {
    for (const auto& row : t.rows)
      if (row[ec] == e && std::abs(row[kc] - k) < 1e-12) return row[rc];
    return std::nan("");
  };
  const double reduction = 1.0 - rate(0.0, 0.10) / rate(0.0, 0.0);
  bool ok = reduction < kFig3MaxReduction;
  detail(fmt("rate reduction at g/sigma = 0.10: %.4f %%", 100 * reduction));
  const std::array<double, 4> errs{0.0, 0.02, 0.05, 0.08};
  for (int i = 0; i <= 50; ++i) {
    const double k = 0.01 * i;
    for (std::size_t j = 1; j < errs.size(); ++j) ok = ok && rate(errs[j], k) < rate(errs[j - 1], k);
    if (i > 0)
      for (double e : errs) ok = ok && rate(e, k) <= rate(e, k - 0.01);
  }
  return ok;
}

bool c3() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Columns c = random_unital(rng);
    const double g = 0.05;
    MeanArray m{};
    for (int bit : {0, 1})
      for (Basis b : {Basis::Z, Basis::X})
        for (Family h : {Family::Plus, Family::Minus})
          m[cell_index(bit, b, h)] = g * expectation(Projector::h(h), image(c, bb84_state(b, bit)));
    const BlochEstimates e = estimate_error_rates(m, estimate_couplings(m, 0.0));
    auto map = [&](const BlochState& s) { return image(c, s); };
    worst = std::max({worst, std::abs(e.delta_x - basis_error(map, Basis::X)),
                      std::abs(e.delta_z - basis_error(map, Basis::Z))});
  }
  detail(fmt("exact expectations: worst error %.3g over 200 maps", worst));
  bool ok = worst <= kExactTol;

  std::uniform_real_distribution<double> u(0.0, 1.0);
  int within = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ProtocolConfig cfg;
    cfg.n_signals = 1'000'000;
    cfg.seed = 1000 + trial;
    cfg.channel = {0.3 * u(rng), u(rng) - 0.5};
    const RunResult r = run_protocol(cfg);
    auto map = [&](const BlochState& s) { return apply_channel(cfg.channel, s); };
    const ClassEstimate& s = r.report.signal;
    const bool hit = std::abs(s.raw.delta_x - basis_error(map, Basis::X)) <= 4.0 * s.se_delta_x &&
                     std::abs(s.raw.delta_z - basis_error(map, Basis::Z)) <= 4.0 * s.se_delta_z;
    within += hit;
  }
  detail(fmt("Monte Carlo N = 1e6: %d of 100 trials within 4 standard errors", within));
  return ok && within >= 99;
}

bool c4() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    BlochState s{n(rng), n(rng), n(rng)};
    s = (1.0 / s.norm()) * s;
    const Projector p{i % 2 ? Family::Plus : Family::Minus, 2.0 * u(rng) - 1.0};
    const ChannelModel ch{u(rng), 6.0 * u(rng) - 3.0};
    worst = std::max({worst, std::abs(expectation(p, s) + expectation(p, s.negated()) - 1.0),
                      std::abs(expectation(p, apply_channel(ch, s)) +
                               expectation(p, apply_channel(ch, s.negated())) - 1.0)});
  }
  detail(fmt("complement identity: worst deviation %.3g", worst));
  bool ok = worst <= kIdentityTol;
  int violations = 0;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) {
      const double a = 0.5 * i / 99.0, b = 0.5 * j / 99.0;
      const IdealizedRate r = idealized_rate(a, b);
      if (0.5 * (binary_entropy(a) + binary_entropy(b)) > binary_entropy(0.5 * (a + b)) + 1e-15) ++violations;
      if (r.split + 1e-15 < r.smoothed) ++violations;
    }
  detail(fmt("entropy concavity: %d violations on the 100x100 grid", violations));
  return ok && violations == 0;
}

bool c5() {
  bool ok = true;
  int points = 0;
  for (double e : {0.08, 0.11}) {
    const double r = 1.0 - 2.0 * e;
    for (int i = -1570; i <= 1570; ++i) {
      const double phi = 1e-3 * i;
      const ErrorPair p = biased_estimates(r, r, phi);
      if (!(p.delta_x >= 0.0 && p.delta_x <= 1.0 && p.delta_z >= 0.0 && p.delta_z <= 1.0)) continue;
      const double db = std::clamp(p.average(), 0.0, 1.0);
      const double smoothed = 1.0 - 2.0 * binary_entropy(db);
      const double split = 1.0 - binary_entropy(p.delta_x) - binary_entropy(p.delta_z);
      ++points;
      if (i == 0) ok = ok && std::abs(split - smoothed) <= kTheoremTol;
      else ok = ok && smoothed < split - kTheoremTol;
    }
  }
  detail(fmt("%d angles checked at QBER 8 %% and 11 %%", points));
  return ok;
}

bool c6() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Columns c = random_unital(rng);
    const BlochState plus = image(c, bb84_state(Basis::X, 0)), zero = image(c, bb84_state(Basis::Z, 0));
    const double p_h = u(rng);
    const BiasAngles a = optimal_bias_angles(plus.x, plus.z, zero.x, zero.z, p_h);
    auto f = [&](double x, double y) {
      return biased_error_rates(plus.x, plus.z, zero.x, zero.z, p_h, x, y).average();
    };
    // Coarse pass over the whole torus, then a fine pass at the target resolution.
    double bx = 0.0, by = 0.0, bv = f(0.0, 0.0);
    const double pi = std::numbers::pi;
    for (double x = -pi; x <= pi; x += 0.01)
      for (double y = -pi; y <= pi; y += 0.01)
        if (const double v = f(x, y); v < bv) bv = v, bx = x, by = y;
    const double cx = bx, cy = by;
    for (int i = -20; i <= 20; ++i)
      for (int j = -20; j <= 20; ++j)
        if (const double v = f(cx + kGridStep * i, cy + kGridStep * j); v < bv)
          bv = v, bx = cx + kGridStep * i, by = cy + kGridStep * j;
    auto gap = [](double u, double v) { return std::abs(std::remainder(u - v, 2.0 * std::numbers::pi)); };
    worst = std::max({worst, gap(a.phi, bx), gap(a.phi_prime, by)});
  }
  detail(fmt("worst angle gap to the grid minimizer: %.3g rad", worst));
  bool ok = worst <= kGridStep;
  for (double e : {0.02, 0.08, 0.11}) {
    const double r = 1.0 - 2.0 * e;
    const BiasAngles d = optimal_bias_angles(r, 0.0, 0.0, r, 0.8);
    ok = ok && d.phi == 0.0 && d.phi_prime == 0.0;
  }
  return ok;
}

bool c7() {
  bool means_ok = true, reject_ok = true, pass_ok = true;
  for (double alpha : {0.8, 1.0})
    for (double p_h : {0.6, 0.8, 0.95, 1.0}) {
      ProtocolConfig cfg;
      cfg.seed = 700 + static_cast<int>(100 * p_h) + static_cast<int>(10 * alpha);
      cfg.attack.strategy = Strategy::FakeWmStrategy1;
      cfg.attack.alpha = alpha;
      cfg.attack.p_h = p_h;
      const RunResult r = run_protocol(cfg);
      const ClassEstimate& s = r.report.signal;
      const double predicted = strategy1_predicted_qber(alpha, p_h);
      const double z = (s.raw.delta_b - predicted) / s.se_delta_b;
      const bool rejected = !r.report.verdicts.variance_equality;
      means_ok = means_ok && std::abs(z) <= 3.0;
      if (p_h <= 0.95) reject_ok = reject_ok && rejected;
      else pass_ok = pass_ok && !rejected;
      detail(fmt("alpha %.1f p_H %.2f: delta_b %.4f (predicted %.4f, z = %.2f), X/Z variance ratio %.4f "
                 "(predicted %.4f), equality p = %.3g, %s",
                 alpha, p_h, s.raw.delta_b, predicted, z, r.report.variance_ratio_x_over_z,
                 strategy1_predicted_variance_ratio(p_h), r.report.verdicts.min_equality_p_value,
                 rejected ? "rejected" : "not rejected"));
    }
  detail(fmt("estimate matches: %s; rejects p_H <= 0.95: %s; passes p_H = 1: %s", means_ok ? "yes" : "no",
             reject_ok ? "yes" : "no", pass_ok ? "yes" : "no"));
  return means_ok && reject_ok && pass_ok;
}

bool c8() {
  bool ok = true;
  for (double p_basis : {0.5, 0.7, 0.9})
    for (double p_h : {0.5, 0.7, 0.9}) {
      ProtocolConfig cfg;
      cfg.seed = 800 + static_cast<int>(100 * p_basis + 10 * p_h);
      cfg.attack.strategy = Strategy::FakeWmStrategy2;
      cfg.attack.p_basis = p_basis;
      cfg.attack.p_h = p_h;
      const RunResult r = run_protocol(cfg);
      const double ratio = std::sqrt(cfg.effective_thresholds().sigma_sec_sq) / cfg.pointer.sigma_md;
      const double bound = strategy2_qber_lower_bound(p_basis, p_h, ratio);
      const bool hit = r.report.qber >= bound - 3.0 * r.report.se_qber;
      ok = ok && hit;
      detail(fmt("p_basis %.1f p_H %.1f: qber %.4f +- %.4f, bound %.4f", p_basis, p_h, r.report.qber,
                 r.report.se_qber, bound));
    }
  const double x = strategy2_crossover_sigma_ratio(0.35, 0.11);
  detail(fmt("crossover sigma_sec/sigma_MD = %.6f", x));
  return ok && std::abs(x - kCrossoverTarget) <= kCrossoverTol;
}

bool c9() {
  const Table t = figure6();
  const std::size_t dc = t.column("distance_km"), bc = t.column("rate_bb84"), wc = t.column("rate_wm"),
                    gc = t.column("relative_gap");
  bool ok = true;
  double max_gap = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row[dc] == 50.0) ok = ok && row[bc] > 0.0 && row[wc] > 0.0;
    if (i > 0) ok = ok && row[bc] <= t.rows[i - 1][bc] && row[wc] <= t.rows[i - 1][wc];
    if (row[dc] <= 80.0) {
      max_gap = std::max(max_gap, row[gc]);
      ok = ok && row[gc] < kFig6MaxGap;
    }
  }
  detail(fmt("largest relative gap over 0-80 km: %.4f %%", 100 * max_gap));
  return ok;
}

bool c10() {
  std::vector<ProtocolConfig> cases(3);
  cases[0].channel.depolarizing_prob = 0.06;
  cases[1].attack.strategy = Strategy::FakeWmStrategy1;
  cases[1].attack.alpha = 1.0;
  cases[1].attack.p_h = 0.8;
  cases[2].source = SourceKind::WeakCoherent;
  cases[2].system = figure6_system();
  cases[2].system.distance_km = 5.0;
  cases[2].mix = {0.5, 0.4, 0.1};
  cases[2].pointer.g = 1.0;  // decoy cells need a resolvable coupling
  bool ok = true;
  for (ProtocolConfig& cfg : cases) {
    cfg.n_signals = 1'000'000;
    const Simulation sim = simulate(cfg);
    EstimationOptions opts;
    opts.known_vacuum_yield = cfg.system.y0;
    const EstimationReport a = estimate(sim.log, cfg.effective_thresholds(), opts);
    const EstimationReport b = estimate(sim.log.with_outcomes_withheld(), cfg.effective_thresholds(), opts);
    const auto fa = a.fields(), fb = b.fields();
    bool same = fa.size() == fb.size();
    for (std::size_t i = 0; same && i < fa.size(); ++i)
      same = fa[i].first == fb[i].first &&
             std::memcmp(&fa[i].second, &fb[i].second, sizeof(double)) == 0;
    ok = ok && same;
  }
  detail("three logs (honest, faked, weak coherent with decoys) compared field by field");
  return ok;
}

}  // namespace

int main() {
  criterion(1, "weak-measurement disturbance bound", c1);
  criterion(2, "rate against measurement strength", c2);
  criterion(3, "estimation round trip", c3);
  criterion(4, "complement identity and entropy concavity", c4);
  criterion(5, "biased observables never help", c5);
  criterion(6, "optimal bias angles", c6);
  criterion(7, "faked weak measurement, strategy 1", c7);
  criterion(8, "faked weak measurement, strategy 2", c8);
  criterion(9, "decoy-state rates", c9);
  criterion(10, "estimation ignores strong outcomes", c10);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
