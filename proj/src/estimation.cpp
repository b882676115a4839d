#include "wmqkd/estimation.hpp"
#include "wmqkd/format.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <functional>
#include <numbers>
#include <thread>

namespace wmqkd {

void CellStats::add(double x) {
  ++count;
  const double d = x - mean;
  mean += d / static_cast<double>(count);
  m2 += d * (x - mean);
}

CellStats CellStats::merge(const CellStats& a, const CellStats& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double n = na + nb;
  const double d = b.mean - a.mean;
  CellStats out;
  out.count = a.count + b.count;
  out.mean = a.mean + d * (nb / n);
  out.m2 = a.m2 + b.m2 + d * d * (na * nb / n);
  return out;
}

CellStats CellStats::from_moments(std::size_t count, double mean, double variance) {
  CellStats s;
  s.count = count;
  s.mean = mean;
  s.m2 = count > 1 ? variance * static_cast<double>(count - 1) : 0.0;
  return s;
}

double CellStats::variance() const {
  return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
}

double CellStats::population_variance() const {
  return count > 0 ? m2 / static_cast<double>(count) : 0.0;
}

std::string cell_name(std::size_t index) {
  std::string s;
  s += static_cast<char>('0' + ((index >> 2) & 1u));
  s += (index & 2u) ? 'X' : 'Z';
  s += (index & 1u) ? '-' : '+';
  return s;
}

MeanArray means_of(const CellArray& cells) {
  MeanArray m{};
  for (std::size_t i = 0; i < kCellCount; ++i) m[i] = cells[i].mean;
  return m;
}

namespace {

constexpr std::size_t kBlock = 1u << 16;

CellArray accumulate_range(const SignalLog& log, IntensityClass cls, std::size_t lo, std::size_t hi) {
  CellArray cells{};
  for (std::size_t i = lo; i < hi; ++i) {
    const SignalRecord& r = log[i];
    if (r.intensity != cls || !r.clicked()) continue;
    cells[cell_index(r.s_a, r.basis, r.observable)].add(r.omega);
  }
  return cells;
}

}  // namespace

CellArray accumulate_cells(const SignalLog& log, IntensityClass cls, unsigned workers) {
  const std::size_t n_blocks = (log.size() + kBlock - 1) / kBlock;
  std::vector<CellArray> blocks(n_blocks);
  const unsigned n_threads =
      static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(workers, n_blocks)));
  auto work = [&](unsigned t) {
    for (std::size_t b = t; b < n_blocks; b += n_threads)
      blocks[b] = accumulate_range(log, cls, b * kBlock, std::min(log.size(), (b + 1) * kBlock));
  };
  if (n_threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(work, t);
  }
  CellArray total{};
  for (const auto& blk : blocks)
    for (std::size_t c = 0; c < kCellCount; ++c) total[c] = CellStats::merge(total[c], blk[c]);
  return total;
}

CellArray condition_and_average(const SignalLog& log, IntensityClass cls, unsigned workers) {
  CellArray cells = accumulate_cells(log, cls, workers);
  for (std::size_t c = 0; c < kCellCount; ++c) {
    if (cells[c].count < 2)
      throw EstimationError("condition " + cell_name(c) + " has " + std::to_string(cells[c].count) +
                            " readings; at least 2 are needed");
  }
  return cells;
}

Couplings estimate_couplings(const MeanArray& m, double dark_fraction) {
  const double live = 1.0 - dark_fraction;
  if (!(live > 0.0)) throw EstimationError("estimate_couplings: every click is a dark count");
  Couplings g;
  for (Family h : {Family::Plus, Family::Minus}) {
    const double z_pair = m[cell_index(0, Basis::Z, h)] + m[cell_index(1, Basis::Z, h)];
    const double x_pair = m[cell_index(0, Basis::X, h)] + m[cell_index(1, Basis::X, h)];
    const double v = 0.5 * (z_pair + x_pair) / live;
    (h == Family::Plus ? g.g_plus : g.g_minus) = v;
  }
  return g;
}

BlochEstimates estimate_error_rates(const MeanArray& m, const Couplings& g, double dark_fraction) {
  if (!(g.g_plus > 0.0 && g.g_minus > 0.0))
    throw EstimationError("estimate_error_rates: couplings must be positive");
  const double live = 1.0 - dark_fraction;
  if (!(live > 0.0)) throw EstimationError("estimate_error_rates: every click is a dark count");
  auto h_plus = [&](int bit, Basis b) { return m[cell_index(bit, b, Family::Plus)] / (live * g.g_plus); };
  auto h_minus = [&](int bit, Basis b) { return m[cell_index(bit, b, Family::Minus)] / (live * g.g_minus); };
  constexpr double s2 = std::numbers::sqrt2;
  BlochEstimates e;
  e.r_x_plus = s2 * (h_plus(0, Basis::X) - h_minus(0, Basis::X));
  e.r_x_minus = s2 * (h_plus(1, Basis::X) - h_minus(1, Basis::X));
  e.r_z_zero = s2 * (h_plus(0, Basis::Z) + h_minus(0, Basis::Z) - 1.0);
  e.r_z_one = s2 * (h_plus(1, Basis::Z) + h_minus(1, Basis::Z) - 1.0);
  e.delta_x = 0.25 * (2.0 - e.r_x_plus + e.r_x_minus);
  e.delta_z = 0.25 * (2.0 - e.r_z_zero + e.r_z_one);
  e.delta_b = 0.5 * (e.delta_x + e.delta_z);
  return e;
}

double dark_count_fraction(double q_gamma, double q_vac) {
  if (!(q_gamma > 0.0)) throw std::domain_error("dark_count_fraction: Q_gamma must be > 0");
  if (!(q_vac >= 0.0 && q_vac <= q_gamma))
    throw std::domain_error("dark_count_fraction: need 0 <= Q_vac <= Q_gamma");
  return q_vac / q_gamma;
}

double corrected_error_rate(double delta_tilde, double d_gamma) {
  return delta_tilde + (0.5 - delta_tilde) * d_gamma;
}

double compute_qber(double delta_b, double delta_wm, double d_mu) {
  return delta_b + (1.0 - d_mu) * delta_wm;
}

EstimationThresholds EstimationThresholds::for_pointer(const PointerConfig& p) {
  EstimationThresholds th;
  th.g_sec = 1.2 * p.g;
  th.sigma_sec_sq = p.sigma_md * p.sigma_md + 0.25 * p.g * p.g;
  th.sigma_phi_upper = p.sigma_phi;
  return th;
}

void EstimationThresholds::validate() const {
  if (!(delta_sec > 0.0 && delta_sec < 0.5))
    throw std::invalid_argument("thresholds.delta_sec must lie in (0, 0.5)");
  if (!(g_sec > 0.0)) throw std::invalid_argument("thresholds.g_sec must be > 0");
  if (!(sigma_sec_sq > 0.0)) throw std::invalid_argument("thresholds.sigma_sec_sq must be > 0");
  if (!(variance_equality_significance > 0.0 && variance_equality_significance < 1.0))
    throw std::invalid_argument("thresholds.variance_equality_significance must lie in (0, 1)");
  if (!(bound_significance > 0.0 && bound_significance < 1.0))
    throw std::invalid_argument("thresholds.bound_significance must lie in (0, 1)");
  if (!(sigma_phi_upper >= 0.0)) throw std::invalid_argument("thresholds.sigma_phi_upper must be >= 0");
}

namespace {

struct Derived {
  double g_plus, g_minus, delta_x, delta_z, delta_b;
};

Derived derive(const MeanArray& m, double d) {
  const Couplings g = estimate_couplings(m, d);
  const BlochEstimates b = estimate_error_rates(m, g, d);
  return {g.g_plus, g.g_minus, b.delta_x, b.delta_z, b.delta_b};
}

// Delta-method standard errors of the derived quantities, with the gradient
// taken by central differences over the 8 cell means.
Derived standard_errors(const CellArray& cells, double d) {
  const MeanArray m = means_of(cells);
  double scale = 0.0;
  for (double v : m) scale = std::max(scale, std::abs(v));
  const double h = 1e-6 * (scale > 0.0 ? scale : 1.0);
  Derived var{0, 0, 0, 0, 0};
  for (std::size_t c = 0; c < kCellCount; ++c) {
    if (cells[c].count == 0) continue;
    MeanArray up = m, dn = m;
    up[c] += h;
    dn[c] -= h;
    const Derived a = derive(up, d);
    const Derived b = derive(dn, d);
    const double w = cells[c].variance() / static_cast<double>(cells[c].count);
    auto acc = [&](double& slot, double fa, double fb) {
      const double grad = (fa - fb) / (2.0 * h);
      slot += grad * grad * w;
    };
    acc(var.g_plus, a.g_plus, b.g_plus);
    acc(var.g_minus, a.g_minus, b.g_minus);
    acc(var.delta_x, a.delta_x, b.delta_x);
    acc(var.delta_z, a.delta_z, b.delta_z);
    acc(var.delta_b, a.delta_b, b.delta_b);
  }
  return {std::sqrt(var.g_plus), std::sqrt(var.g_minus), std::sqrt(var.delta_x),
          std::sqrt(var.delta_z), std::sqrt(var.delta_b)};
}

ClassEstimate estimate_class(IntensityClass cls, const ClassData& data, double vacuum_gain) {
  for (std::size_t c = 0; c < kCellCount; ++c) {
    if (data.cells[c].count < 2)
      throw EstimationError("condition " + cell_name(c) + " has too few readings");
  }
  ClassEstimate e;
  e.intensity = cls;
  e.sent = data.sent;
  e.clicks = data.clicks;
  e.gain = data.gain;
  e.cells = data.cells;
  if (!(data.gain > 0.0)) throw EstimationError("intensity class has zero gain");
  e.dark_fraction = dark_count_fraction(data.gain, std::min(vacuum_gain, data.gain));
  const MeanArray m = means_of(data.cells);
  e.couplings = estimate_couplings(m, e.dark_fraction);
  e.raw = estimate_error_rates(m, e.couplings, e.dark_fraction);
  e.delta_x = corrected_error_rate(e.raw.delta_x, e.dark_fraction);
  e.delta_z = corrected_error_rate(e.raw.delta_z, e.dark_fraction);
  e.delta_b = corrected_error_rate(e.raw.delta_b, e.dark_fraction);
  const Derived se = standard_errors(data.cells, e.dark_fraction);
  e.se_g_plus = se.g_plus;
  e.se_g_minus = se.g_minus;
  e.se_delta_x = se.delta_x;
  e.se_delta_z = se.delta_z;
  e.se_delta_b = se.delta_b;
  return e;
}

double pooled(const CellArray& cells, int basis_filter) {
  double m2 = 0.0, dof = 0.0;
  for (std::size_t c = 0; c < kCellCount; ++c) {
    const int basis = (c & 2u) ? 1 : 0;
    if (basis_filter >= 0 && basis != basis_filter) continue;
    if (cells[c].count < 2) continue;
    m2 += cells[c].m2;
    dof += static_cast<double>(cells[c].count - 1);
  }
  return dof > 0.0 ? m2 / dof : 0.0;
}

}  // namespace

Verdicts wm_verification(const EstimationReport& report, const EstimationThresholds& th) {
  namespace bm = boost::math;
  const ClassEstimate& s = report.signal;
  Verdicts v;

  // Sampling noise makes a strict sign test abort about half of all honest
  // noiseless runs, so each bound is tested one-sided at the configured level.
  const double z = bm::quantile(bm::normal(), 1.0 - th.bound_significance / 4.0);
  v.nonnegative = s.raw.delta_x >= -z * s.se_delta_x && s.raw.delta_z >= -z * s.se_delta_z;
  v.coupling_bound = s.couplings.g_plus - z * s.se_g_plus <= th.g_sec &&
                     s.couplings.g_minus - z * s.se_g_minus <= th.g_sec;

  for (std::size_t c = 0; c < kCellCount; ++c) {
    const CellStats& cell = s.cells[c];
    const double dof = static_cast<double>(cell.count - 1);
    const double stat = dof * cell.variance() / th.sigma_sec_sq;
    const double p = bm::cdf(bm::complement(bm::chi_squared(dof), stat));
    v.min_bound_p_value = std::min(v.min_bound_p_value, p);
  }
  v.variance_bound = v.min_bound_p_value >= th.bound_significance / static_cast<double>(kCellCount);

  constexpr double kPairs = kCellCount * (kCellCount - 1) / 2;
  for (std::size_t i = 0; i < kCellCount; ++i) {
    for (std::size_t j = i + 1; j < kCellCount; ++j) {
      const double vi = s.cells[i].variance();
      const double vj = s.cells[j].variance();
      double p = 1.0;
      if (vi > 0.0 && vj > 0.0) {
        const double f = vi / vj;
        const bm::fisher_f dist(static_cast<double>(s.cells[i].count - 1),
                                static_cast<double>(s.cells[j].count - 1));
        p = std::min(1.0, 2.0 * std::min(bm::cdf(dist, f), bm::cdf(bm::complement(dist, f))));
        v.max_variance_ratio = std::max({v.max_variance_ratio, f, 1.0 / f});
      } else if (vi > 0.0 || vj > 0.0) {
        p = 0.0;
        v.max_variance_ratio = std::numeric_limits<double>::infinity();
      }
      v.min_equality_p_value = std::min(v.min_equality_p_value, p);
    }
  }
  v.variance_equality = v.min_equality_p_value >= th.variance_equality_significance / kPairs;
  return v;
}

EstimationReport estimate_from_classes(const ClassData& signal, const std::optional<ClassData>& decoy,
                                       double vacuum_gain, std::size_t vacuum_sent,
                                       std::size_t vacuum_clicks, const EstimationThresholds& th) {
  th.validate();
  EstimationReport r;
  r.vacuum_gain = vacuum_gain;
  r.vacuum_sent = vacuum_sent;
  r.vacuum_clicks = vacuum_clicks;
  r.signal = estimate_class(IntensityClass::Signal, signal, vacuum_gain);
  if (decoy) {
    // Too few decoy clicks to resolve the couplings leaves the run without a decoy estimate.
    try {
      r.decoy = estimate_class(IntensityClass::Decoy, *decoy, vacuum_gain);
    } catch (const EstimationError&) {
    }
  }

  r.pooled_variance = pooled(r.signal.cells, -1);
  const double var_z = pooled(r.signal.cells, 0);
  const double var_x = pooled(r.signal.cells, 1);
  r.variance_ratio_x_over_z = var_z > 0.0 ? var_x / var_z : std::numeric_limits<double>::infinity();

  const double g_hat = std::max({r.signal.couplings.g_plus, r.signal.couplings.g_minus, 0.0});
  r.sigma_md_sq_lower = sigma_md_sq_lower_bound(r.pooled_variance, g_hat, th.sigma_phi_upper);
  r.delta_wm = r.sigma_md_sq_lower > 0.0 ? wm_disturbance_error(g_hat, std::sqrt(r.sigma_md_sq_lower))
                                         : 0.25;
  r.qber = compute_qber(r.signal.delta_b, r.delta_wm, r.signal.dark_fraction);
  r.se_qber = (1.0 - r.signal.dark_fraction) * r.signal.se_delta_b;

  r.verdicts = wm_verification(r, th);
  r.qber_exceeded = r.qber > th.delta_sec;
  r.abort = !r.verdicts.all() || r.qber_exceeded;
  return r;
}

EstimationReport estimate(const SignalLog& log, const EstimationThresholds& th,
                          const EstimationOptions& opts) {
  std::array<std::size_t, 3> sent{}, clicks{};
  for (const auto& rec : log.records()) {
    const auto k = static_cast<std::size_t>(rec.intensity);
    ++sent[k];
    if (rec.clicked()) ++clicks[k];
  }
  auto gain = [&](IntensityClass c) {
    const auto k = static_cast<std::size_t>(c);
    return sent[k] ? static_cast<double>(clicks[k]) / static_cast<double>(sent[k]) : 0.0;
  };
  if (sent[0] == 0) throw EstimationError("log contains no signal-intensity entries");

  ClassData sig{condition_and_average(log, IntensityClass::Signal, opts.workers), sent[0], clicks[0],
                gain(IntensityClass::Signal)};
  std::optional<ClassData> dec;
  if (sent[1] > 0) {
    ClassData d{accumulate_cells(log, IntensityClass::Decoy, opts.workers), sent[1], clicks[1],
                gain(IntensityClass::Decoy)};
    const bool usable = std::all_of(d.cells.begin(), d.cells.end(),
                                    [](const CellStats& c) { return c.count >= 2; });
    if (usable) dec = d;
  }
  const double q_vac = sent[2] > 0 ? gain(IntensityClass::Vacuum) : opts.known_vacuum_yield;
  return estimate_from_classes(sig, dec, q_vac, sent[2], clicks[2], th);
}

namespace {

void class_fields(std::vector<std::pair<std::string, double>>& out, const std::string& p,
                  const ClassEstimate& e) {
  auto put = [&](const std::string& k, double v) { out.emplace_back(p + "." + k, v); };
  put("sent", static_cast<double>(e.sent));
  put("clicks", static_cast<double>(e.clicks));
  put("gain", e.gain);
  put("dark_fraction", e.dark_fraction);
  for (std::size_t c = 0; c < kCellCount; ++c) {
    const std::string n = "cell." + cell_name(c);
    put(n + ".count", static_cast<double>(e.cells[c].count));
    put(n + ".mean", e.cells[c].mean);
    put(n + ".variance", e.cells[c].variance());
  }
  put("g_plus", e.couplings.g_plus);
  put("g_minus", e.couplings.g_minus);
  put("se_g_plus", e.se_g_plus);
  put("se_g_minus", e.se_g_minus);
  put("r_x_plus", e.raw.r_x_plus);
  put("r_x_minus", e.raw.r_x_minus);
  put("r_z_zero", e.raw.r_z_zero);
  put("r_z_one", e.raw.r_z_one);
  put("delta_x_raw", e.raw.delta_x);
  put("delta_z_raw", e.raw.delta_z);
  put("delta_b_raw", e.raw.delta_b);
  put("delta_x", e.delta_x);
  put("delta_z", e.delta_z);
  put("delta_b", e.delta_b);
  put("se_delta_x", e.se_delta_x);
  put("se_delta_z", e.se_delta_z);
  put("se_delta_b", e.se_delta_b);
}

}  // namespace

std::vector<std::pair<std::string, double>> EstimationReport::fields() const {
  std::vector<std::pair<std::string, double>> out;
  class_fields(out, "signal", signal);
  out.emplace_back("decoy.available", decoy ? 1.0 : 0.0);
  if (decoy) class_fields(out, "decoy", *decoy);
  out.emplace_back("vacuum.sent", static_cast<double>(vacuum_sent));
  out.emplace_back("vacuum.clicks", static_cast<double>(vacuum_clicks));
  out.emplace_back("vacuum.gain", vacuum_gain);
  out.emplace_back("pooled_variance", pooled_variance);
  out.emplace_back("sigma_md_sq_lower", sigma_md_sq_lower);
  out.emplace_back("variance_ratio_x_over_z", variance_ratio_x_over_z);
  out.emplace_back("delta_wm", delta_wm);
  out.emplace_back("qber", qber);
  out.emplace_back("se_qber", se_qber);
  out.emplace_back("verdict.nonnegative", verdicts.nonnegative ? 1.0 : 0.0);
  out.emplace_back("verdict.coupling_bound", verdicts.coupling_bound ? 1.0 : 0.0);
  out.emplace_back("verdict.variance_bound", verdicts.variance_bound ? 1.0 : 0.0);
  out.emplace_back("verdict.variance_equality", verdicts.variance_equality ? 1.0 : 0.0);
  out.emplace_back("verdict.max_variance_ratio", verdicts.max_variance_ratio);
  out.emplace_back("verdict.min_equality_p_value", verdicts.min_equality_p_value);
  out.emplace_back("verdict.min_bound_p_value", verdicts.min_bound_p_value);
  out.emplace_back("qber_exceeded", qber_exceeded ? 1.0 : 0.0);
  out.emplace_back("abort", abort ? 1.0 : 0.0);
  return out;
}

std::string EstimationReport::to_text() const {
  std::string s;
  for (const auto& [k, v] : fields()) s += k + " = " + format_double(v) + "\n";
  return s;
}

}  // namespace wmqkd
