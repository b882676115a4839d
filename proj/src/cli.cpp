#include "wmqkd/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "wmqkd/config.hpp"
#include "wmqkd/format.hpp"

namespace wmqkd {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ProtocolConfig load(const CliInvocation& inv) {
  ProtocolConfig cfg = inv.config_path ? load_config(*inv.config_path) : ProtocolConfig{};
  if (inv.seed) cfg.seed = *inv.seed;
  return cfg;
}

// Writes to <out_dir>/<name> when an output directory is given, else to out.
void emit(const CliInvocation& inv, const std::string& name, const std::string& body, std::ostream& out) {
  if (!inv.out_dir) {
    out << body;
    return;
  }
  fs::create_directories(*inv.out_dir);
  const fs::path path = fs::path(*inv.out_dir) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + path.string() + "'");
  f << body;
  out << "wrote " << path.string() << '\n';
}

std::string as_csv(const std::vector<std::pair<std::string, double>>& fields) {
  std::string head, row;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    head += (i ? "," : "") + fields[i].first;
    row += (i ? "," : "") + format_double(fields[i].second);
  }
  return head + "\n" + row + "\n";
}

std::string as_report(const std::vector<std::pair<std::string, double>>& fields) {
  std::string s;
  for (const auto& [k, v] : fields) s += k + " = " + format_double(v) + "\n";
  return s;
}

std::vector<std::pair<std::string, double>> predictions(const ProtocolConfig& cfg) {
  const AttackConfig a = cfg.effective_attack();
  const EstimationThresholds th = cfg.effective_thresholds();
  std::vector<std::pair<std::string, double>> p;
  switch (a.strategy) {
    case Strategy::None:
      break;
    case Strategy::InterceptResend:
      p.emplace_back("prediction.induced_error", 0.5 * (1.0 - a.p_basis));
      break;
    case Strategy::FakeWmStrategy1:
      p.emplace_back("prediction.qber", strategy1_predicted_qber(*a.alpha, a.p_h));
      p.emplace_back("prediction.variance_ratio", strategy1_predicted_variance_ratio(a.p_h));
      break;
    case Strategy::FakeWmStrategy2: {
      const double ratio = std::max(1.0, std::sqrt(th.sigma_sec_sq) / cfg.pointer.sigma_md);
      p.emplace_back("prediction.alpha_x", *a.alpha_x);
      p.emplace_back("prediction.alpha_z", *a.alpha_z);
      p.emplace_back("prediction.qber_lower_bound", strategy2_qber_lower_bound(a.p_basis, a.p_h, ratio));
      p.emplace_back("prediction.crossover_sigma_ratio",
                     strategy2_crossover_sigma_ratio(a.p_basis * a.p_h, th.delta_sec));
      break;
    }
    case Strategy::BiasedObservables: {
      const ChannelModel ch = cfg.effective_channel();
      const BlochState plus = apply_channel(ch, bb84_state(Basis::X, 0));
      const BlochState zero = apply_channel(ch, bb84_state(Basis::Z, 0));
      const ErrorPair e = biased_error_rates(plus.x, plus.z, zero.x, zero.z, a.p_h, a.phi, a.phi_prime);
      const BiasAngles best = optimal_bias_angles(plus.x, plus.z, zero.x, zero.z, a.p_h);
      p.emplace_back("prediction.delta_x", e.delta_x);
      p.emplace_back("prediction.delta_z", e.delta_z);
      p.emplace_back("prediction.delta_b", e.average());
      p.emplace_back("prediction.optimal_phi", best.phi);
      p.emplace_back("prediction.optimal_phi_prime", best.phi_prime);
      break;
    }
  }
  return p;
}

int do_run(const CliInvocation& inv, ProtocolConfig cfg, std::ostream& out, bool attack) {
  RunResult r;
  if (inv.analytic) {
    if (inv.save_log) throw UsageError("--save-log needs a Monte Carlo run");
    r = run_analytic(cfg);
  } else {
    const Simulation sim = simulate(cfg);
    if (inv.save_log) {
      std::ofstream f(*inv.save_log, std::ios::binary);
      if (!f) throw UsageError("cannot write '" + *inv.save_log + "'");
      sim.log.write_csv(f);
    }
    r = finish_run(cfg, sim);
  }
  auto fields = r.fields();
  if (attack) {
    for (auto& kv : predictions(cfg)) fields.push_back(kv);
  }
  const bool csv = inv.format.value_or(OutputFormat::Report) == OutputFormat::Csv;
  const std::string base = attack ? "attack" : "run";
  emit(inv, base + (csv ? ".csv" : ".txt"), csv ? as_csv(fields) : as_report(fields), out);
  return r.abort ? exit_code::abort : exit_code::ok;
}

int do_sweep(const CliInvocation& inv, std::ostream& out) {
  if (inv.axis.empty()) throw UsageError("sweep needs --axis");
  if (inv.values.empty()) throw UsageError("sweep needs --values");
  if (inv.format == OutputFormat::Report) throw UsageError("sweep only writes csv");
  const ProtocolConfig cfg = load(inv);
  const Table t = sweep(cfg, inv.axis, inv.values, inv.mode);
  emit(inv, "sweep.csv", t.to_csv(), out);
  return exit_code::ok;
}

int do_figures(const CliInvocation& inv, std::ostream& out) {
  if (inv.format == OutputFormat::Report) throw UsageError("figures only writes csv");
  const std::vector<std::string> all = {"fig3", "fig5", "fig6"};
  std::vector<std::string> which = inv.which ? std::vector<std::string>{*inv.which} : all;
  if (!inv.out_dir && which.size() > 1) throw UsageError("figures without --out needs --which");
  for (const auto& w : which) {
    Table t;
    if (w == "fig3") t = figure3();
    else if (w == "fig5") t = figure5();
    else if (w == "fig6") t = figure6();
    else throw UsageError("--which must be fig3, fig5 or fig6");
    emit(inv, w + ".csv", t.to_csv(), out);
  }
  return exit_code::ok;
}

int do_verify(const CliInvocation& inv, std::ostream& out) {
  if (!inv.log_path) throw UsageError("verify needs --log");
  const ProtocolConfig cfg = load(inv);
  std::ifstream f(*inv.log_path, std::ios::binary);
  if (!f) throw UsageError("cannot read '" + *inv.log_path + "'");
  SignalLog log;
  try {
    log = SignalLog::read_csv(f);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  EstimationOptions opts;
  opts.known_vacuum_yield = cfg.system.y0;
  opts.workers = cfg.effective_workers();
  const EstimationReport rep = estimate(log, cfg.effective_thresholds(), opts);
  const bool csv = inv.format.value_or(OutputFormat::Report) == OutputFormat::Csv;
  emit(inv, csv ? "verify.csv" : "verify.txt", csv ? as_csv(rep.fields()) : rep.to_text(), out);
  return rep.abort ? exit_code::abort : exit_code::ok;
}

}  // namespace

int execute(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  try {
    switch (inv.subcommand) {
      case Subcommand::Run:
        return do_run(inv, load(inv), out, false);
      case Subcommand::Attack: {
        ProtocolConfig cfg = load(inv);
        if (inv.strategy) cfg.attack.strategy = parse_strategy(*inv.strategy);
        if (inv.p_basis) cfg.attack.p_basis = *inv.p_basis;
        if (inv.p_h) cfg.attack.p_h = *inv.p_h;
        if (inv.alpha) cfg.attack.alpha = *inv.alpha;
        if (cfg.attack.strategy == Strategy::None) throw UsageError("attack needs a strategy other than none");
        cfg.validate();
        return do_run(inv, cfg, out, true);
      }
      case Subcommand::Sweep:
        return do_sweep(inv, out);
      case Subcommand::Figures:
        return do_figures(inv, out);
      case Subcommand::Verify:
        return do_verify(inv, out);
    }
    throw UsageError("unknown subcommand");
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::usage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::usage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::usage;
  } catch (const EstimationError& e) {
    err << "estimation failed: " << e.what() << '\n';
    return exit_code::internal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return exit_code::internal;
  }
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weak-measurement QKD simulator"};
  app.require_subcommand(1);
  CliInvocation inv;
  std::string format, mode = "analytic";

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", inv.config_path, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", inv.out_dir, "output directory");
    sub->add_option("--seed", inv.seed, "master seed override");
    sub->add_option("--format", format, "csv or report")->check(CLI::IsMember({"csv", "report"}));
  };

  auto* run = app.add_subcommand("run", "run the protocol once");
  common(run);
  run->add_flag("--analytic", inv.analytic, "exact expectations instead of sampling");
  run->add_option("--save-log", inv.save_log, "write the signal log as CSV");

  auto* attack = app.add_subcommand("attack", "run the protocol under an attack");
  common(attack);
  attack->add_flag("--analytic", inv.analytic, "exact expectations instead of sampling");
  attack->add_option("--save-log", inv.save_log, "write the signal log as CSV");
  attack->add_option("--strategy", inv.strategy, "attack strategy");
  attack->add_option("--p-basis", inv.p_basis, "Eve's basis guess probability");
  attack->add_option("--p-h", inv.p_h, "Eve's observable guess probability");
  attack->add_option("--alpha", inv.alpha, "strategy-1 amplification");

  auto* sw = app.add_subcommand("sweep", "sweep one config field");
  common(sw);
  sw->add_option("--axis", inv.axis, "dotted config path")->required();
  sw->add_option("--values", inv.values, "comma-separated values")->delimiter(',')->required();
  sw->add_option("--mode", mode, "analytic or monte_carlo")->check(CLI::IsMember({"analytic", "monte_carlo"}));

  auto* fig = app.add_subcommand("figures", "regenerate figure datasets");
  common(fig);
  fig->add_option("--which", inv.which, "fig3, fig5 or fig6")->check(CLI::IsMember({"fig3", "fig5", "fig6"}));

  auto* ver = app.add_subcommand("verify", "estimation and verification on a signal log");
  common(ver);
  ver->add_option("--log", inv.log_path, "signal log CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_code::ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_code::ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::usage;
  }

  if (*run) inv.subcommand = Subcommand::Run;
  else if (*attack) inv.subcommand = Subcommand::Attack;
  else if (*sw) inv.subcommand = Subcommand::Sweep;
  else if (*fig) inv.subcommand = Subcommand::Figures;
  else inv.subcommand = Subcommand::Verify;
  if (!format.empty()) inv.format = format == "csv" ? OutputFormat::Csv : OutputFormat::Report;
  inv.mode = mode == "monte_carlo" ? SweepMode::MonteCarlo : SweepMode::Analytic;
  return execute(inv, out, err);
}

}  // namespace wmqkd
