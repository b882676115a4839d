#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wmqkd/harness.hpp"

namespace wmqkd {

enum class Subcommand { Run, Sweep, Attack, Figures, Verify };
enum class OutputFormat { Csv, Report };

namespace exit_code {
constexpr int ok = 0;
constexpr int usage = 1;
constexpr int internal = 2;
constexpr int abort = 3;
}  // namespace exit_code

struct CliInvocation {
  Subcommand subcommand = Subcommand::Run;
  std::optional<std::string> config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<OutputFormat> format;
  std::optional<std::string> which;  // figures: fig3, fig5 or fig6

  bool analytic = false;                 // run, attack
  std::optional<std::string> save_log;   // run, attack: write the signal log here
  std::optional<std::string> log_path;   // verify: signal log to check

  std::string axis;                      // sweep
  std::vector<double> values;
  SweepMode mode = SweepMode::Analytic;

  std::optional<std::string> strategy;   // attack overrides
  std::optional<double> p_basis;
  std::optional<double> p_h;
  std::optional<double> alpha;
};

int execute(const CliInvocation& inv, std::ostream& out, std::ostream& err);

// Parses argv (CLI11) and executes; returns the process exit status.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wmqkd
