#include "wmqkd/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace wmqkd {

namespace {

namespace pt = boost::property_tree;

struct Field {
  std::string section;
  std::string key;
  std::function<void(ProtocolConfig&, const std::string&)> apply;
};

double to_double(const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw std::invalid_argument("expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const char* end = v.data() + v.size();
  auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end)
    throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  return out;
}

template <class T>
std::function<void(ProtocolConfig&, const std::string&)> num(T ProtocolConfig::*outer, double T::*inner) {
  return [=](ProtocolConfig& c, const std::string& v) { (c.*outer).*inner = to_double(v); };
}

template <class T>
std::function<void(ProtocolConfig&, const std::string&)> opt(T ProtocolConfig::*outer,
                                                             std::optional<double> T::*inner) {
  return [=](ProtocolConfig& c, const std::string& v) { (c.*outer).*inner = to_double(v); };
}

const std::vector<Field>& schema() {
  using C = ProtocolConfig;
  static const std::vector<Field> fields = {
      {"protocol", "n_signals", [](C& c, const std::string& v) { c.n_signals = to_u64(v); }},
      {"protocol", "seed", [](C& c, const std::string& v) { c.seed = to_u64(v); }},
      {"protocol", "workers", [](C& c, const std::string& v) { c.workers = static_cast<unsigned>(to_u64(v)); }},
      {"protocol", "source",
       [](C& c, const std::string& v) {
         if (v == "single_photon") c.source = SourceKind::SinglePhoton;
         else if (v == "weak_coherent") c.source = SourceKind::WeakCoherent;
         else throw std::invalid_argument("expected single_photon or weak_coherent, got '" + v + "'");
       }},
      {"protocol", "strong_basis",
       [](C& c, const std::string& v) {
         if (v == "z") c.strong_basis = Basis::Z;
         else if (v == "x") c.strong_basis = Basis::X;
         else throw std::invalid_argument("expected z or x, got '" + v + "'");
       }},
      {"pointer", "g", num(&C::pointer, &PointerConfig::g)},
      {"pointer", "sigma_md", num(&C::pointer, &PointerConfig::sigma_md)},
      {"pointer", "sigma_phi", num(&C::pointer, &PointerConfig::sigma_phi)},
      {"pointer", "bias_phi", num(&C::pointer, &PointerConfig::bias_phi)},
      {"channel", "depolarizing_prob", num(&C::channel, &ChannelModel::depolarizing_prob)},
      {"channel", "rotation_theta", num(&C::channel, &ChannelModel::rotation_theta)},
      {"attack", "strategy", [](C& c, const std::string& v) { c.attack.strategy = parse_strategy(v); }},
      {"attack", "p_basis", num(&C::attack, &AttackConfig::p_basis)},
      {"attack", "p_h", num(&C::attack, &AttackConfig::p_h)},
      {"attack", "alpha", opt(&C::attack, &AttackConfig::alpha)},
      {"attack", "alpha_x", opt(&C::attack, &AttackConfig::alpha_x)},
      {"attack", "alpha_z", opt(&C::attack, &AttackConfig::alpha_z)},
      {"attack", "g_eve", opt(&C::attack, &AttackConfig::g_eve)},
      {"attack", "sigma_eve", opt(&C::attack, &AttackConfig::sigma_eve)},
      {"attack", "phi", num(&C::attack, &AttackConfig::phi)},
      {"attack", "phi_prime", num(&C::attack, &AttackConfig::phi_prime)},
      {"attack", "order",
       [](C& c, const std::string& v) {
         if (v == "plus_first") c.attack.plus_first = true;
         else if (v == "minus_first") c.attack.plus_first = false;
         else throw std::invalid_argument("expected plus_first or minus_first, got '" + v + "'");
       }},
      {"system", "eta_d", num(&C::system, &SystemParams::eta_d)},
      {"system", "y0", num(&C::system, &SystemParams::y0)},
      {"system", "loss_db_per_km", num(&C::system, &SystemParams::loss_db_per_km)},
      {"system", "distance_km", num(&C::system, &SystemParams::distance_km)},
      {"system", "f_ec", num(&C::system, &SystemParams::f_ec)},
      {"system", "e_d", num(&C::system, &SystemParams::e_d)},
      {"system", "q", num(&C::system, &SystemParams::q)},
      {"decoy", "mu", num(&C::decoy, &DecoyConfig::mu)},
      {"decoy", "nu", num(&C::decoy, &DecoyConfig::nu)},
      {"intensity", "signal", num(&C::mix, &IntensityMix::signal)},
      {"intensity", "decoy", num(&C::mix, &IntensityMix::decoy)},
      {"intensity", "vacuum", num(&C::mix, &IntensityMix::vacuum)},
      {"thresholds", "delta_sec", opt(&C::thresholds, &ThresholdOverrides::delta_sec)},
      {"thresholds", "g_sec", opt(&C::thresholds, &ThresholdOverrides::g_sec)},
      {"thresholds", "sigma_sec_sq", opt(&C::thresholds, &ThresholdOverrides::sigma_sec_sq)},
      {"thresholds", "variance_equality_significance",
       opt(&C::thresholds, &ThresholdOverrides::variance_equality_significance)},
      {"thresholds", "bound_significance", opt(&C::thresholds, &ThresholdOverrides::bound_significance)},
      {"thresholds", "sigma_phi_upper", opt(&C::thresholds, &ThresholdOverrides::sigma_phi_upper)},
  };
  return fields;
}

// ptree drops line numbers, so locate a key by scanning the raw text.
int line_of(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  int n = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      current = trim(t.substr(1, t.size() - 2));
      if (key.empty() && current == section) return n;
      continue;
    }
    const auto eq = t.find('=');
    if (!key.empty() && current == section && eq != std::string::npos && trim(t.substr(0, eq)) == key) return n;
  }
  return 0;
}

[[noreturn]] void fail(const std::string& text, const std::string& section, const std::string& key,
                       const std::string& what) {
  const int line = line_of(text, section, key);
  std::string where = line > 0 ? "line " + std::to_string(line) + ": " : std::string();
  throw ConfigError("config " + where + (key.empty() ? "[" + section + "]" : section + "." + key) + ": " + what);
}

}  // namespace

ProtocolConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  ProtocolConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) fail(text, section, "", "key outside any section");
    bool known_section = false;
    for (const auto& f : schema()) known_section = known_section || f.section == section;
    if (!known_section) fail(text, section, "", "unknown section");
    for (const auto& [key, value] : body) {
      const Field* field = nullptr;
      for (const auto& f : schema())
        if (f.section == section && f.key == key) field = &f;
      if (!field) fail(text, section, key, "unknown key");
      try {
        field->apply(cfg, value.data());
      } catch (const std::invalid_argument& e) {
        fail(text, section, key, e.what());
      }
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    // Validation messages start with "section.key" when a single field is at fault.
    const auto dot = msg.find('.');
    const auto space = msg.find(' ');
    if (dot != std::string::npos && space != std::string::npos && dot < space) {
      const std::string section = msg.substr(0, dot);
      const std::string key = msg.substr(dot + 1, space - dot - 1);
      const int line = line_of(text, section, key);
      if (line > 0) throw ConfigError("config line " + std::to_string(line) + ": " + msg);
    }
    throw ConfigError("config: " + msg);
  }
  return cfg;
}

ProtocolConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : schema()) out.push_back(f.section + "." + f.key);
  return out;
}

}  // namespace wmqkd
