#include "wmqkd/signal_log.hpp"
#include "wmqkd/format.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wmqkd {

namespace {

constexpr std::string_view kHeader = "s_A,b,h,omega,s_B,intensity_class";

[[noreturn]] void bad_line(std::size_t line, const std::string& what) {
  throw std::invalid_argument("signal log line " + std::to_string(line) + ": " + what);
}

long parse_int(std::string_view field, std::size_t line, const char* name) {
  long v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    bad_line(line, std::string("bad integer in column ") + name);
  return v;
}

double parse_double(std::string_view field, std::size_t line) {
  if (field == "nan") return std::nan("");
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    bad_line(line, "bad number in column omega");
  return v;
}

}  // namespace

void SignalLog::append(const SignalLog& other) {
  records_.insert(records_.end(), other.records_.begin(), other.records_.end());
}

SignalLog SignalLog::without_no_clicks() const {
  SignalLog out;
  out.reserve(records_.size());
  for (const auto& r : records_)
    if (r.clicked()) out.push_back(r);
  return out;
}

SignalLog SignalLog::with_outcomes_withheld() const {
  SignalLog out(records_);
  for (auto& r : out.records_)
    if (r.s_b == Outcome::Zero || r.s_b == Outcome::One) r.s_b = Outcome::Withheld;
  return out;
}

void SignalLog::write_csv(std::ostream& os) const {
  os << kHeader << '\n';
  for (const auto& r : records_) {
    os << r.s_a << ',' << static_cast<int>(r.basis) << ',' << static_cast<int>(r.observable) << ','
       << (r.clicked() ? format_double(r.omega) : std::string("nan")) << ','
       << static_cast<int>(r.s_b) << ',' << static_cast<int>(r.intensity) << '\n';
  }
}

SignalLog SignalLog::read_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) bad_line(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) bad_line(1, "expected header '" + std::string(kHeader) + "'");

  SignalLog log;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    std::string_view f[6];
    for (int i = 0; i < 6; ++i) {
      const auto comma = rest.find(',');
      if (i < 5 && comma == std::string_view::npos) bad_line(lineno, "expected 6 columns");
      f[i] = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      if (i == 5 && comma != std::string_view::npos) bad_line(lineno, "expected 6 columns");
    }
    SignalRecord r;
    r.s_a = static_cast<int>(parse_int(f[0], lineno, "s_A"));
    const long b = parse_int(f[1], lineno, "b");
    const long h = parse_int(f[2], lineno, "h");
    r.omega = parse_double(f[3], lineno);
    const long sb = parse_int(f[4], lineno, "s_B");
    const long cls = parse_int(f[5], lineno, "intensity_class");
    if (r.s_a != 0 && r.s_a != 1) bad_line(lineno, "s_A must be 0 or 1");
    if (b != 0 && b != 1) bad_line(lineno, "b must be 0 or 1");
    if (h != 0 && h != 1) bad_line(lineno, "h must be 0 or 1");
    if (sb < -1 || sb > 2) bad_line(lineno, "s_B must be one of -1, 0, 1, 2");
    if (cls < 0 || cls > 2) bad_line(lineno, "intensity_class must be 0, 1 or 2");
    r.basis = static_cast<Basis>(b);
    r.observable = static_cast<Family>(h);
    r.s_b = static_cast<Outcome>(sb);
    r.intensity = static_cast<IntensityClass>(cls);
    if (r.clicked() && !std::isfinite(r.omega)) bad_line(lineno, "omega must be finite for a click");
    log.push_back(r);
  }
  return log;
}

}  // namespace wmqkd
