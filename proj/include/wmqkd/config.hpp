#pragma once

#include <stdexcept>
#include <string>

#include "wmqkd/harness.hpp"

namespace wmqkd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// INI text with sections [protocol], [pointer], [channel], [attack], [system],
// [decoy], [intensity] and [thresholds]. Keys not given keep their defaults;
// unknown sections or keys are errors. Messages name the line and field.
ProtocolConfig parse_config(const std::string& text);
ProtocolConfig load_config(const std::string& path);

// Every recognised key, as "section.key", in schema order.
std::vector<std::string> config_keys();

}  // namespace wmqkd
