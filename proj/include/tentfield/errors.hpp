#pragma once

#include <stdexcept>
#include <string>

namespace tentfield {

// Distinct causes of a rejected configuration; the numeric values are reported.
enum class ConfigIssue {
  General = 1,
  Parse = 2,
  UnknownField = 3,
  FieldType = 4,
  ExponentRange = 5,
  ExponentSum = 6,
  Smoothness = 7,
  ConeAngle = 8,
  Grid = 9,
  Curve = 10,
};

const char* to_string(ConfigIssue issue);

// Invalid or under-resolved run parameters; maps to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what, ConfigIssue issue = ConfigIssue::General,
                       std::string field = {})
      : std::runtime_error(what), issue(issue), field(std::move(field)) {}

  ConfigIssue issue;
  std::string field;  // dotted path of the offending config entry, when known
};

// Inputs for which a quantity is undefined (zero sizes, empty sets).
struct DegenerateInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tentfield
