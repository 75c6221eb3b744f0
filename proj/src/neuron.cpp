#include "liflab/neuron.hpp"

#include <sstream>
#include <vector>

namespace liflab {

void NeuronConfig::validate() const {
  std::vector<std::string> problems;
  if (!(leak >= 0.0 && leak <= 1.0)) problems.push_back("leak must lie in [0, 1], got " + std::to_string(leak));
  if (!(threshold > 0.0)) problems.push_back("threshold must be > 0, got " + std::to_string(threshold));
  if (!(surrogate_width > 0.0))
    problems.push_back("surrogate_width must be > 0, got " + std::to_string(surrogate_width));
  if (problems.empty()) return;
  std::ostringstream msg;
  msg << "invalid neuron config:";
  for (const auto& p : problems) msg << "\n  " << p;
  throw ConfigError(msg.str());
}

VariantSettings variant_settings(Variant v) {
  switch (v) {
    case Variant::baseline: return {0.3, true, false};
    case Variant::no_leak: return {1.0, true, false};
    case Variant::complete_leak: return {0.0, true, false};
    case Variant::no_reset: return {0.3, false, false};
    case Variant::recurrent: return {0.3, true, true};
  }
  throw ConfigError("unknown variant");
}

Variant parse_variant(std::string_view name) {
  if (name == "baseline") return Variant::baseline;
  if (name == "no-leak") return Variant::no_leak;
  if (name == "complete-leak") return Variant::complete_leak;
  if (name == "no-reset") return Variant::no_reset;
  if (name == "recurrent") return Variant::recurrent;
  throw ConfigError("variant: unknown value '" + std::string(name) +
                    "' (expected baseline | no-leak | complete-leak | no-reset | recurrent | custom)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::no_leak: return "no-leak";
    case Variant::complete_leak: return "complete-leak";
    case Variant::no_reset: return "no-reset";
    case Variant::recurrent: return "recurrent";
  }
  return "?";
}

}  // namespace liflab
