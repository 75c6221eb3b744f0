#include "liflab/network.hpp"

#include <sstream>

namespace liflab {

std::pair<int, int> ReadoutSpec::window(int steps) const {
  const int b = begin;
  const int e = end < 0 ? steps : end;
  if (b < 0 || e > steps || b >= e)
    throw DimensionError("readout window [" + std::to_string(b) + ", " + std::to_string(e) +
                         ") is empty or outside a " + std::to_string(steps) + "-step record");
  return {b, e};
}

std::string to_string(ReadoutMode m) { return m == ReadoutMode::rate ? "rate" : "potential"; }

ReadoutMode parse_readout_mode(const std::string& s) {
  if (s == "rate") return ReadoutMode::rate;
  if (s == "potential") return ReadoutMode::potential;
  throw ConfigError("readout: unknown mode '" + s + "' (expected rate | potential)");
}

void NetworkSpec::validate() const {
  std::vector<std::string> problems;
  if (input_width <= 0) problems.push_back("input_width must be positive");
  if (layers.empty()) problems.push_back("at least one layer is required");
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].width <= 0) problems.push_back("layer " + std::to_string(i) + " width must be positive");
  if (time_steps < 0) problems.push_back("time_steps must be >= 0");
  if (readout.begin < 0) problems.push_back("readout.begin must be >= 0");
  if (readout.end >= 0 && readout.end <= readout.begin) problems.push_back("readout window is empty");
  if (time_steps > 0 && readout.end > time_steps) problems.push_back("readout.end exceeds time_steps");
  try {
    neuron.validate();
  } catch (const ConfigError& e) {
    problems.push_back(e.what());
  }
  if (problems.empty()) return;
  std::ostringstream msg;
  msg << "invalid network spec:";
  for (const auto& p : problems) msg << "\n  " << p;
  throw ConfigError(msg.str());
}

std::string NetworkSpec::describe() const {
  std::ostringstream s;
  s << "Input(" << input_width << ")";
  for (std::size_t i = 0; i < layers.size(); ++i)
    s << (i == 0 ? "--" : "-") << (layers[i].recurrent ? "RFC_LIF(" : "FC_LIF(") << layers[i].width << ")";
  return s.str();
}

}  // namespace liflab
