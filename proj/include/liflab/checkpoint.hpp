#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "liflab/network.hpp"
#include "liflab/trainer.hpp"

namespace liflab {

using Json = nlohmann::ordered_json;

// Checkpoint layout (JSON, version 1):
// {
//   "format": "liflab-checkpoint", "version": 1,
//   "seed": <init seed>, "init": "uniform-fan-in",
//   "spec": { "input_width", "time_steps",
//             "layers": [{"width", "recurrent"}],
//             "neuron": {"leak", "reset", "threshold", "surrogate_width"},
//             "readout": {"mode", "begin", "end"} },
//   "weights": [ {"feedforward": {"rows", "cols", "data": [row-major]},
//                 "recurrent": {...} | null } ],
//   "config": <experiment config, optional> }
// Doubles are written in shortest round-trip form, so save/load is exact.
Json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const Json& j);

Json network_to_json(const Network<double>& net, const Json& config = nullptr);
Network<double> network_from_json(const Json& j);

void save_checkpoint(const std::filesystem::path& path, const Network<double>& net, const Json& config = nullptr);
Network<double> load_checkpoint(const std::filesystem::path& path, Json* config = nullptr);

// Wall-clock time is left out so the document is a deterministic function of
// (config, seed, data).
Json report_to_json(const TrainReport& report);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace liflab
