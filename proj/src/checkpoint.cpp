#include "liflab/checkpoint.hpp"

#include <fstream>
#include <sstream>

namespace liflab {

namespace {

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw FormatError("checkpoint: matrix payload has the wrong length");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  return m;
}

}  // namespace

Json spec_to_json(const NetworkSpec& spec) {
  Json layers = Json::array();
  for (const auto& l : spec.layers) layers.push_back({{"width", l.width}, {"recurrent", l.recurrent}});
  return Json{{"input_width", spec.input_width},
              {"time_steps", spec.time_steps},
              {"layers", std::move(layers)},
              {"neuron",
               {{"leak", spec.neuron.leak},
                {"reset", spec.neuron.reset},
                {"threshold", spec.neuron.threshold},
                {"surrogate_width", spec.neuron.surrogate_width}}},
              {"readout",
               {{"mode", to_string(spec.readout.mode)}, {"begin", spec.readout.begin}, {"end", spec.readout.end}}}};
}

NetworkSpec spec_from_json(const Json& j) {
  NetworkSpec s;
  s.input_width = j.at("input_width").get<int>();
  s.time_steps = j.at("time_steps").get<int>();
  for (const auto& l : j.at("layers")) s.layers.push_back({l.at("width").get<int>(), l.at("recurrent").get<bool>()});
  const auto& n = j.at("neuron");
  s.neuron = {n.at("leak").get<double>(), n.at("reset").get<bool>(), n.at("threshold").get<double>(),
              n.at("surrogate_width").get<double>()};
  const auto& r = j.at("readout");
  s.readout = {parse_readout_mode(r.at("mode").get<std::string>()), r.at("begin").get<int>(), r.at("end").get<int>()};
  return s;
}

Json network_to_json(const Network<double>& net, const Json& config) {
  Json weights = Json::array();
  for (const auto& l : net.layers) {
    weights.push_back({{"feedforward", matrix_to_json(l.feedforward)},
                       {"recurrent", l.recurrent ? matrix_to_json(*l.recurrent) : Json(nullptr)}});
  }
  Json j{{"format", "liflab-checkpoint"},
         {"version", 1},
         {"seed", net.seed},
         {"init", "uniform-fan-in"},
         {"spec", spec_to_json(net.spec)},
         {"weights", std::move(weights)}};
  if (!config.is_null()) j["config"] = config;
  return j;
}

Network<double> network_from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "liflab-checkpoint") throw FormatError("checkpoint: unknown format");
    if (j.at("version").get<int>() != 1) throw FormatError("checkpoint: unsupported version");
    Network<double> net;
    net.spec = spec_from_json(j.at("spec"));
    net.seed = j.at("seed").get<std::uint64_t>();
    const auto& weights = j.at("weights");
    if (weights.size() != net.spec.layers.size()) throw FormatError("checkpoint: layer count mismatch");
    for (const auto& w : weights) {
      DenseLifLayer<double> layer;
      layer.feedforward = matrix_from_json(w.at("feedforward"));
      if (!w.at("recurrent").is_null()) layer.recurrent = matrix_from_json(w.at("recurrent"));
      layer.neuron = net.spec.neuron;
      net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Network<double>& net, const Json& config) {
  write_text_file(path, network_to_json(net, config).dump(1) + "\n");
}

Network<double> load_checkpoint(const std::filesystem::path& path, Json* config) {
  const Json j = read_json_file(path);
  if (config) *config = j.contains("config") ? j["config"] : Json(nullptr);
  return network_from_json(j);
}

Json report_to_json(const TrainReport& report) {
  Json epochs = Json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"learning_rate", e.learning_rate},
                      {"loss", e.loss},
                      {"train_accuracy", e.train_accuracy},
                      {"test_accuracy", std::isnan(e.test_accuracy) ? Json(nullptr) : Json(e.test_accuracy)},
                      {"firing_rates", e.firing_rates}});
  }
  const double final_acc = report.final_test_accuracy();
  return Json{{"seed", report.seed},
              {"config_hash", report.config_hash},
              {"initial_loss", report.initial_loss},
              {"final_test_accuracy", std::isnan(final_acc) ? Json(nullptr) : Json(final_acc)},
              {"epochs", std::move(epochs)}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw FormatError("write failed: " + path.string());
}

}  // namespace liflab
