#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "liflab/checkpoint.hpp"

using namespace liflab;
namespace fs = std::filesystem;

TEST_CASE("checkpoint round trip is exact") {
  NetworkSpec s;
  s.input_width = 7;
  s.layers = {{5, true}, {4, false}, {3, false}};
  s.time_steps = 12;
  s.neuron = {0.7, false, 0.3, 0.25};
  s.readout = {ReadoutMode::potential, 2, 9};
  auto net = init_network(s, 1234);
  net.layers[1].feedforward(0, 0) = 1.0 / 3.0;
  net.layers[1].feedforward(1, 1) = -1e-300;

  const Json config = {{"variant", "custom"}, {"seed", 9}};
  const Json j = network_to_json(net, config);
  CHECK(j["format"] == "liflab-checkpoint");
  CHECK(j["version"] == 1);
  CHECK(j["init"] == "uniform-fan-in");
  CHECK(j["weights"][1]["recurrent"].is_null());
  CHECK(j["weights"][0]["feedforward"]["data"].size() == 35);
  // Row-major layout.
  CHECK(j["weights"][0]["feedforward"]["data"][1].get<double>() == net.layers[0].feedforward(0, 1));

  const fs::path path = fs::temp_directory_path() / "liflab-test-ckpt" / "net.json";
  save_checkpoint(path, net, config);
  Json back_config;
  const auto back = load_checkpoint(path, &back_config);
  CHECK(back_config == config);
  CHECK(back.spec == net.spec);
  for (std::size_t k = 0; k < net.parameters().size(); ++k) CHECK(*back.parameters()[k] == *net.parameters()[k]);
  CHECK(back.layers[2].neuron == s.neuron);
  CHECK(spec_from_json(spec_to_json(s)) == s);
  fs::remove_all(path.parent_path());
}

TEST_CASE("malformed checkpoints raise format errors") {
  NetworkSpec s;
  s.input_width = 2;
  s.layers = {{2, false}};
  const Json good = network_to_json(init_network(s, 0));
  Json bad = good;
  bad["format"] = "other";
  CHECK_THROWS_AS(network_from_json(bad), FormatError);
  bad = good;
  bad["weights"][0]["feedforward"]["data"].erase(0);
  CHECK_THROWS_AS(network_from_json(bad), FormatError);
  bad = good;
  bad["spec"]["layers"][0]["width"] = 3;
  CHECK_THROWS_AS(network_from_json(bad), FormatError);
  bad = good;
  bad.erase("spec");
  CHECK_THROWS_AS(network_from_json(bad), FormatError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/liflab.json"), FormatError);
}

TEST_CASE("report json leaves out wall clock and maps NaN to null") {
  TrainReport r;
  r.seed = 3;
  r.config_hash = "abc";
  r.initial_loss = 0.69;
  EpochRecord e;
  e.epoch = 1;
  e.loss = 0.5;
  e.test_accuracy = std::nan("");
  e.seconds = 12.5;
  e.firing_rates = {0.1, 0.2};
  r.epochs.push_back(e);
  const Json j = report_to_json(r);
  const std::string text = j.dump();
  CHECK(text.find("seconds") == std::string::npos);
  CHECK(j["epochs"][0]["test_accuracy"].is_null());
  CHECK(j["seed"] == 3);
  CHECK(j["config_hash"] == "abc");
}
