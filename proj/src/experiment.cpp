#include "liflab/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "liflab/seed.hpp"

namespace liflab {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kDatasets{"xor", "nmnist", "mnist", "shd-csv", "ssc-csv"};

constexpr int kSpeechUnits = 700;

}  // namespace

ExperimentConfig defaults_for(const std::string& dataset) {
  ExperimentConfig c;
  c.dataset = dataset;
  if (dataset == "xor") {
    // XOR column of the hyper-parameter table; 40-64-2 topology.
    c.hidden = {64};
    c.epochs = 150;
    c.batch_size = 500;
    c.learning_rate = 1e-2;
    c.threshold = 0.5;
    c.surrogate_width = 0.5;
    c.lr_step_size = 50;
    c.lr_gamma = 0.1;
    c.readout = "potential";
  } else if (dataset == "shd-csv" || dataset == "ssc-csv") {
    const bool shd = dataset == "shd-csv";
    c.hidden = {shd ? 64 : 200};
    c.epochs = 100;
    c.batch_size = 100;
    c.learning_rate = 1e-2;
    c.threshold = 0.5;
    c.surrogate_width = 0.5;
    c.lr_step_size = shd ? 20 : 25;
    c.lr_gamma = shd ? 0.5 : 0.1;
    c.dt_ms = 10.0;
  } else if (dataset == "nmnist" || dataset == "mnist") {
    c.hidden = {512};
    c.epochs = 100;
    c.batch_size = 512;
    c.learning_rate = 1e-4;
    c.threshold = 0.3;
    c.surrogate_width = 0.25;
    c.lr_step_size = 25;
    c.lr_gamma = 0.1;
    c.dt_ms = 3.0;
  }
  return c;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> p;
  const bool custom = variant == "custom";
  if (!custom) {
    try {
      parse_variant(variant);
    } catch (const std::exception&) {
      p.push_back("variant: unknown value '" + variant +
                  "' (expected baseline, no-leak, complete-leak, no-reset, recurrent or custom)");
    }
    if (leak || reset || recurrent)
      p.push_back("leak/reset/recurrent: only allowed with variant 'custom' (named variants fix them)");
  } else {
    if (!leak) p.push_back("leak: required for variant 'custom'");
    if (!reset) p.push_back("reset: required for variant 'custom'");
    if (!recurrent) p.push_back("recurrent: required for variant 'custom'");
  }
  if (leak && !(*leak >= 0.0 && *leak <= 1.0)) p.push_back("leak: must lie in [0, 1]");
  if (!kDatasets.contains(dataset))
    p.push_back("dataset: unknown value '" + dataset + "' (expected xor, nmnist, mnist, shd-csv or ssc-csv)");
  if (dataset != "xor" && data_dir.empty()) p.push_back("data_dir: required for dataset '" + dataset + "'");
  if (hidden.empty()) p.push_back("hidden: at least one hidden layer is required");
  for (int h : hidden)
    if (h < 1) p.push_back("hidden: layer widths must be >= 1");
  if (readout != "rate" && readout != "potential") p.push_back("readout: expected 'rate' or 'potential'");
  if (readout_begin < -1) p.push_back("readout_begin: must be >= 0 (or -1 for automatic)");
  if (readout_end < -1 || readout_end == 0) p.push_back("readout_end: must be >= 1 (or -1 for the last step)");
  if (epochs < 1) p.push_back("epochs: must be >= 1");
  if (batch_size < 1) p.push_back("batch_size: must be >= 1");
  if (!(learning_rate > 0)) p.push_back("learning_rate: must be > 0");
  if (lr_step_size < 1) p.push_back("lr_step_size: must be >= 1");
  if (!(lr_gamma > 0)) p.push_back("lr_gamma: must be > 0");
  if (!std::isfinite(threshold)) p.push_back("threshold: must be finite");
  if (!(surrogate_width > 0)) p.push_back("surrogate_width: must be > 0");
  if (max_grad_norm < 0) p.push_back("max_grad_norm: must be >= 0");
  if (micro_batch < 0) p.push_back("micro_batch: must be >= 0");
  if (!(scale > 0)) p.push_back("scale: must be > 0");
  if (output_dir.empty()) p.push_back("output_dir: must not be empty");
  if (!(dt_ms > 0)) p.push_back("dt_ms: must be > 0");
  if (time_steps < 1) p.push_back("time_steps: must be >= 1");
  if (dataset == "xor") {
    if (xor_train < 4 || xor_train % 4) p.push_back("xor_train: must be a positive multiple of 4");
    if (xor_test < 4 || xor_test % 4) p.push_back("xor_test: must be a positive multiple of 4");
    try {
      xor_task.validate();
    } catch (const ConfigError& e) {
      p.push_back(e.what());
    }
  }
  if (p.empty()) return;
  std::string msg = "invalid experiment config:";
  for (const auto& s : p) msg += "\n  " + s;
  throw ConfigError(msg);
}

VariantSettings ExperimentConfig::resolved_variant() const {
  if (variant == "custom") return {leak.value_or(0.3), reset.value_or(true), recurrent.value_or(false)};
  return variant_settings(parse_variant(variant));
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.epochs = std::max(1, static_cast<int>(std::lround(epochs * scale)));
  t.lr_step_size = std::max(1, static_cast<int>(std::lround(lr_step_size * scale)));
  t.batch_size = batch_size;
  t.learning_rate = learning_rate;
  t.lr_gamma = lr_gamma;
  t.max_grad_norm = max_grad_norm;
  t.micro_batch = micro_batch;
  t.evaluate_each_epoch = evaluate_each_epoch;
  t.seed = child_seed(seed, 4);
  return t;
}

NetworkSpec ExperimentConfig::network_spec(int input_width, int num_classes, int steps) const {
  const auto v = resolved_variant();
  NetworkSpec s;
  s.input_width = input_width;
  for (int h : hidden) s.layers.push_back({h, v.recurrent});
  s.layers.push_back({num_classes, false});
  s.time_steps = dataset == "xor" ? steps : 0;
  s.neuron = {v.leak, v.reset, threshold, surrogate_width};
  s.readout.mode = parse_readout_mode(readout);
  s.readout.begin = readout_begin >= 0 ? readout_begin : (dataset == "xor" ? xor_task.second_cue_begin() : 0);
  s.readout.end = readout_end;
  return s;
}

fs::path ExperimentConfig::resolved_cache_dir() const { return cache_dir; }

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["variant"] = c.variant;
  j["leak"] = c.leak ? Json(*c.leak) : Json(nullptr);
  j["reset"] = c.reset ? Json(*c.reset) : Json(nullptr);
  j["recurrent"] = c.recurrent ? Json(*c.recurrent) : Json(nullptr);
  j["dataset"] = c.dataset;
  j["data_dir"] = c.data_dir;
  j["hidden"] = c.hidden;
  j["readout"] = c.readout;
  j["readout_begin"] = c.readout_begin;
  j["readout_end"] = c.readout_end;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["lr_step_size"] = c.lr_step_size;
  j["lr_gamma"] = c.lr_gamma;
  j["threshold"] = c.threshold;
  j["surrogate_width"] = c.surrogate_width;
  j["max_grad_norm"] = c.max_grad_norm;
  j["micro_batch"] = c.micro_batch;
  j["scale"] = c.scale;
  j["evaluate_each_epoch"] = c.evaluate_each_epoch;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["cache_dir"] = c.cache_dir;
  j["dt_ms"] = c.dt_ms;
  j["event_counts"] = c.event_counts;
  j["time_steps"] = c.time_steps;
  j["train_limit"] = c.train_limit;
  j["test_limit"] = c.test_limit;
  j["xor_train"] = c.xor_train;
  j["xor_test"] = c.xor_test;
  j["xor_n_input"] = c.xor_task.n_input;
  j["xor_cue"] = c.xor_task.cue_duration;
  j["xor_delay"] = c.xor_task.delay_duration;
  j["xor_high"] = c.xor_task.high_rate;
  j["xor_low"] = c.xor_task.low_rate;
  j["xor_noise"] = c.xor_task.noise_rate;
  return j;
}

void apply_config_json(ExperimentConfig& c, const Json& j, std::vector<std::string>& problems) {
  if (j.is_null()) return;
  if (!j.is_object()) {
    problems.push_back("config: expected a JSON object");
    return;
  }
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "$schema") continue;
      if (key == "variant") c.variant = value.get<std::string>();
      else if (key == "leak") c.leak = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
      else if (key == "reset") c.reset = value.is_null() ? std::nullopt : std::optional<bool>(value.get<bool>());
      else if (key == "recurrent") c.recurrent = value.is_null() ? std::nullopt : std::optional<bool>(value.get<bool>());
      else if (key == "dataset") c.dataset = value.get<std::string>();
      else if (key == "data_dir") c.data_dir = value.get<std::string>();
      else if (key == "hidden") c.hidden = value.get<std::vector<int>>();
      else if (key == "readout") c.readout = value.get<std::string>();
      else if (key == "readout_begin") c.readout_begin = value.get<int>();
      else if (key == "readout_end") c.readout_end = value.get<int>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "lr_step_size") c.lr_step_size = value.get<int>();
      else if (key == "lr_gamma") c.lr_gamma = value.get<double>();
      else if (key == "threshold") c.threshold = value.get<double>();
      else if (key == "surrogate_width") c.surrogate_width = value.get<double>();
      else if (key == "max_grad_norm") c.max_grad_norm = value.get<double>();
      else if (key == "micro_batch") c.micro_batch = value.get<int>();
      else if (key == "scale") c.scale = value.get<double>();
      else if (key == "evaluate_each_epoch") c.evaluate_each_epoch = value.get<bool>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "output_dir") c.output_dir = value.get<std::string>();
      else if (key == "cache_dir") c.cache_dir = value.get<std::string>();
      else if (key == "dt_ms") c.dt_ms = value.get<double>();
      else if (key == "event_counts") c.event_counts = value.get<bool>();
      else if (key == "time_steps") c.time_steps = value.get<int>();
      else if (key == "train_limit") c.train_limit = value.get<std::size_t>();
      else if (key == "test_limit") c.test_limit = value.get<std::size_t>();
      else if (key == "xor_train") c.xor_train = value.get<int>();
      else if (key == "xor_test") c.xor_test = value.get<int>();
      else if (key == "xor_n_input") c.xor_task.n_input = value.get<int>();
      else if (key == "xor_cue") c.xor_task.cue_duration = value.get<int>();
      else if (key == "xor_delay") c.xor_task.delay_duration = value.get<int>();
      else if (key == "xor_high") c.xor_task.high_rate = value.get<double>();
      else if (key == "xor_low") c.xor_task.low_rate = value.get<double>();
      else if (key == "xor_noise") c.xor_task.noise_rate = value.get<double>();
      else problems.push_back(key + ": unknown config key");
    } catch (const nlohmann::json::exception&) {
      problems.push_back(key + ": wrong type (" + std::string(value.type_name()) + ")");
    }
  }
}

ExperimentConfig resolve_config(const Json& file, const Json& flags, const char* env_cache_dir) {
  std::string dataset = "xor";
  for (const Json* src : {&file, &flags})
    if (src->is_object() && src->contains("dataset") && (*src)["dataset"].is_string())
      dataset = (*src)["dataset"].get<std::string>();
  ExperimentConfig c = defaults_for(dataset);
  std::vector<std::string> problems;
  apply_config_json(c, file, problems);
  if (env_cache_dir && *env_cache_dir) c.cache_dir = env_cache_dir;
  apply_config_json(c, flags, problems);
  if (!problems.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& s : problems) msg += "\n  " + s;
    throw ConfigError(msg);
  }
  c.validate();
  return c;
}

std::string config_hash(const ExperimentConfig& cfg) {
  Json j = config_to_json(cfg);
  j.erase("output_dir");
  j.erase("cache_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

namespace {

std::string dt_tag(double dt) {
  std::ostringstream s;
  s << dt;
  return s.str();
}

// Loads one split, going through the SNNF cache when a cache directory is set.
template <typename Loader>
Dataset cached(const ExperimentConfig& cfg, const std::string& split, std::size_t limit, Loader&& load) {
  const fs::path dir = cfg.resolved_cache_dir();
  fs::path file;
  if (!dir.empty()) {
    std::ostringstream name;
    name << cfg.dataset << '-' << split << "-dt" << dt_tag(cfg.dt_ms) << "-n" << limit << (cfg.event_counts ? "-counts" : "")
         << ".snnf";
    file = dir / name.str();
    if (fs::exists(file)) return read_frame_file(file);
  }
  Dataset d = load();
  if (!file.empty()) {
    fs::create_directories(dir);
    const fs::path tmp = file.string() + ".tmp";
    write_frame_file(tmp, d, cfg.event_counts ? FrameDtype::counts : FrameDtype::binary);
    fs::rename(tmp, file);
  }
  return d;
}

fs::path require_path(const fs::path& p, const std::string& what) {
  if (!fs::exists(p))
    throw ConfigError(what + " not found at " + p.string() + " (set data_dir / --data-dir to the dataset root)");
  return p;
}

}  // namespace

DataSplits load_data(const ExperimentConfig& cfg) {
  DataSplits d;
  const fs::path root = cfg.data_dir;
  if (cfg.dataset == "xor") {
    d.train = generate_xor_dataset(cfg.xor_task, cfg.xor_train, child_seed(cfg.seed, 1));
    d.test = generate_xor_dataset(cfg.xor_task, cfg.xor_test, child_seed(cfg.seed, 2));
  } else if (cfg.dataset == "nmnist") {
    for (auto [split, folder, limit, out] :
         {std::tuple{"train", "Train", cfg.train_limit, &d.train}, std::tuple{"test", "Test", cfg.test_limit, &d.test}}) {
      const fs::path dir = require_path(root / folder, std::string("N-MNIST ") + folder + " directory");
      *out = cached(cfg, split, limit, [&] { return frames_from_streams(load_nmnist_split(dir, limit), cfg.dt_ms, cfg.event_counts); });
    }
  } else if (cfg.dataset == "mnist") {
    d.train = load_mnist_split(require_path(root / "train-images-idx3-ubyte", "MNIST training images"),
                               require_path(root / "train-labels-idx1-ubyte", "MNIST training labels"), cfg.time_steps,
                               cfg.train_limit);
    d.test = load_mnist_split(require_path(root / "t10k-images-idx3-ubyte", "MNIST test images"),
                              require_path(root / "t10k-labels-idx1-ubyte", "MNIST test labels"), cfg.time_steps,
                              cfg.test_limit);
  } else {
    for (auto [split, limit, out] : {std::tuple{"train", cfg.train_limit, &d.train}, std::tuple{"test", cfg.test_limit, &d.test}}) {
      const fs::path manifest = require_path(root / (std::string(split) + ".csv"), std::string(split) + " manifest");
      *out = cached(cfg, split, limit,
                    [&] { return load_spike_csv_manifest(manifest, kSpeechUnits, cfg.dt_ms, limit, cfg.event_counts); });
    }
    const int classes = std::max(d.train.num_classes, d.test.num_classes);
    d.train.num_classes = d.test.num_classes = classes;
  }
  return d;
}

std::string artifact_stem(const ExperimentConfig& cfg) {
  return cfg.dataset + "-" + cfg.variant + "-" + config_hash(cfg) + "-s" + std::to_string(cfg.seed);
}

std::string metrics_csv(const ExperimentConfig& cfg, const TrainReport& report) {
  std::ostringstream out;
  out << "# config: " << config_to_json(cfg).dump() << '\n';
  out << "# seed: " << cfg.seed << '\n';
  out << "# config_hash: " << report.config_hash << '\n';
  out << "epoch,learning_rate,loss,train_accuracy,test_accuracy";
  const std::size_t layers = report.epochs.empty() ? 0 : report.epochs.front().firing_rates.size();
  for (std::size_t n = 0; n < layers; ++n) out << ",firing_rate_layer" << n;
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& e : report.epochs) {
    out << e.epoch << ',' << e.learning_rate << ',' << e.loss << ',' << e.train_accuracy << ',';
    if (!std::isnan(e.test_accuracy)) out << e.test_accuracy;
    for (double r : e.firing_rates) out << ',' << r;
    out << '\n';
  }
  return out.str();
}

RunResult run(const ExperimentConfig& cfg) { return run(cfg, load_data(cfg)); }

RunResult run(const ExperimentConfig& cfg, const DataSplits& data) {
  cfg.validate();
  if (data.train.size() == 0) throw ConfigError("training set is empty");
  const int classes = std::max(data.train.num_classes, data.test.num_classes);
  const NetworkSpec spec = cfg.network_spec(data.train.width, classes, data.train.max_steps());
  auto net = init_network<double>(spec, child_seed(cfg.seed, 3));

  RunResult r;
  auto [trained, report] = train_run(std::move(net), cfg.train_config(), data.train, data.test.size() ? &data.test : nullptr);
  report.seed = cfg.seed;
  report.config_hash = config_hash(cfg);
  r.net = std::move(trained);
  r.report = std::move(report);
  r.test_accuracy = data.test.size() ? evaluate(r.net, data.test).accuracy : std::numeric_limits<double>::quiet_NaN();

  const Json config = config_to_json(cfg);
  const fs::path dir = cfg.output_dir;
  const std::string stem = artifact_stem(cfg);
  r.checkpoint_path = dir / (stem + ".ckpt.json");
  r.report_path = dir / (stem + ".report.json");
  r.metrics_path = dir / (stem + ".metrics.csv");
  save_checkpoint(r.checkpoint_path, r.net, config);
  Json rep = report_to_json(r.report);
  rep["config"] = config;
  rep["test_accuracy"] = std::isnan(r.test_accuracy) ? Json(nullptr) : Json(r.test_accuracy);
  write_text_file(r.report_path, rep.dump(2) + "\n");
  write_text_file(r.metrics_path, metrics_csv(cfg, r.report));
  return r;
}

std::vector<double> default_leak_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
  return g;
}

ExperimentConfig leak_sweep_config(const ExperimentConfig& base, double leak, std::size_t index) {
  const auto v = base.resolved_variant();
  ExperimentConfig c = base;
  c.variant = "custom";
  c.leak = leak;
  c.reset = v.reset;
  c.recurrent = v.recurrent;
  c.seed = child_seed(base.seed, index);
  return c;
}

std::vector<LeakSweepRow> sweep_leakage(const ExperimentConfig& base, const std::vector<double>& leaks, int jobs) {
  base.validate();
  std::vector<LeakSweepRow> rows(leaks.size());
  std::vector<std::exception_ptr> errors(leaks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < leaks.size(); i = next++) {
      try {
        const auto cfg = leak_sweep_config(base, leaks[i], i);
        const auto res = run(cfg);
        rows[i] = {leaks[i], cfg.seed, config_hash(cfg), res.test_accuracy};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(leaks.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::string sweep_csv(const std::vector<LeakSweepRow>& rows) {
  std::ostringstream out;
  out << "leak,seed,config_hash,test_accuracy\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) out << r.leak << ',' << r.seed << ',' << r.config_hash << ',' << r.test_accuracy << '\n';
  return out.str();
}

}  // namespace liflab
