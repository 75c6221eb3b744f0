// liflab command-line front end.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "liflab/analysis.hpp"
#include "liflab/attacks.hpp"
#include "liflab/checkpoint.hpp"
#include "liflab/experiment.hpp"
#include "liflab/seed.hpp"

namespace fs = std::filesystem;
using namespace liflab;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Config-field flags attached to a subcommand; only flags given on the
// command line end up in the override document.
struct ConfigFlags {
  std::string config_file;
  std::vector<std::function<void(Json&)>> setters;

  template <typename T>
  void add(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help);
    if constexpr (std::is_same_v<T, std::vector<int>>) opt->delimiter(',');
    setters.push_back([opt, value, key](Json& j) {
      if (opt->count()) j[key] = *value;
    });
  }

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "Flat JSON config file (see schema/config.schema.json)")
        ->check(CLI::ExistingFile);
    add<std::string>(app, "--variant", "variant", "baseline | no-leak | complete-leak | no-reset | recurrent | custom");
    add<double>(app, "--leak", "leak", "Leakage coefficient k_tau in [0,1] (custom variant)");
    add<bool>(app, "--reset", "reset", "Reset on/off (custom variant)");
    add<bool>(app, "--recurrent", "recurrent", "Recurrent hidden layers (custom variant)");
    add<std::string>(app, "--dataset", "dataset", "xor | nmnist | mnist | shd-csv | ssc-csv");
    add<std::string>(app, "--data-dir", "data_dir", "Dataset root directory");
    add<std::vector<int>>(app, "--hidden", "hidden", "Hidden layer widths, comma separated");
    add<std::string>(app, "--readout", "readout", "rate | potential");
    add<int>(app, "--readout-begin", "readout_begin", "First readout step (-1: automatic)");
    add<int>(app, "--readout-end", "readout_end", "One past the last readout step (-1: T)");
    add<int>(app, "--epochs", "epochs", "Training epochs (before --scale)");
    add<int>(app, "--batch-size", "batch_size", "Mini-batch size");
    add<double>(app, "--lr", "learning_rate", "Base learning rate");
    add<int>(app, "--lr-step", "lr_step_size", "StepLR period in epochs (before --scale)");
    add<double>(app, "--lr-gamma", "lr_gamma", "StepLR decay factor");
    add<double>(app, "--threshold", "threshold", "Firing threshold u_th");
    add<double>(app, "--surrogate-width", "surrogate_width", "Surrogate half-width a");
    add<double>(app, "--max-grad-norm", "max_grad_norm", "Global gradient clipping norm (0: off)");
    add<int>(app, "--micro-batch", "micro_batch", "Samples per forward pass (0: whole batch)");
    add<double>(app, "--scale", "scale", "Multiplier for epochs and the StepLR period");
    add<bool>(app, "--eval-each-epoch", "evaluate_each_epoch", "Evaluate the test split after every epoch");
    add<std::uint64_t>(app, "--seed", "seed", "Master seed");
    add<std::string>(app, "--output-dir", "output_dir", "Artifact directory");
    add<std::string>(app, "--cache-dir", "cache_dir", "Frame cache directory (overrides LIFLAB_CACHE_DIR)");
    add<double>(app, "--dt-ms", "dt_ms", "Event integration bin width in ms");
    add<bool>(app, "--event-counts", "event_counts", "Keep per-bin event counts instead of binary frames");
    add<int>(app, "--time-steps", "time_steps", "Steps per static MNIST sample");
    add<std::size_t>(app, "--train-limit", "train_limit", "Use at most this many training samples (0: all)");
    add<std::size_t>(app, "--test-limit", "test_limit", "Use at most this many test samples (0: all)");
    add<int>(app, "--xor-train", "xor_train", "XOR training trials");
    add<int>(app, "--xor-test", "xor_test", "XOR test trials");
    add<int>(app, "--xor-n-input", "xor_n_input", "XOR input neurons");
    add<int>(app, "--xor-cue", "xor_cue", "XOR cue duration (steps)");
    add<int>(app, "--xor-delay", "xor_delay", "XOR delay duration (steps)");
    add<double>(app, "--xor-high", "xor_high", "XOR high firing probability");
    add<double>(app, "--xor-low", "xor_low", "XOR low firing probability");
    add<double>(app, "--xor-noise", "xor_noise", "XOR delay noise probability");
  }

  Json overrides() const {
    Json j = Json::object();
    for (const auto& s : setters) s(j);
    return j;
  }

  // base: embedded config of a checkpoint (or null).
  ExperimentConfig resolve(const Json& base = nullptr) const {
    Json file = base.is_null() ? Json::object() : base;
    if (!config_file.empty()) {
      const Json loaded = read_json_file(config_file);
      if (!loaded.is_object()) throw ConfigError(config_file + ": expected a JSON object");
      for (const auto& [k, v] : loaded.items()) file[k] = v;
    }
    return resolve_config(file, overrides(), std::getenv("LIFLAB_CACHE_DIR"));
  }
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size()) throw ConfigError("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
    std::cerr << "wrote " << path << '\n';
  }
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

struct CheckpointInput {
  Network<double> net;
  ExperimentConfig cfg;
};

CheckpointInput open_checkpoint(const std::string& path, const ConfigFlags& flags) {
  Json embedded;
  auto net = load_checkpoint(path, &embedded);
  return {std::move(net), flags.resolve(embedded)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"liflab: LIF spiking network experiments (train, evaluate, attack, analyse)"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // train
  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "Train one configuration and write checkpoint, report and metrics CSV");
  train_flags.attach(train);

  // eval
  ConfigFlags eval_flags;
  std::string eval_ckpt, eval_dts, eval_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on its test split, or across dt values (N-MNIST)");
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--dt", eval_dts, "Comma-separated bin widths in ms; re-bins the raw N-MNIST test streams");
  eval->add_option("--out", eval_out, "Output CSV path (default: stdout)");
  eval_flags.attach(eval);

  // attack
  ConfigFlags attack_flags;
  std::string attack_ckpt, attack_report, attack_csv;
  AttackConfig attack_cfg;
  std::size_t attack_limit = 0;
  auto* attack = app.add_subcommand("attack", "Gradient-guided spike-flip attack on the test split");
  attack->add_option("--checkpoint", attack_ckpt, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  attack->add_option("--report", attack_report, "AttackReport JSON output (default: stdout)");
  attack->add_option("--csv", attack_csv, "Per-sample CSV output");
  attack->add_option("--max-iterations", attack_cfg.max_iterations, "Iteration budget per sample")
      ->capture_default_str();
  attack->add_option("--flips", attack_cfg.flips_per_iteration, "Flips per iteration")->capture_default_str();
  attack->add_flag("--unbounded", attack_cfg.unbounded, "Raise the budget until every sample is misclassified");
  attack->add_option("--attack-seed", attack_cfg.seed, "Tie-break seed")->capture_default_str();
  attack->add_option("--limit", attack_limit, "Attack only the first N test samples (0: all)");
  attack_flags.attach(attack);

  // eventdrop
  ConfigFlags drop_flags;
  std::string drop_ckpt, drop_rhos = "0,0.1,0.2,0.3,0.4,0.5", drop_out;
  std::uint64_t drop_seed = 0;
  auto* drop = app.add_subcommand("eventdrop", "Test accuracy under EventDrop at several drop probabilities");
  drop->add_option("--checkpoint", drop_ckpt, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  drop->add_option("--rho", drop_rhos, "Comma-separated drop probabilities")->capture_default_str();
  drop->add_option("--drop-seed", drop_seed, "EventDrop seed")->capture_default_str();
  drop->add_option("--out", drop_out, "Output CSV path (default: stdout)");
  drop_flags.attach(drop);

  // landscape
  ConfigFlags land_flags;
  std::string land_ckpt, land_out;
  LandscapeOptions land_opts;
  std::size_t land_probe = 1024;
  auto* land = app.add_subcommand("landscape", "2-D loss landscape scan around a checkpoint");
  land->add_option("--checkpoint", land_ckpt, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  land->add_option("--grid", land_opts.resolution, "Points per axis")->capture_default_str();
  land->add_option("--extent", land_opts.extent, "Half-width of the grid")->capture_default_str();
  land->add_option("--direction-seed", land_opts.seed, "Seed for the random directions")->capture_default_str();
  land->add_option("--probe", land_probe, "Probe batch size (test samples)")->capture_default_str();
  land->add_option("--out", land_out, "Output CSV path (default: stdout)");
  land_flags.attach(land);

  // sweep
  ConfigFlags sweep_flags;
  std::string sweep_leaks, sweep_out;
  int sweep_jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Leakage sweep: one run per k_tau, merged CSV");
  sweep->add_option("--leaks", sweep_leaks, "Comma-separated k_tau values (default 0.0..1.0 step 0.1)");
  sweep->add_option("--jobs", sweep_jobs, "Concurrent runs")->capture_default_str();
  sweep->add_option("--out", sweep_out, "Merged CSV path (default: stdout)");
  sweep_flags.attach(sweep);

  // xor-gen
  ConfigFlags xor_flags;
  std::string xor_out;
  int xor_n = 1000;
  auto* xorgen = app.add_subcommand("xor-gen", "Generate delayed-XOR trials as an SNNF frame file");
  xorgen->add_option("--n", xor_n, "Number of trials (multiple of 4)")->capture_default_str();
  xorgen->add_option("--out", xor_out, "Output .snnf path")->required();
  xor_flags.attach(xorgen);

  // ingest
  ConfigFlags ingest_flags;
  auto* ingest = app.add_subcommand("ingest", "Parse a dataset and fill the frame cache");
  ingest_flags.attach(ingest);

  // features
  ConfigFlags feat_flags;
  std::string feat_ckpt, feat_out;
  int feat_layer = -1;
  auto* feat = app.add_subcommand("features", "Export time-mean spike features of a layer and their silhouette");
  feat->add_option("--checkpoint", feat_ckpt, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  feat->add_option("--layer", feat_layer, "Layer index (-1: last hidden layer)")->capture_default_str();
  feat->add_option("--out", feat_out, "Output CSV path (default: stdout)");
  feat_flags.attach(feat);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << '\n';
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (train->parsed()) {
      const auto cfg = train_flags.resolve();
      const auto r = run(cfg);
      std::cout << "test_accuracy=" << fmt(r.test_accuracy) << "\ncheckpoint=" << r.checkpoint_path.string()
                << "\nreport=" << r.report_path.string() << "\nmetrics=" << r.metrics_path.string() << '\n';
    } else if (eval->parsed()) {
      auto [net, cfg] = open_checkpoint(eval_ckpt, eval_flags);
      if (!eval_dts.empty()) {
        if (cfg.dataset != "nmnist") throw ConfigError("--dt re-binning needs an N-MNIST checkpoint");
        const auto streams = load_nmnist_split(fs::path(cfg.data_dir) / "Test", cfg.test_limit);
        const auto dts = parse_list(eval_dts);
        const auto points = generalization_sweep(net, streams, dts, cfg.event_counts);
        std::ostringstream csv;
        write_generalization_csv(csv, points);
        emit(eval_out, csv.str());
      } else {
        const auto data = load_data(cfg);
        const auto r = evaluate(net, data.test);
        std::ostringstream csv;
        csv << "accuracy,loss";
        for (std::size_t n = 0; n < r.firing_rates.size(); ++n) csv << ",firing_rate_layer" << n;
        csv << '\n' << fmt(r.accuracy) << ',' << fmt(r.loss);
        for (double f : r.firing_rates) csv << ',' << fmt(f);
        csv << '\n';
        emit(eval_out, csv.str());
      }
    } else if (attack->parsed()) {
      auto [net, cfg] = open_checkpoint(attack_ckpt, attack_flags);
      const auto data = load_data(cfg);
      const auto rep = attack_evaluate(net, data.test, attack_cfg, attack_limit);
      emit(attack_report, rep.to_json() + "\n");
      if (!attack_csv.empty()) {
        std::ostringstream csv;
        rep.write_csv(csv);
        emit(attack_csv, csv.str());
      }
    } else if (drop->parsed()) {
      auto [net, cfg] = open_checkpoint(drop_ckpt, drop_flags);
      const auto data = load_data(cfg);
      std::ostringstream csv;
      csv << "rho,accuracy\n";
      const auto rhos = parse_list(drop_rhos);
      for (std::size_t k = 0; k < rhos.size(); ++k) {
        const auto dropped = event_drop(data.test, rhos[k], child_seed(drop_seed, k));
        csv << fmt(rhos[k]) << ',' << fmt(evaluate(net, dropped, 256, data.test.max_steps()).accuracy) << '\n';
      }
      emit(drop_out, csv.str());
    } else if (land->parsed()) {
      auto [net, cfg] = open_checkpoint(land_ckpt, land_flags);
      const auto data = load_data(cfg);
      const auto grid = loss_landscape_scan(net, data.test, land_opts, land_probe);
      std::ostringstream csv;
      grid.write_csv(csv);
      emit(land_out, csv.str());
    } else if (sweep->parsed()) {
      const auto cfg = sweep_flags.resolve();
      const auto leaks = sweep_leaks.empty() ? default_leak_grid() : parse_list(sweep_leaks);
      emit(sweep_out, sweep_csv(sweep_leakage(cfg, leaks, sweep_jobs)));
    } else if (xorgen->parsed()) {
      const auto cfg = xor_flags.resolve();
      write_frame_file(fs::path(xor_out), generate_xor_dataset(cfg.xor_task, xor_n, cfg.seed));
      std::cerr << "wrote " << xor_out << '\n';
    } else if (ingest->parsed()) {
      auto cfg = ingest_flags.resolve();
      if (cfg.dataset == "xor") throw ConfigError("ingest: xor is generated, use xor-gen");
      if (cfg.cache_dir.empty()) cfg.cache_dir = "liflab-cache";
      const auto data = load_data(cfg);
      std::cout << "dataset=" << cfg.dataset << "\ntrain_samples=" << data.train.size()
                << "\ntest_samples=" << data.test.size() << "\nwidth=" << data.train.width
                << "\nclasses=" << data.train.num_classes << "\nmax_steps=" << data.train.max_steps() << '\n';
      if (cfg.dataset == "mnist")
        std::cout << "note=mnist is read directly from IDX files; no frames cached\n";
      else
        std::cout << "cache_dir=" << cfg.cache_dir << '\n';
    } else if (feat->parsed()) {
      auto [net, cfg] = open_checkpoint(feat_ckpt, feat_flags);
      const auto data = load_data(cfg);
      const int layer = feat_layer >= 0 ? feat_layer : static_cast<int>(net.layers.size()) - 2;
      const auto features = export_features(net, data.test, layer);
      const auto labels = data.test.labels(iota_indices(data.test.size()));
      std::ostringstream csv;
      write_features_csv(csv, features, labels);
      emit(feat_out, csv.str());
      try {
        std::cerr << "silhouette_cosine=" << fmt(silhouette_cosine(features, labels)) << '\n';
      } catch (const std::invalid_argument& e) {
        std::cerr << "silhouette_cosine=undefined (" << e.what() << ")\n";
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
