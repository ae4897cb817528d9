#include "rulgn/cli.hpp"

#include "rulgn/bearings.hpp"
#include "rulgn/plot.hpp"
#include "rulgn/runconfig.hpp"
#include "rulgn/simdata.hpp"
#include "rulgn/trainer.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

namespace fs = std::filesystem;

namespace rulgn {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 2;
constexpr int kExitNumeric = 3;

struct CommonOpts {
  std::string config;
  std::string out = "out";
  uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
};

RunConfig load_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config.empty()) cfg = RunConfig::from_file(opts.config);
  if (opts.seed_set) {
    cfg.sim.seed = opts.seed;
    cfg.train.seed = opts.seed;
  }
  cfg.train.threads = std::max(1, opts.threads);
  return cfg;
}

DiskDataset load_input_data(const RunConfig& cfg, const std::string& data_dir,
                            const std::string& femto_root) {
  if (!femto_root.empty()) {
    FemtoDataset femto = load_femto(femto_root, default_split(), cfg.femto);
    return DiskDataset{std::move(femto.train), std::move(femto.test)};
  }
  if (data_dir.empty()) {
    throw std::invalid_argument("either --data or --femto-root is required");
  }
  return load_dataset(data_dir);
}

// Model geometry follows the data; everything else follows the config.
ModelConfig resolve_model_config(const RunConfig& cfg, const DiskDataset& data) {
  const ExperimentSet& any = data.train.empty() ? data.test : data.train;
  if (any.empty() || any[0].segments.empty()) {
    throw std::invalid_argument("dataset has no segments to infer the model geometry from");
  }
  ModelConfig m = cfg.model;
  m.input_channels = any[0].segments[0].dim(0);
  m.segment_length = any[0].segments[0].dim(1);
  m.validate();
  return m;
}

int cmd_simulate(const CommonOpts& opts) {
  RunConfig cfg = load_config(opts);
  SimDataset ds = generate_dataset(cfg.sim, cfg.sim_train_experiments, cfg.sim_test_experiments);
  fs::create_directories(opts.out);
  save_experiments(opts.out, ds.train, ds.test);

  std::ofstream info(fs::path(opts.out) / "dataset.info");
  info.precision(17);
  info << "failure_threshold " << ds.resolved_failure_threshold << "\n";
  info << "latent_noise_std " << ds.resolved_latent_noise_std << "\n";
  info << "seed " << cfg.sim.seed << "\n";

  std::ofstream summary(fs::path(opts.out) / "summary.csv");
  summary << "experiment,set,failure_time,observations\n";
  summary.precision(10);
  auto emit = [&](const ExperimentSet& set, const char* name) {
    for (const Experiment& e : set) {
      summary << e.id << "," << name << "," << e.failure_time << "," << e.num_observations()
              << "\n";
      std::cout << e.id << " (" << name << "): failure at " << e.failure_time << ", "
                << e.num_observations() << " observations\n";
    }
  };
  emit(ds.train, "train");
  emit(ds.test, "test");
  std::cout << "wrote " << ds.train.size() << " train + " << ds.test.size()
            << " test experiments to " << opts.out << "\n";
  return kExitOk;
}

int cmd_train(const CommonOpts& opts, const std::string& model_name, const std::string& data_dir,
              const std::string& femto_root) {
  RunConfig cfg = load_config(opts);
  const ModelKind kind = model_kind_from_string(model_name);
  DiskDataset data = load_input_data(cfg, data_dir, femto_root);
  if (data.train.empty()) throw std::invalid_argument("training set is empty");
  ModelConfig mcfg = resolve_model_config(cfg, data);

  TrainResult result = train(kind, data.train, mcfg, cfg.sampler, cfg.train);

  fs::create_directories(opts.out);
  write_history_csv(fs::path(opts.out) / "history.csv", result.history);
  save_model(opts.out, kind, mcfg, result.best_params);
  std::cout << "trained " << model_name << " for " << result.history.size() << " epochs";
  if (result.best_epoch >= 0) {
    std::cout << "; best validation nll " << result.best_val_nll << " at epoch "
              << result.best_epoch;
  }
  std::cout << "\n";
  if (result.aborted) {
    std::cerr << "training aborted: " << result.abort_reason << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& checkpoint,
                 const std::string& data_dir, const std::string& femto_root, int n_past,
                 const std::string& split) {
  RunConfig cfg = load_config(opts);
  LoadedModel model = load_model(checkpoint);
  DiskDataset data = load_input_data(cfg, data_dir, femto_root);
  const ExperimentSet& set = split == "train" ? data.train : data.test;
  if (set.empty()) throw std::invalid_argument("evaluation split '" + split + "' is empty");

  // checkpoint and dataset must agree on the segment geometry
  const Tensor& probe = set[0].segments.at(0);
  if (probe.dim(0) != model.config.input_channels || probe.dim(1) != model.config.segment_length) {
    throw std::invalid_argument(
        "checkpoint and dataset are incompatible: model expects [" +
        std::to_string(model.config.input_channels) + " x " +
        std::to_string(model.config.segment_length) + "], dataset has [" +
        std::to_string(probe.dim(0)) + " x " + std::to_string(probe.dim(1)) + "]");
  }

  const uint64_t seed = opts.seed_set ? opts.seed : cfg.train.seed;
  EvalReport report = evaluate(model.kind, model.params, set, model.config, cfg.sampler, n_past,
                               seed, std::max(1, opts.threads));
  fs::create_directories(opts.out);
  write_report_csv(fs::path(opts.out) / "report.csv", report);
  write_report_summary_csv(fs::path(opts.out) / "report_summary.csv", report);
  std::cout << "aggregate NLL: " << report.aggregate_nll << " over " << report.rows.size()
            << " anchors (n_past=" << n_past << ")\n";
  return kExitOk;
}

int cmd_plot(const std::string& report_path, const std::string& out) {
  std::vector<AnchorRow> rows = read_report_csv(report_path);
  if (rows.empty()) throw std::invalid_argument("report has no rows: " + report_path);
  std::vector<std::string> written = write_rul_svgs(out, rows);
  for (const std::string& p : written) std::cout << "wrote " << p << "\n";
  return kExitOk;
}

int cmd_ingest(const CommonOpts& opts, const std::string& femto_root) {
  RunConfig cfg = load_config(opts);
  FemtoDataset ds = load_femto(femto_root, default_split(), cfg.femto);
  save_experiments(opts.out, ds.train, ds.test);
  std::cout << "ingested " << ds.train.size() << " train + " << ds.test.size()
            << " test experiments into " << opts.out << "\n";
  return kExitOk;
}

}  // namespace

int cli_run(const std::vector<std::string>& args) {
  CLI::App app{"causal-GraphNet remaining-useful-life estimation"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string model_name = "gnn-tcnn";
  std::string data_dir, femto_root, checkpoint, report_path, split = "test";
  int n_past = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config, "flat section.key = value configuration file");
    cmd->add_option("--out", opts.out, "output directory");
    cmd->add_option("--seed", opts.seed, "seed override")->each([&](const std::string&) {
      opts.seed_set = true;
    });
    cmd->add_option("--threads", opts.threads, "worker cap for per-sample parallelism");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic degradation dataset");
  add_common(simulate);

  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a dataset");
  add_common(train_cmd);
  train_cmd->add_option("--model", model_name, "gnn-tcnn or lstm-tcnn");
  train_cmd->add_option("--data", data_dir, "dataset directory (simulate/ingest layout)");
  train_cmd->add_option("--femto-root", femto_root, "raw FEMTO directory to load instead");

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "write per-anchor predictions and NLL");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint, "model directory written by train")->required();
  eval_cmd->add_option("--data", data_dir, "dataset directory");
  eval_cmd->add_option("--femto-root", femto_root, "raw FEMTO directory to load instead");
  eval_cmd->add_option("--n-past", n_past, "past observations per prediction (0 = config)");
  eval_cmd->add_option("--split", split, "train or test (default test)");

  CLI::App* plot_cmd = app.add_subcommand("plot", "render SVG RUL trajectories from a report");
  plot_cmd->add_option("--report", report_path, "report.csv from evaluate")->required();
  plot_cmd->add_option("--out", opts.out, "output directory");

  CLI::App* ingest = app.add_subcommand("ingest", "re-serialize raw FEMTO data for fast reload");
  add_common(ingest);
  ingest->add_option("--femto-root", femto_root, "raw FEMTO directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUser;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(opts);
    if (train_cmd->parsed()) return cmd_train(opts, model_name, data_dir, femto_root);
    if (eval_cmd->parsed()) return cmd_evaluate(opts, checkpoint, data_dir, femto_root, n_past, split);
    if (plot_cmd->parsed()) return cmd_plot(report_path, opts.out);
    if (ingest->parsed()) return cmd_ingest(opts, femto_root);
    std::cerr << "no subcommand\n";
    return kExitUser;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::domain_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUser;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_run(args);
}

}  // namespace rulgn
