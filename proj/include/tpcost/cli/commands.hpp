// Copyright 2026 The tpcost Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tpcost/cli/run_config.hpp"
#include "tpcost/costmodel/checkpoint.hpp"
#include "tpcost/costmodel/epsilon.hpp"
#include "tpcost/costmodel/finetune.hpp"
#include "tpcost/costmodel/tune.hpp"
#include "tpcost/dataset/stats.hpp"
#include "tpcost/dataset/synth.hpp"
#include "tpcost/ir/parser.hpp"
#include "tpcost/replayer/replay.hpp"
#include "tpcost/sampling/select.hpp"

namespace tpcost::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInputError = 2, kUsageError = 64, kInternalError = 70 };

/// stderr logger whose level comes from TPCOST_LOG (error, info, debug).
inline std::shared_ptr<spdlog::logger> make_logger() {
  auto log = spdlog::stderr_color_mt("tpcost");
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::info);
  if (const char* env = std::getenv("TPCOST_LOG")) {
    const std::string v = env;
    if (v == "error") {
      log->set_level(spdlog::level::err);
    } else if (v == "debug") {
      log->set_level(spdlog::level::debug);
    } else if (v != "info") {
      log->warn("ignoring TPCOST_LOG='{}'; expected error, info or debug", v);
    }
  }
  return log;
}

inline std::shared_ptr<spdlog::logger> logger() {
  static auto log = make_logger();
  return log;
}

// ---------------------------------------------------------------------------
// File helpers.

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  f << text;
}

inline std::string fmt17(double v) { return detail::fmt_double(v); }

/// Options shared by every subcommand.
struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  RunConfig config;
};

/// Builtin devices plus an optional catalog; catalog entries win.
inline costmodel::DeviceTable device_table(const std::string& catalog_path) {
  auto devices = features::builtin_devices();
  if (!catalog_path.empty()) {
    std::ifstream f(catalog_path);
    if (!f) throw InputError("cannot read '" + catalog_path + "'");
    for (auto& d : dataset::load_device_catalog(f)) {
      auto it = std::find_if(devices.begin(), devices.end(), [&](const auto& x) { return x.name == d.name; });
      if (it != devices.end()) {
        *it = d;
      } else {
        devices.push_back(d);
      }
    }
  }
  return costmodel::make_device_table(devices);
}

inline dataset::Dataset load_dataset(const std::string& data, const std::string& splits) {
  dataset::Dataset ds;
  ds.samples = dataset::load_jsonl_file(data);
  if (!splits.empty()) {
    std::ifstream f(splits);
    if (!f) throw InputError("cannot read '" + splits + "'");
    ds.splits = dataset::load_splits(f);
  }
  return ds;
}

inline void write_metrics_json(const fs::path& path, const costmodel::Metrics& m, std::size_t n) {
  nlohmann::ordered_json j = {{"n", n}, {"mape", m.mape}, {"rmse", m.rmse}, {"mspe", m.mspe}};
  write_text(path, j.dump(1) + "\n");
}

inline std::vector<dataset::Sample> select_split(const dataset::Dataset& ds, const std::string& split) {
  if (split.empty() || split == "all") return ds.samples;
  return ds.subset(dataset::parse_split(split));
}

// ---------------------------------------------------------------------------
// Subcommands. Each returns an exit code; errors propagate as exceptions.

inline int cmd_extract(const Globals& g, const std::vector<std::string>& files, const std::string& output,
                       const std::string& device) {
  std::vector<dataset::Sample> samples;
  int failures = 0;
  ir::ParseOptions opts;
  opts.max_leaves = g.config.synth.max_leaves;
  for (const auto& file : files) {
    try {
      const std::string text = read_text(file);
      const auto programs = ir::parse_programs(text, opts);
      const std::string task = fs::path(file).stem().string();
      for (const auto& p : programs) {
        dataset::Sample s;
        s.id = p.name;
        s.task_id = task;
        s.device_id = device;
        s.compact = features::build_compact_ast(p, opts.max_leaves);
        samples.push_back(std::move(s));
      }
      logger()->info("{}: {} program(s)", file, programs.size());
    } catch (const InputError& e) {
      logger()->error("{}: {}", file, e.what());
      ++failures;
    }
  }
  std::ostringstream os;
  dataset::save_jsonl(os, samples);
  write_text(fs::path(g.out) / output, os.str());
  return failures ? kInputError : kOk;
}

inline int cmd_synth(const Globals& g, const std::string& output) {
  const auto& c = g.config;
  std::vector<features::DeviceSpec> devices;
  for (const auto& name : c.devices) devices.push_back(features::find_builtin_device(name));
  auto ds = dataset::generate_synthetic(c.n_samples, devices, c.oracle, c.seed, c.synth);
  const fs::path out(g.out);
  std::ostringstream data, catalog;
  dataset::save_jsonl(data, ds.samples);
  dataset::save_device_catalog(catalog, devices);
  write_text(out / output, data.str());
  write_text(out / "devices.json", catalog.str());

  std::vector<double> y;
  for (const auto& s : ds.samples) y.push_back(s.latency_s);
  const auto bc = dataset::fit_boxcox(y);
  std::vector<double> t;
  for (double v : y) t.push_back(bc.apply(v));
  nlohmann::ordered_json report = {{"n_samples", y.size()},
                                   {"skewness_raw", stats::skewness(y)},
                                   {"skewness_boxcox", stats::skewness(t)},
                                   {"boxcox_lambda", bc.lambda_bc},
                                   {"min_latency_s", *std::min_element(y.begin(), y.end())},
                                   {"max_latency_s", *std::max_element(y.begin(), y.end())}};
  write_text(out / "synth_report.json", report.dump(1) + "\n");
  std::cout << "samples " << y.size() << "\nskewness_raw " << fmt17(stats::skewness(y)) << "\nskewness_boxcox "
            << fmt17(stats::skewness(t)) << "\n";
  return kOk;
}

inline int cmd_dataset_split(const Globals& g, const std::string& data, const std::string& output) {
  dataset::Dataset ds;
  ds.samples = dataset::load_jsonl_file(data, false);
  const std::set<std::string> holdout(g.config.holdout_models.begin(), g.config.holdout_models.end());
  ds = dataset::split_dataset(std::move(ds), g.config.ratios, g.config.seed, holdout);
  std::ostringstream os;
  dataset::save_splits(os, ds);
  write_text(fs::path(g.out) / output, os.str());
  for (auto s : {dataset::Split::kTrain, dataset::Split::kValid, dataset::Split::kTest, dataset::Split::kHoldout})
    std::cout << dataset::split_name(s) << ' ' << ds.indices(s).size() << '\n';
  return kOk;
}

inline costmodel::TrainOptions epoch_logger(const std::string& what) {
  costmodel::TrainOptions o;
  o.on_epoch = [what](const costmodel::TrainLogRow& r) {
    logger()->debug("{} epoch {} loss {:.6g} val_mape {:.6g} val_rmse {:.6g} lr {:.3g}", what, r.epoch, r.train_loss,
                    r.val_mape, r.val_rmse, r.lr);
  };
  return o;
}

inline int cmd_train(const Globals& g, const std::string& data, const std::string& splits, const std::string& catalog) {
  auto ds = load_dataset(data, splits);
  const auto devices = device_table(catalog);
  auto result = costmodel::train(g.config.model, ds, devices, epoch_logger("train"));
  const fs::path out(g.out);
  costmodel::save_checkpoint_file((out / "checkpoint.json").string(), result.model);
  std::ostringstream log;
  costmodel::write_log_csv(log, result.log);
  write_text(out / "train_log.csv", log.str());
  write_text(out / "run_config.txt", dump_run_config(g.config));
  std::cout << "best_epoch " << result.best_epoch << "\nbest_val_mape " << fmt17(result.best_val_mape) << '\n';
  return kOk;
}

inline int cmd_finetune(const Globals& g, const std::string& checkpoint, const std::string& data,
                        const std::string& splits, const std::string& target, const std::string& target_labeled,
                        const std::string& catalog) {
  const auto base = costmodel::load_checkpoint_file(checkpoint);
  auto ds = load_dataset(data, splits);
  const auto devices = device_table(catalog);
  costmodel::FinetuneData fd;
  fd.source = ds.splits.empty() ? ds.samples : ds.subset(dataset::Split::kTrain);
  fd.valid = ds.splits.empty() ? std::vector<dataset::Sample>{} : ds.subset(dataset::Split::kValid);
  fd.target = dataset::load_jsonl_file(target, false);
  if (!target_labeled.empty()) fd.target_labeled = dataset::load_jsonl_file(target_labeled);
  costmodel::FinetuneOptions opts;
  static_cast<costmodel::TrainOptions&>(opts) = epoch_logger("finetune");
  opts.cmd_batch = g.config.cmd_batch;
  auto cfg = g.config.model;
  auto result = costmodel::finetune(base, cfg, fd, devices, opts);
  const fs::path out(g.out);
  costmodel::save_checkpoint_file((out / "checkpoint.json").string(), result.model);
  std::ostringstream log;
  costmodel::write_log_csv(log, result.log);
  write_text(out / "finetune_log.csv", log.str());
  write_text(out / "run_config.txt", dump_run_config(g.config));
  nlohmann::ordered_json report = {{"cmd_before", result.cmd_before}, {"cmd_after", result.cmd_after}};
  write_text(out / "finetune_report.json", report.dump(1) + "\n");
  std::cout << "cmd_before " << fmt17(result.cmd_before) << "\ncmd_after " << fmt17(result.cmd_after) << '\n';
  return kOk;
}

inline int cmd_sample(const Globals& g, const std::string& data, const std::string& output,
                      const std::string& latent_checkpoint) {
  const auto samples = dataset::load_jsonl_file(data, false);
  auto tasks = sampling::task_features(samples);
  if (!latent_checkpoint.empty()) {
    // Cluster device-independent latents instead of raw features.
    const auto model = costmodel::load_checkpoint_file(latent_checkpoint);
    std::map<std::string, std::vector<features::CompactAst>> by_task;
    for (const auto& s : samples) by_task[s.task_id].push_back(s.compact);
    for (auto& t : tasks) t.features = costmodel::program_latents(model, by_task[t.task_id]);
  }
  const auto sel = sampling::select_tasks(tasks, g.config.kappa, g.config.seed);
  write_text(fs::path(g.out) / output, nlohmann::json(sel.task_ids).dump() + "\n");
  for (const auto& id : sel.task_ids) std::cout << id << '\n';
  return kOk;
}

/// Per-sample predictions; MAPE/RMSE printed when every sample is labeled.
inline int cmd_predict(const Globals& g, const std::string& checkpoint, const std::string& data,
                       const std::string& splits, const std::string& split, const std::string& catalog,
                       bool emit_plot_data, bool write_metrics) {
  const auto model = costmodel::load_checkpoint_file(checkpoint);
  dataset::Dataset ds;
  ds.samples = dataset::load_jsonl_file(data, false);
  if (!splits.empty()) ds = load_dataset(data, splits);
  const auto samples = splits.empty() ? ds.samples : select_split(ds, split);
  if (samples.empty()) throw EmptyDataset("no samples to predict");
  const auto devices = device_table(catalog);
  const auto inputs = costmodel::encode_for(model, samples, devices);
  const auto pred = costmodel::predict_latencies(model, inputs);
  bool labeled = true;
  std::ostringstream csv;
  csv << "id,y_true,y_pred\n";
  std::vector<double> y;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    labeled = labeled && samples[i].latency_s > 0;
    y.push_back(samples[i].latency_s);
    csv << samples[i].id << ',' << (samples[i].latency_s > 0 ? fmt17(samples[i].latency_s) : "") << ',' << fmt17(pred[i])
        << '\n';
  }
  const fs::path out(g.out);
  write_text(out / (emit_plot_data ? "plot_data.csv" : "predictions.csv"), csv.str());
  if (labeled) {
    const auto m = costmodel::metrics(pred, y);
    std::cout << "n " << y.size() << "\nmape " << fmt17(m.mape) << "\nrmse " << fmt17(m.rmse) << "\nmspe "
              << fmt17(m.mspe) << '\n';
    if (write_metrics) write_metrics_json(out / "metrics.json", m, y.size());
  } else if (write_metrics) {
    throw ValidationError("evaluation needs labeled samples");
  }
  return kOk;
}

inline std::map<std::string, int> parse_rules(const std::vector<std::string>& rules) {
  std::map<std::string, int> out;
  for (const auto& r : rules) {
    const auto eq = r.find('=');
    if (eq == std::string::npos) throw ConfigError("rule '" + r + "' must look like op_class=cores");
    out[r.substr(0, eq)] = detail::parse_number<int>("rule", r.substr(eq + 1));
  }
  return out;
}

inline int cmd_replay(const Globals& g, const std::string& checkpoint, const std::string& graph,
                      const std::string& programs, const std::string& device, const std::vector<std::string>& rules,
                      const std::string& catalog) {
  const auto model = costmodel::load_checkpoint_file(checkpoint);
  const auto devices = device_table(catalog);
  const auto& dev = costmodel::lookup_device(devices, device);
  const auto table = replayer::program_table(read_text(programs), model.params.config.n_leaf_max);
  const auto dfg = replayer::parse_graph_json(read_text(graph));
  std::size_t calls = 0;
  auto base = replayer::model_predictor(model, dev, table);
  replayer::Dfg expanded;
  const auto r = replayer::replay_model(
      dfg,
      [&](const replayer::DfgNode& n) {
        ++calls;
        return base(n);
      },
      parse_rules(rules), &expanded);
  const fs::path out(g.out);
  write_text(out / "sim_result.json", replayer::sim_result_json(expanded, r).dump(1) + "\n");
  std::ostringstream csv;
  replayer::write_timeline_csv(csv, expanded, r);
  write_text(out / "timeline.csv", csv.str());
  logger()->info("{} node(s), {} distinct program prediction(s)", dfg.nodes.size(), calls);
  std::cout << "iteration_time_s " << fmt17(r.iteration_time) << '\n';
  return kOk;
}

inline int cmd_tune(const Globals& g, const std::string& data, const std::string& splits, const std::string& catalog) {
  auto ds = load_dataset(data, splits);
  const auto devices = device_table(catalog);
  const auto result = costmodel::tune(costmodel::SearchSpace{}, g.config.tune_budget, ds, devices, g.config.seed,
                                      g.config.model, g.config.tune_epoch_cap);
  std::ostringstream csv;
  csv << "trial,val_mape,n_layers,d_model,n_heads,d_ff,d_embed,batch_size,optimizer,lr_schedule,lr,weight_decay,alpha_cmd\n";
  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    const auto& c = result.trials[i].config;
    csv << i << ',' << fmt17(result.trials[i].val_mape) << ',' << c.n_layers << ',' << c.d_model << ',' << c.n_heads
        << ',' << c.d_ff << ',' << c.d_embed << ',' << c.batch_size << ',' << costmodel::to_string(c.optimizer) << ','
        << costmodel::to_string(c.lr_schedule) << ',' << fmt17(c.lr) << ',' << fmt17(c.weight_decay) << ','
        << fmt17(c.alpha_cmd) << '\n';
  }
  const fs::path out(g.out);
  write_text(out / "tune_trials.csv", csv.str());
  RunConfig best = g.config;
  best.model = result.best;
  best.model.epochs = g.config.model.epochs;
  best.model.seed = g.config.model.seed;
  write_text(out / "best_config.txt", dump_run_config(best));
  std::cout << "best_trial " << result.best_trial << "\nbest_val_mape " << fmt17(result.trials[result.best_trial].val_mape)
            << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

/// Parses arguments, dispatches, and maps failures to exit codes.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"tpcost: tensor-program cost model toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key = value run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "overrides the config seed");
  app.add_option("--out", g.out, "output directory (created if missing)");

  std::string data, splits, catalog, checkpoint, target, target_labeled, graph, programs, latent;
  std::string device = "synth_gpu", split = "test";
  std::string out_extract, out_synth, out_split, out_sample;
  std::vector<std::string> files, rules;
  bool plot = false;
  std::function<int()> action;

  auto* extract = app.add_subcommand("extract", "parse IR files into feature JSONL");
  extract->add_option("files", files, "IR files")->required();
  extract->add_option("--output", out_extract, "output file name")->default_val("features.jsonl");
  extract->add_option("--device", device, "device id recorded on each sample")->default_val("synth_gpu");
  extract->callback([&] { action = [&] { return cmd_extract(g, files, out_extract, device); }; });

  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
  synth->add_option("--output", out_synth, "output file name")->default_val("dataset.jsonl");
  synth->callback([&] { action = [&] { return cmd_synth(g, out_synth); }; });

  auto* split_cmd = app.add_subcommand("dataset-split", "assign train/valid/test/holdout splits");
  split_cmd->add_option("--data", data, "dataset JSONL")->required();
  split_cmd->add_option("--output", out_split, "output file name")->default_val("splits.json");
  split_cmd->callback([&] { action = [&] { return cmd_dataset_split(g, data, out_split); }; });

  auto add_data = [&](CLI::App* sc, bool need_splits) {
    sc->add_option("--data", data, "dataset JSONL")->required();
    auto* o = sc->add_option("--splits", splits, "split assignment JSON");
    if (need_splits) o->required();
    sc->add_option("--devices", catalog, "device catalog JSON");
  };

  auto* train = app.add_subcommand("train", "train a cost model");
  add_data(train, true);
  train->callback([&] { action = [&] { return cmd_train(g, data, splits, catalog); }; });

  auto* finetune = app.add_subcommand("finetune", "CMD-regularized fine-tuning toward a target domain");
  finetune->add_option("--checkpoint", checkpoint, "pre-trained checkpoint")->required();
  add_data(finetune, false);
  finetune->add_option("--target", target, "target-domain JSONL (labels optional)")->required();
  finetune->add_option("--target-labeled", target_labeled, "labeled target samples to train on");
  finetune->callback(
      [&] { action = [&] { return cmd_finetune(g, checkpoint, data, splits, target, target_labeled, catalog); }; });

  auto* sample = app.add_subcommand("sample", "select tasks to profile on a new device");
  sample->add_option("--data", data, "program JSONL")->required();
  sample->add_option("--output", out_sample, "output file name")->default_val("selected_tasks.json");
  sample->add_option("--latent-checkpoint", latent, "cluster model latents instead of raw features");
  sample->callback([&] { action = [&] { return cmd_sample(g, data, out_sample, latent); }; });

  auto add_predict = [&](CLI::App* sc) {
    sc->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    sc->add_option("--data", data, "samples JSONL")->required();
    sc->add_option("--splits", splits, "split assignment JSON");
    sc->add_option("--split", split, "split to use with --splits (train, valid, test, holdout, all)")->default_val("test");
    sc->add_option("--devices", catalog, "device catalog JSON");
  };
  auto* predict = app.add_subcommand("predict", "predict latencies");
  add_predict(predict);
  predict->callback([&] { action = [&] { return cmd_predict(g, checkpoint, data, splits, split, catalog, false, false); }; });

  auto* eval = app.add_subcommand("eval", "score a checkpoint on labeled samples");
  add_predict(eval);
  eval->add_flag("--emit-plot-data", plot, "write per-sample (y, y_pred) CSV");
  eval->callback([&] { action = [&] { return cmd_predict(g, checkpoint, data, splits, split, catalog, plot, true); }; });

  auto* replay = app.add_subcommand("replay", "simulate end-to-end latency of a dataflow graph");
  replay->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  replay->add_option("--graph", graph, "graph JSON")->required();
  replay->add_option("--programs", programs, "IR file defining every program_ref")->required();
  replay->add_option("--device", device, "device to predict for")->default_val("synth_gpu");
  replay->add_option("--rule", rules, "device-parallel expansion op_class=cores (repeatable)");
  replay->add_option("--devices", catalog, "device catalog JSON");
  replay->callback([&] { action = [&] { return cmd_replay(g, checkpoint, graph, programs, device, rules, catalog); }; });

  auto* tune = app.add_subcommand("tune", "random hyper-parameter search");
  add_data(tune, true);
  tune->add_option("--budget", g.config.tune_budget, "trials (overrides the config)");
  tune->callback([&] { action = [&] { return cmd_tune(g, data, splits, catalog); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsageError;
  }

  try {
    const int budget_flag = g.config.tune_budget;
    const bool budget_given = tune->count("--budget") > 0;
    if (!g.config_path.empty()) g.config = load_run_config(g.config_path);
    if (budget_given) g.config.tune_budget = budget_flag;
    if (g.seed) g.config.seed = *g.seed;
    propagate_seed(g.config);
    validate(g.config);
    fs::create_directories(g.out);
    logger()->debug("run configuration:\n{}", dump_run_config(g.config));
    return action();
  } catch (const InputError& e) {
    logger()->error("{}", e.what());
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    logger()->error("{}", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    logger()->error("internal error: {}", e.what());
    return kInternalError;
  }
}

}  // namespace tpcost::cli
