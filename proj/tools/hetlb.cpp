#include <CLI11.hpp>

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hetlb/config.hpp"
#include "hetlb/dataset_io.hpp"
#include "hetlb/errors.hpp"
#include "hetlb/log.hpp"
#include "hetlb/metrics.hpp"
#include "hetlb/model.hpp"
#include "hetlb/pipeline.hpp"

namespace fs = std::filesystem;
using namespace hetlb;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kSchema = 3, kMismatch = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Schema:
    case ErrorKind::Integrity: return kSchema;
    case ErrorKind::ModelMismatch: return kMismatch;
    default: return kFailure;
  }
}

struct Options {
  std::string config;
  std::string log_level = "warn";
  bool nan_check = false;

  // gen
  std::size_t samples = 5000;
  std::string label = "optimizer";
  std::uint64_t seed = 0;
  std::string out;
  int workers = 0;
  std::optional<int> scale;
  std::optional<std::size_t> n_ue, n_subflows;
  std::vector<std::size_t> n_ue_mix;

  // solve
  std::string in;
  std::string method = "optimizer";

  // train
  std::string data;
  std::string val_data;
  std::string model_kind;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> train_seed;
  std::string history;

  // eval / bench
  std::vector<std::string> models;
  std::vector<std::string> methods{"heuristic", "optimizer"};
  std::vector<std::string> datasets;
  std::string report;
  std::string summary;
  std::optional<std::size_t> repeats;
};

RunConfig load_run_config(const Options& o) {
  if (o.config.empty()) return {};
  if (!fs::exists(o.config)) throw UsageError("config file not found: " + o.config);
  return load_config(o.config);
}

std::vector<Record> read_dataset(const std::string& path) {
  std::vector<Record> r = read_jsonl(path);
  if (r.empty()) throw Error(ErrorKind::Schema, path + ": dataset is empty");
  return r;
}

int cmd_gen(const Options& o) {
  const RunConfig rc = load_run_config(o);
  GenConfig g;
  g.room = rc.room;
  if (o.scale) g.room = RoomConfig::scale(*o.scale, g.room.n_ue, g.room.n_subflows);
  if (o.n_ue) g.room.n_ue = *o.n_ue;
  if (o.n_subflows) g.room.n_subflows = *o.n_subflows;
  g.n_ue_mix = o.n_ue_mix.empty() ? rc.n_ue_mix : o.n_ue_mix;
  g.lifi = rc.lifi;
  g.wifi = rc.wifi;
  g.solver = rc.solver;
  g.n_samples = o.samples;
  g.label = label_method_from_string(o.label);
  g.seed = o.seed;
  g.workers = o.workers;
  const DatasetMeta meta = generate_dataset(g, o.out);
  std::cout << "wrote " << meta.n_samples << " samples to " << o.out << " (n_a=" << meta.n_a << ", n_f=" << meta.n_f
            << ", skipped=" << meta.skipped << ")\n";
  return kOk;
}

int cmd_solve(const Options& o) {
  const RunConfig rc = load_run_config(o);
  std::vector<Record> records = read_dataset(o.in);
  label_records(records, label_method_from_string(o.method), rc.solver, o.workers);
  const std::string out = o.out.empty() ? o.in : o.out;
  write_jsonl(out, records);
  const DatasetMeta in_meta = fs::exists(meta_path(o.in)) ? read_meta(meta_path(o.in)) : DatasetMeta{};
  write_meta(meta_path(out), describe(records, in_meta.seed, in_meta.skipped));
  std::cout << "labelled " << records.size() << " samples with " << o.method << " -> " << out << "\n";
  return kOk;
}

int cmd_train(const Options& o) {
  RunConfig rc = load_run_config(o);
  if (o.epochs) rc.train.epochs = *o.epochs;
  if (o.train_seed) rc.train.seed = *o.train_seed;
  const ModelKind kind = o.model_kind.empty() ? rc.model_kind : model_kind_from_string(o.model_kind);
  const std::vector<Record> data = read_dataset(o.data);
  TrainResult res = o.val_data.empty() ? train(kind, rc.train, data)
                                       : train(kind, rc.train, data, read_dataset(o.val_data));
  save_checkpoint(res.model, o.out);
  const std::string history = o.history.empty() ? fs::path(o.out).replace_extension(".history.csv").string() : o.history;
  write_history_csv(history, res.history);
  const HistoryRow& best = res.history[res.best_epoch];
  std::cout << "trained " << to_string(kind) << " for " << res.history.size() - 1 << " epochs; best epoch "
            << res.best_epoch << " val_mse " << best.val_mse << " val_sum_rate " << best.val_sum_rate_bps / 1e6
            << " Mbps\ncheckpoint: " << o.out << "\nhistory: " << history << "\n";
  return kOk;
}

std::vector<Method> collect_methods(const Options& o, const std::vector<Model>& models) {
  std::vector<Method> methods;
  for (const std::string& m : o.methods) {
    if (m == "heuristic") methods.push_back(Method::heuristic());
    else if (m == "optimizer") methods.push_back(Method::optimizer());
    else if (m == "oracle") methods.push_back(Method::oracle());
    else if (m != "none") throw UsageError("unknown method '" + m + "'");
  }
  for (std::size_t k = 0; k < models.size(); ++k) {
    std::string name = to_string(models[k].kind);
    for (std::size_t q = 0; q < k; ++q)
      if (models[q].kind == models[k].kind) name = fs::path(o.models[k]).stem().string();
    methods.push_back(Method::learned(models[k], name));
  }
  if (methods.empty()) throw UsageError("nothing to evaluate");
  return methods;
}

std::vector<Model> load_models(const Options& o) {
  std::vector<Model> models;
  for (const std::string& p : o.models) models.push_back(load_checkpoint(p));
  return models;
}

int cmd_eval(const Options& o) {
  const RunConfig rc = load_run_config(o);
  EvalOptions opt = rc.eval;
  if (o.workers) opt.workers = o.workers;
  const std::vector<Model> models = load_models(o);
  const std::vector<Method> methods = collect_methods(o, models);
  const std::vector<Record> data = read_dataset(o.data);
  const EvalReport rep = evaluate(methods, data, opt);
  write_report_csv(o.report, rep);
  const std::string summary =
      o.summary.empty() ? fs::path(o.report).replace_extension(".summary.json").string() : o.summary;
  write_json_file(summary, summary_json(rep));
  std::cout << format_summary_table(rep);
  return kOk;
}

int cmd_bench(const Options& o) {
  const RunConfig rc = load_run_config(o);
  BenchOptions opt = rc.bench;
  if (o.repeats) opt.repeats = *o.repeats;
  const std::vector<Model> models = load_models(o);
  const std::vector<Method> methods = collect_methods(o, models);
  std::vector<Record> data;
  for (const std::string& d : o.datasets) {
    std::vector<Record> part = read_dataset(d);
    data.insert(data.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  const std::vector<BenchRow> rows = bench_inference(methods, data, opt);
  if (!o.out.empty()) write_bench_csv(o.out, rows);
  std::cout << "method,n_a,n_u,n_f,samples,median_s,p95_s\n";
  for (const BenchRow& r : rows)
    std::cout << r.method << ',' << r.n_a << ',' << r.n_u << ',' << r.n_f << ',' << r.samples << ',' << r.median_s
              << ',' << r.p95_s << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Load-balancing lab for hybrid LiFi/WiFi networks with MPTCP subflows", "hetlb"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "JSON run configuration (defaults when omitted)");
  app.add_option("--log-level", o.log_level, "quiet | warn | info | debug")
      ->check(CLI::IsMember({"quiet", "warn", "info", "debug"}));
  app.add_flag("--nan-check", o.nan_check, "Abort on the first non-finite intermediate");
  app.fallthrough();

  auto* gen = app.add_subcommand("gen", "Generate a labelled Monte Carlo dataset");
  gen->add_option("--samples", o.samples, "Number of samples")->check(CLI::PositiveNumber);
  gen->add_option("--label", o.label, "Label method")->check(CLI::IsMember({"optimizer", "heuristic", "oracle"}));
  gen->add_option("--seed", o.seed, "Base seed; sample k uses seed + k");
  gen->add_option("--out", o.out, "Output .jsonl path")->required();
  gen->add_option("--workers", o.workers, "Worker threads (0: all)")->check(CLI::NonNegativeNumber);
  gen->add_option("--scale", o.scale, "Room preset 1, 2 or 3")->check(CLI::Range(1, 3));
  gen->add_option("--n-ue", o.n_ue, "UEs per sample")->check(CLI::PositiveNumber);
  gen->add_option("--n-subflows", o.n_subflows, "Subflows per UE");
  gen->add_option("--n-ue-mix", o.n_ue_mix, "Cycle through these UE counts");

  auto* solve_cmd = app.add_subcommand("solve", "Label an existing dataset");
  solve_cmd->add_option("--in", o.in, "Input .jsonl")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--method", o.method, "optimizer | heuristic | oracle")
      ->check(CLI::IsMember({"optimizer", "heuristic", "oracle"}));
  solve_cmd->add_option("--out", o.out, "Output .jsonl (default: rewrite --in)");
  solve_cmd->add_option("--workers", o.workers, "Worker threads (0: all)")->check(CLI::NonNegativeNumber);

  auto* train_cmd = app.add_subcommand("train", "Train a GAT or DNN on a labelled dataset");
  train_cmd->add_option("--data", o.data, "Training .jsonl (split 80:20 unless --val is given)")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--val", o.val_data, "Separate validation .jsonl")->check(CLI::ExistingFile);
  train_cmd->add_option("--model", o.model_kind, "gat | dnn")->check(CLI::IsMember({"gat", "dnn"}));
  train_cmd->add_option("--out", o.out, "Checkpoint path")->required();
  train_cmd->add_option("--epochs", o.epochs, "Epoch budget");
  train_cmd->add_option("--seed", o.train_seed, "Training seed");
  train_cmd->add_option("--history", o.history, "History CSV (default: <out>.history.csv)");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate methods and checkpoints on a dataset");
  eval_cmd->add_option("--model", o.models, "Checkpoint(s) to evaluate")->check(CLI::ExistingFile);
  eval_cmd->add_option("--methods", o.methods, "Baselines: heuristic optimizer oracle none")->delimiter(',');
  eval_cmd->add_option("--data", o.data, "Dataset .jsonl")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--report", o.report, "Per-instance CSV")->required();
  eval_cmd->add_option("--summary", o.summary, "Aggregate JSON (default: <report>.summary.json)");
  eval_cmd->add_option("--workers", o.workers, "Worker threads (0: all)")->check(CLI::NonNegativeNumber);

  auto* bench_cmd = app.add_subcommand("bench", "Single-threaded inference latency");
  bench_cmd->add_option("--model", o.models, "Checkpoint(s) to time")->check(CLI::ExistingFile);
  bench_cmd->add_option("--methods", o.methods, "Baselines: heuristic optimizer oracle none")->delimiter(',');
  bench_cmd->add_option("--data", o.datasets, "Dataset .jsonl (repeatable)")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--repeats", o.repeats, "Timed runs per instance (>= 10)");
  bench_cmd->add_option("--out", o.out, "Latency CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  set_log_level(o.log_level == "quiet"  ? LogLevel::Quiet
                : o.log_level == "info" ? LogLevel::Info
                : o.log_level == "debug" ? LogLevel::Debug
                                        : LogLevel::Warn);
  set_nan_check(o.nan_check);

  try {
    if (*gen) return cmd_gen(o);
    if (*solve_cmd) return cmd_solve(o);
    if (*train_cmd) return cmd_train(o);
    if (*eval_cmd) return cmd_eval(o);
    if (*bench_cmd) return cmd_bench(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.message() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
