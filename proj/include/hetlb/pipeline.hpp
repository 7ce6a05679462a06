#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hetlb/allocator.hpp"
#include "hetlb/dataset_io.hpp"
#include "hetlb/model.hpp"

namespace hetlb {

enum class LabelMethod { Optimizer, Heuristic, Oracle };

const char* to_string(LabelMethod m);
LabelMethod label_method_from_string(const std::string& s);

AllocationMatrix solve(LabelMethod method, const Scenario& sc, const SolverConfig& cfg);

// ---- generation -------------------------------------------------------------

struct GenConfig {
  RoomConfig room;
  LiFiPhyConfig lifi;
  WiFiPhyConfig wifi;
  SolverConfig solver;
  std::size_t n_samples = 5000;
  LabelMethod label = LabelMethod::Optimizer;
  std::uint64_t seed = 0;
  // Sample k uses n_ue_mix[k % size]; empty means room.n_ue for every sample.
  std::vector<std::size_t> n_ue_mix;
  int workers = 0;  // 0: OpenMP default
};

struct GenResult {
  std::vector<Record> records;
  std::size_t skipped = 0;
};

// Sample k is built from seed + k. A sample whose solve fails is replaced by
// the next unused seed past the nominal range, so the output does not depend
// on the worker count.
GenResult generate_records(const GenConfig& cfg);
// Writes <out> and its sidecar meta file.
DatasetMeta generate_dataset(const GenConfig& cfg, const std::filesystem::path& out);

DatasetMeta describe(std::span<const Record> records, std::uint64_t seed, std::size_t skipped);

// Labels every record in place (solve subcommand).
void label_records(std::span<Record> records, LabelMethod method, const SolverConfig& cfg, int workers = 0);

// ---- learning data ----------------------------------------------------------

// Min/max of SINR in dB and of R_j over the given records (all when subset is
// empty). A degenerate range is widened by 1e-6 on each side.
NormMeta fit_normalizer(std::span<const Record> records, std::span<const std::size_t> subset = {});

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Seeded shuffle, then floor(0.8 n) to train and the rest to validation.
Split split_train_val(std::size_t n, std::uint64_t seed);

std::vector<SampleGraph> build_graphs(std::span<const Record> records, const NormMeta& norm, int workers = 0);

// ---- training ---------------------------------------------------------------

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 100;
  double lr = 1e-3;
  double lr_decay = 0.95;
  std::uint64_t seed = 0;
  std::size_t patience = 10;  // epochs without val improvement before stopping; 0 disables
  // in/out dims are taken from the data; n_heads 0 picks by N_u.
  GatConfig gat = [] {
    GatConfig g;
    g.n_heads = 0;
    return g;
  }();
  DnnConfig dnn;              // n_ue/n_subflows are taken from the data

  void validate() const;
};

struct HistoryRow {
  std::size_t epoch = 0;  // 0 is the evaluation before any update
  double lr = 0.0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double val_sum_rate_bps = 0.0;
};

struct TrainResult {
  Model model;  // parameters of the best validation epoch
  std::vector<HistoryRow> history;
  std::size_t best_epoch = 0;
};

// Splits 80:20 with cfg.seed and fits the normaliser on the training part.
TrainResult train(ModelKind kind, const TrainConfig& cfg, std::span<const Record> dataset);
// Explicit split; the normaliser is fitted on `train_set`.
TrainResult train(ModelKind kind, const TrainConfig& cfg, std::span<const Record> train_set,
                  std::span<const Record> val_set);

void write_history_csv(const std::filesystem::path& path, std::span<const HistoryRow> history);

}  // namespace hetlb
