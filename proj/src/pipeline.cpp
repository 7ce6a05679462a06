#include "hetlb/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <set>

#include "hetlb/errors.hpp"
#include "hetlb/format.hpp"
#include "hetlb/log.hpp"

namespace hetlb {

const char* to_string(LabelMethod m) {
  switch (m) {
    case LabelMethod::Optimizer: return "optimizer";
    case LabelMethod::Heuristic: return "heuristic";
    case LabelMethod::Oracle: return "oracle";
  }
  return "?";
}

LabelMethod label_method_from_string(const std::string& s) {
  if (s == "optimizer") return LabelMethod::Optimizer;
  if (s == "heuristic") return LabelMethod::Heuristic;
  if (s == "oracle") return LabelMethod::Oracle;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + s + "' (expected optimizer, heuristic or oracle)");
}

AllocationMatrix solve(LabelMethod method, const Scenario& sc, const SolverConfig& cfg) {
  switch (method) {
    case LabelMethod::Optimizer: return optimize_allocate(sc, cfg);
    case LabelMethod::Heuristic: return heuristic_allocate(sc);
    case LabelMethod::Oracle: return grid_oracle(sc, cfg);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown label method");
}

namespace {

int thread_count(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

bool skippable(ErrorKind k) {
  return k == ErrorKind::Convergence || k == ErrorKind::ContractViolation || k == ErrorKind::Numeric;
}

// Rethrows the first captured exception in index order.
void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

// ---- generation -------------------------------------------------------------

namespace {

// Drops everything a dataset record does not carry, so in-memory records
// match what read_jsonl returns.
void keep_stored_fields(Scenario& sc) {
  sc.rx_snr = Mat();
  Mat sinr(sc.n_ap(), sc.n_ue()), cap(sc.n_ap(), sc.n_ue());
  for (std::size_t j = 0; j < sc.n_ue(); ++j)
    for (std::size_t i : sc.serving[j]) {
      sinr(i, j) = sc.sinr(i, j);
      cap(i, j) = sc.capacity_bps(i, j);
    }
  sc.sinr = std::move(sinr);
  sc.capacity_bps = std::move(cap);
}

}  // namespace

GenResult generate_records(const GenConfig& cfg) {
  cfg.room.validate();
  cfg.lifi.validate();
  cfg.wifi.validate();
  cfg.solver.validate();
  for (std::size_t nu : cfg.n_ue_mix)
    if (nu < 1) throw Error(ErrorKind::InvalidConfig, "n_ue_mix entries must be >= 1");

  const std::size_t n = cfg.n_samples;
  auto room_for = [&](std::size_t k) {
    RoomConfig room = cfg.room;
    if (!cfg.n_ue_mix.empty()) room.n_ue = cfg.n_ue_mix[k % cfg.n_ue_mix.size()];
    return room;
  };
  // Returns nullopt when the sample has to be skipped.
  auto attempt = [&](std::size_t k, std::uint64_t seed) -> std::optional<Record> {
    Scenario sc = build_scenario(room_for(k), cfg.lifi, cfg.wifi, seed);
    try {
      const AllocationMatrix a = solve(cfg.label, sc, cfg.solver);
      keep_stored_fields(sc);
      Record r;
      r.seed = seed;
      r.labels = labels_from_allocation(sc, a);
      r.label_method = to_string(cfg.label);
      r.scenario = std::move(sc);
      return r;
    } catch (const Error& e) {
      if (!skippable(e.kind())) throw;
      log_warn("sample " + std::to_string(k) + " (seed " + std::to_string(seed) + ") skipped: " + e.what());
      return std::nullopt;
    }
  };

  std::vector<std::optional<Record>> slots(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(cfg.workers))
  for (std::size_t k = 0; k < n; ++k) {
    try {
      slots[k] = attempt(k, cfg.seed + k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  rethrow_first(errors);

  GenResult out;
  std::uint64_t next_seed = cfg.seed + n;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t tries = 0;
    while (!slots[k]) {
      ++out.skipped;
      if (++tries > 1000) throw Error(ErrorKind::Convergence, "too many consecutive failed samples");
      slots[k] = attempt(k, next_seed++);
    }
    out.records.push_back(std::move(*slots[k]));
  }
  return out;
}

DatasetMeta describe(std::span<const Record> records, std::uint64_t seed, std::size_t skipped) {
  if (records.empty()) throw Error(ErrorKind::InvalidArgument, "empty dataset");
  DatasetMeta m;
  m.n_samples = records.size();
  m.n_a = records.front().scenario.n_ap();
  m.n_f = records.front().scenario.n_subflows();
  std::set<std::size_t> nu;
  for (const Record& r : records) {
    if (r.scenario.n_ap() != m.n_a || r.scenario.n_subflows() != m.n_f)
      throw Error(ErrorKind::Integrity, "all samples of a dataset must share (n_a, n_f)");
    nu.insert(r.scenario.n_ue());
  }
  m.n_u.assign(nu.begin(), nu.end());
  m.norm = fit_normalizer(records);
  m.label_method = records.front().labels ? records.front().label_method : "none";
  m.seed = seed;
  m.skipped = skipped;
  return m;
}

DatasetMeta generate_dataset(const GenConfig& cfg, const std::filesystem::path& out) {
  const GenResult res = generate_records(cfg);
  write_jsonl(out, res.records);
  const DatasetMeta meta = describe(res.records, cfg.seed, res.skipped);
  write_meta(meta_path(out), meta);
  if (res.skipped) log_info(std::to_string(res.skipped) + " samples replaced after solver failures");
  return meta;
}

void label_records(std::span<Record> records, LabelMethod method, const SolverConfig& cfg, int workers) {
  cfg.validate();
  std::vector<std::exception_ptr> errors(records.size());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(workers))
  for (std::size_t k = 0; k < records.size(); ++k) {
    try {
      Record& r = records[k];
      r.labels = labels_from_allocation(r.scenario, solve(method, r.scenario, cfg));
      r.label_method = to_string(method);
    } catch (const Error& e) {
      errors[k] = std::make_exception_ptr(Error(e.kind(), "record " + std::to_string(k) + ": " + e.message()));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  rethrow_first(errors);
}

// ---- learning data ----------------------------------------------------------

NormMeta fit_normalizer(std::span<const Record> records, std::span<const std::size_t> subset) {
  std::vector<std::size_t> all;
  if (subset.empty()) {
    all.resize(records.size());
    std::iota(all.begin(), all.end(), 0);
    subset = all;
  }
  double smin = std::numeric_limits<double>::infinity(), smax = -smin;
  double rmin = smin, rmax = -smin;
  for (std::size_t idx : subset) {
    const Scenario& sc = records[idx].scenario;
    for (std::size_t j = 0; j < sc.n_ue(); ++j) {
      for (std::size_t i : sc.serving[j]) {
        const double db = to_db(sc.sinr(i, j), kSinrDbFloor);
        smin = std::min(smin, db);
        smax = std::max(smax, db);
      }
      rmin = std::min(rmin, sc.req_bps[j]);
      rmax = std::max(rmax, sc.req_bps[j]);
    }
  }
  if (!std::isfinite(smin) || !std::isfinite(rmin))
    throw Error(ErrorKind::InvalidArgument, "cannot fit normalisation on an empty dataset");
  if (!(smax > smin)) {
    log_warn("degenerate SINR range; widened by 1e-6");
    smin -= 1e-6;
    smax += 1e-6;
  }
  if (!(rmax > rmin)) {
    log_warn("degenerate rate range; widened by 1e-6");
    rmin -= 1e-6;
    rmax += 1e-6;
  }
  return {smin, smax, rmin, rmax};
}

Split split_train_val(std::size_t n, std::uint64_t seed) {
  if (n < 5) throw Error(ErrorKind::InvalidArgument, "an 80:20 split needs at least 5 samples");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, 0x53504c54);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = n * 8 / 10;
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return s;
}

std::vector<SampleGraph> build_graphs(std::span<const Record> records, const NormMeta& norm, int workers) {
  std::vector<SampleGraph> out(records.size());
  std::vector<std::exception_ptr> errors(records.size());
#pragma omp parallel for schedule(static) num_threads(thread_count(workers))
  for (std::size_t k = 0; k < records.size(); ++k) {
    try {
      const Record& r = records[k];
      if (r.labels) {
        const AllocationMatrix a = allocation_from_labels(r.scenario, *r.labels);
        out[k] = build_graph(r.scenario, &a, norm);
      } else {
        out[k] = build_graph(r.scenario, nullptr, norm);
      }
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return out;
}

// ---- training ---------------------------------------------------------------

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorKind::InvalidConfig, "lr must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error(ErrorKind::InvalidConfig, "lr_decay must be in (0, 1]");
}

namespace {

struct EvalStats {
  double mse = 0.0;
  double mean_sum_rate = 0.0;
};

EvalStats evaluate_split(const Model& model, const std::vector<SampleGraph>& graphs, std::span<const Record> records,
                         std::size_t batch_size) {
  double sq = 0.0, rate = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < graphs.size(); start += batch_size) {
    const std::size_t end = std::min(graphs.size(), start + batch_size);
    std::vector<const SampleGraph*> ptrs;
    for (std::size_t k = start; k < end; ++k) ptrs.push_back(&graphs[k]);
    const GraphBatch batch = make_batch(ptrs);
    const Mat pred = model.predict(batch);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d = pred.data[i] - batch.labels.data[i];
      sq += d * d;
    }
    count += pred.size();
    for (std::size_t s = 0; s < batch.n_samples(); ++s) {
      const std::size_t r0 = batch.sample_ue_offset[s], r1 = batch.sample_ue_offset[s + 1];
      Mat raw(r1 - r0, pred.cols);
      std::copy(pred.data.begin() + static_cast<std::ptrdiff_t>(r0 * pred.cols),
                pred.data.begin() + static_cast<std::ptrdiff_t>(r1 * pred.cols), raw.data.begin());
      const Scenario& sc = records[start + s].scenario;
      rate += throughput(sc, project_feasible(raw, sc)).total_bps;
    }
  }
  return {sq / static_cast<double>(count), rate / static_cast<double>(graphs.size())};
}

void require_labelled(std::span<const Record> records, const char* what) {
  for (const Record& r : records)
    if (!r.labels) throw Error(ErrorKind::InvalidArgument, std::string(what) + " contains unlabelled samples");
}

}  // namespace

TrainResult train(ModelKind kind, const TrainConfig& cfg, std::span<const Record> dataset) {
  const Split split = split_train_val(dataset.size(), cfg.seed);
  std::vector<Record> tr, va;
  for (std::size_t k : split.train) tr.push_back(dataset[k]);
  for (std::size_t k : split.val) va.push_back(dataset[k]);
  return train(kind, cfg, tr, va);
}

TrainResult train(ModelKind kind, const TrainConfig& cfg, std::span<const Record> train_set,
                  std::span<const Record> val_set) {
  cfg.validate();
  if (train_set.empty() || val_set.empty()) throw Error(ErrorKind::InvalidArgument, "train and val sets must be non-empty");
  require_labelled(train_set, "training set");
  require_labelled(val_set, "validation set");

  const std::size_t n_a = train_set.front().scenario.n_ap();
  const std::size_t n_f = train_set.front().scenario.n_subflows();
  std::set<std::size_t> nu_set;
  for (auto set : {train_set, val_set})
    for (const Record& r : set) {
      if (r.scenario.n_subflows() != n_f)
        throw Error(ErrorKind::ModelMismatch, "training data mixes subflow counts");
      nu_set.insert(r.scenario.n_ue());
    }

  Model model;
  model.kind = kind;
  model.norm = fit_normalizer(train_set);
  model.trained_on = {n_a, n_f, std::vector<std::size_t>(nu_set.begin(), nu_set.end()), cfg.seed, 0};
  if (kind == ModelKind::Gat) {
    GatConfig g = cfg.gat;
    g.in_dim = n_f + 1;
    g.out_dim = n_f;
    if (g.n_heads == 0) g.n_heads = GatConfig::default_heads(*nu_set.rbegin());
    model.gat = init_gat(g, cfg.seed);
  } else {
    if (nu_set.size() != 1)
      throw Error(ErrorKind::ModelMismatch, "the dnn baseline needs a single N_u across train and val");
    DnnConfig d = cfg.dnn;
    d.n_ue = *nu_set.begin();
    d.n_subflows = n_f;
    model.dnn = init_dnn(d, cfg.seed);
  }

  const std::vector<SampleGraph> train_graphs = build_graphs(train_set, model.norm);
  const std::vector<SampleGraph> val_graphs = build_graphs(val_set, model.norm);

  std::vector<Mat*> params = model.tensors();
  AdamState adam = make_adam(params, cfg.lr, cfg.lr_decay);
  Rng shuffle_rng = make_rng(cfg.seed, 1);
  Rng dropout_rng = make_rng(cfg.seed, 2);

  TrainResult res;
  {
    const EvalStats t0 = evaluate_split(model, train_graphs, train_set, cfg.batch_size);
    const EvalStats v0 = evaluate_split(model, val_graphs, val_set, cfg.batch_size);
    res.history.push_back({0, adam.lr, t0.mse, v0.mse, v0.mean_sum_rate});
  }
  Model best = model;
  double best_val = res.history.front().val_mse;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_graphs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Mat> grads;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const SampleGraph*> ptrs;
      for (std::size_t k = start; k < end; ++k) ptrs.push_back(&train_graphs[order[k]]);
      const GraphBatch batch = make_batch(ptrs);

      double loss = 0.0;
      grads.clear();
      if (kind == ModelKind::Gat) {
        const GatForward f = gat_forward(batch, model.gat, true, &dropout_rng);
        loss = mse_loss(f.predictions, batch.labels);
        if (std::isfinite(loss)) {
          GatParams g = gat_backward(batch, model.gat, f, mse_grad(f.predictions, batch.labels));
          for (Mat* m : g.tensors()) grads.push_back(std::move(*m));
        }
      } else {
        const DnnForward f = dnn_forward(dnn_inputs(batch, model.dnn.config.n_ue), model.dnn, true, &dropout_rng);
        loss = mse_loss(f.predictions, batch.labels);
        if (std::isfinite(loss)) {
          DnnParams g = dnn_backward(model.dnn, f, mse_grad(f.predictions, batch.labels));
          for (Mat* m : g.tensors()) grads.push_back(std::move(*m));
        }
      }
      if (!std::isfinite(loss)) {
        std::string seeds;
        double max_feat = 0.0;
        for (std::size_t k = start; k < end; ++k) seeds += (seeds.empty() ? "" : ",") + std::to_string(train_set[order[k]].seed);
        for (double v : batch.features.data) max_feat = std::max(max_feat, std::abs(v));
        throw Error(ErrorKind::Numeric, "non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                            std::to_string(n_batches) + "; max |feature| " + fmt(max_feat) +
                                            "; sample seeds [" + seeds + "]");
      }
      adam_step(params, grads, adam);
      loss_sum += loss;
      ++n_batches;
    }

    const double epoch_lr = adam.lr;
    adam.decay();
    const EvalStats v = evaluate_split(model, val_graphs, val_set, cfg.batch_size);
    res.history.push_back({epoch, epoch_lr, loss_sum / static_cast<double>(n_batches), v.mse, v.mean_sum_rate});
    log_debug("epoch " + std::to_string(epoch) + " train_mse " + fmt(res.history.back().train_mse) + " val_mse " +
              fmt(v.mse));
    if (v.mse < best_val) {
      best_val = v.mse;
      best = model;
      res.best_epoch = epoch;
      since_best = 0;
    } else if (cfg.patience && ++since_best >= cfg.patience) {
      break;
    }
  }
  best.trained_on.epochs = res.history.size() - 1;
  res.model = std::move(best);
  return res;
}

void write_history_csv(const std::filesystem::path& path, std::span<const HistoryRow> history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "epoch,lr,train_mse,val_mse,val_sum_rate_bps\n";
  for (const HistoryRow& h : history)
    out << h.epoch << ',' << fmt(h.lr) << ',' << fmt(h.train_mse) << ',' << fmt(h.val_mse) << ','
        << fmt(h.val_sum_rate_bps) << '\n';
}

}  // namespace hetlb
