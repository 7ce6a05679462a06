#include "hetlb/config.hpp"

#include <set>

#include "hetlb/dataset_io.hpp"
#include "hetlb/errors.hpp"

namespace hetlb {

using nlohmann::json;

namespace {

// Reads optional keys of one JSON object and remembers which keys it knows.
class Section {
 public:
  Section(const json& root, const std::string& name) : name_(name) {
    auto it = root.find(name);
    if (it != root.end()) {
      if (!it->is_object()) throw Error(ErrorKind::Schema, "config section '" + name + "' must be an object");
      obj_ = &*it;
    }
  }

  template <typename T>
  bool get(const char* key, T& out) {
    known_.insert(key);
    if (!obj_) return false;
    auto it = obj_->find(key);
    if (it == obj_->end()) return false;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Schema, "config key '" + name_ + "." + key + "': " + e.what());
    }
    return true;
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [k, v] : obj_->items())
      if (!known_.count(k)) throw Error(ErrorKind::Schema, "unknown config key '" + name_ + "." + k + "'");
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> known_;
};

}  // namespace

void RunConfig::validate() const {
  room.validate();
  lifi.validate();
  wifi.validate();
  solver.validate();
  train.validate();
  for (std::size_t nu : n_ue_mix)
    if (nu < 1) throw Error(ErrorKind::InvalidConfig, "room.n_ue_mix entries must be >= 1");
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Schema, "config must be a JSON object");
  static const std::set<std::string> sections{"room", "lifi_phy", "wifi_phy", "solver", "model", "train", "eval"};
  for (const auto& [k, v] : j.items())
    if (!sections.count(k)) throw Error(ErrorKind::Schema, "unknown config section '" + k + "'");

  RunConfig c;
  {
    Section s(j, "room");
    int scale = 0;
    if (s.get("scale", scale)) c.room = RoomConfig::scale(scale, c.room.n_ue, c.room.n_subflows);
    s.get("length_m", c.room.length_m);
    s.get("width_m", c.room.width_m);
    s.get("height_m", c.room.height_m);
    s.get("grid_rows", c.room.grid_rows);
    s.get("grid_cols", c.room.grid_cols);
    s.get("ap_separation_m", c.room.ap_separation_m);
    s.get("wifi_height_m", c.room.wifi_height_m);
    s.get("ue_height_m", c.room.ue_height_m);
    s.get("n_ue", c.room.n_ue);
    s.get("n_subflows", c.room.n_subflows);
    s.get("mean_rate_bps", c.room.mean_rate_bps);
    s.get("n_ue_mix", c.n_ue_mix);
    s.finish();
  }
  {
    Section s(j, "lifi_phy");
    s.get("semi_angle_deg", c.lifi.semi_angle_deg);
    s.get("pd_area_m2", c.lifi.pd_area_m2);
    s.get("filter_gain", c.lifi.filter_gain);
    s.get("concentrator_gain", c.lifi.concentrator_gain);
    s.get("fov_deg", c.lifi.fov_deg);
    s.get("responsivity_A_per_W", c.lifi.responsivity_A_per_W);
    s.get("mod_power_W", c.lifi.mod_power_W);
    s.get("noise_psd_A2_per_Hz", c.lifi.noise_psd_A2_per_Hz);
    s.get("bandwidth_Hz", c.lifi.bandwidth_Hz);
    s.get("nlos_factor", c.lifi.nlos_factor);
    s.get("wdm_exclude_serving", c.lifi.wdm_exclude_serving);
    s.finish();
  }
  {
    Section s(j, "wifi_phy");
    s.get("tx_power_W", c.wifi.tx_power_W);
    s.get("noise_psd_W_per_Hz", c.wifi.noise_psd_W_per_Hz);
    s.get("bandwidth_Hz", c.wifi.bandwidth_Hz);
    s.get("carrier_freq_Hz", c.wifi.carrier_freq_Hz);
    s.get("breakpoint_m", c.wifi.breakpoint_m);
    s.get("pathloss_exp_after_bp", c.wifi.pathloss_exp_after_bp);
    s.finish();
  }
  {
    Section s(j, "solver");
    s.get("tolerance", c.solver.tolerance);
    s.get("max_iters", c.solver.max_iters);
    s.get("log_floor", c.solver.log_floor);
    s.get("grid_steps", c.solver.grid_steps);
    s.get("oracle_max_points", c.solver.oracle_max_points);
    s.get("oracle_allow_large", c.solver.oracle_allow_large);
    s.finish();
  }
  {
    Section s(j, "model");
    std::string kind;
    if (s.get("kind", kind)) {
      try {
        c.model_kind = model_kind_from_string(kind);
      } catch (const Error& e) {
        throw Error(ErrorKind::Schema, std::string("model.kind: ") + e.what());
      }
    }
    GatConfig& g = c.train.gat;
    s.get("n_layers", g.n_layers);
    s.get("hidden_dim", g.hidden_dim);
    s.get("n_heads", g.n_heads);
    s.get("leaky_slope", g.leaky_slope);
    double dropout = g.dropout_p;
    if (s.get("dropout_p", dropout)) g.dropout_p = c.train.dnn.dropout_p = dropout;
    s.get("dnn_hidden_layers", c.train.dnn.n_hidden_layers);
    s.get("dnn_hidden_width", c.train.dnn.hidden_width);
    s.finish();
  }
  {
    Section s(j, "train");
    s.get("epochs", c.train.epochs);
    s.get("batch_size", c.train.batch_size);
    s.get("lr", c.train.lr);
    s.get("lr_decay", c.train.lr_decay);
    s.get("seed", c.train.seed);
    s.get("patience", c.train.patience);
    s.finish();
  }
  {
    Section s(j, "eval");
    s.get("workers", c.eval.workers);
    s.get("bootstrap_resamples", c.eval.bootstrap_resamples);
    s.get("bootstrap_seed", c.eval.bootstrap_seed);
    s.get("jain_absolute", c.eval.jain_absolute);
    s.get("reuse_labels", c.eval.reuse_labels);
    s.get("bench_repeats", c.bench.repeats);
    s.get("bench_warmup", c.bench.warmup);
    s.get("bench_max_instances", c.bench.max_instances);
    s.finish();
  }
  c.eval.solver = c.solver;
  c.bench.solver = c.solver;
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["room"] = {{"length_m", c.room.length_m},
               {"width_m", c.room.width_m},
               {"height_m", c.room.height_m},
               {"grid_rows", c.room.grid_rows},
               {"grid_cols", c.room.grid_cols},
               {"ap_separation_m", c.room.ap_separation_m},
               {"wifi_height_m", c.room.wifi_height_m},
               {"ue_height_m", c.room.ue_height_m},
               {"n_ue", c.room.n_ue},
               {"n_subflows", c.room.n_subflows},
               {"mean_rate_bps", c.room.mean_rate_bps},
               {"n_ue_mix", c.n_ue_mix}};
  j["lifi_phy"] = {{"semi_angle_deg", c.lifi.semi_angle_deg},
                   {"pd_area_m2", c.lifi.pd_area_m2},
                   {"filter_gain", c.lifi.filter_gain},
                   {"concentrator_gain", c.lifi.concentrator_gain},
                   {"fov_deg", c.lifi.fov_deg},
                   {"responsivity_A_per_W", c.lifi.responsivity_A_per_W},
                   {"mod_power_W", c.lifi.mod_power_W},
                   {"noise_psd_A2_per_Hz", c.lifi.noise_psd_A2_per_Hz},
                   {"bandwidth_Hz", c.lifi.bandwidth_Hz},
                   {"nlos_factor", c.lifi.nlos_factor},
                   {"wdm_exclude_serving", c.lifi.wdm_exclude_serving}};
  j["wifi_phy"] = {{"tx_power_W", c.wifi.tx_power_W},
                   {"noise_psd_W_per_Hz", c.wifi.noise_psd_W_per_Hz},
                   {"bandwidth_Hz", c.wifi.bandwidth_Hz},
                   {"carrier_freq_Hz", c.wifi.carrier_freq_Hz},
                   {"breakpoint_m", c.wifi.breakpoint_m},
                   {"pathloss_exp_after_bp", c.wifi.pathloss_exp_after_bp}};
  j["solver"] = {{"tolerance", c.solver.tolerance},
                 {"max_iters", c.solver.max_iters},
                 {"log_floor", c.solver.log_floor},
                 {"grid_steps", c.solver.grid_steps},
                 {"oracle_max_points", c.solver.oracle_max_points},
                 {"oracle_allow_large", c.solver.oracle_allow_large}};
  j["model"] = {{"kind", to_string(c.model_kind)},
                {"n_layers", c.train.gat.n_layers},
                {"hidden_dim", c.train.gat.hidden_dim},
                {"n_heads", c.train.gat.n_heads},
                {"leaky_slope", c.train.gat.leaky_slope},
                {"dropout_p", c.train.gat.dropout_p},
                {"dnn_hidden_layers", c.train.dnn.n_hidden_layers},
                {"dnn_hidden_width", c.train.dnn.hidden_width}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"lr", c.train.lr},
                {"lr_decay", c.train.lr_decay},
                {"seed", c.train.seed},
                {"patience", c.train.patience}};
  j["eval"] = {{"workers", c.eval.workers},
               {"bootstrap_resamples", c.eval.bootstrap_resamples},
               {"bootstrap_seed", c.eval.bootstrap_seed},
               {"jain_absolute", c.eval.jain_absolute},
               {"reuse_labels", c.eval.reuse_labels},
               {"bench_repeats", c.bench.repeats},
               {"bench_warmup", c.bench.warmup},
               {"bench_max_instances", c.bench.max_instances}};
  return j;
}

RunConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json_file(path)); }

}  // namespace hetlb
