#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetlb/allocator.hpp"
#include "hetlb/channel.hpp"
#include "hetlb/metrics.hpp"
#include "hetlb/model.hpp"
#include "hetlb/pipeline.hpp"
#include "hetlb/scenario.hpp"

namespace hetlb {

// Everything a run can be configured with. Defaults are Scale II, N_u = 20,
// N_f = 3 with the default PHY, solver and training settings.
struct RunConfig {
  RoomConfig room;
  std::vector<std::size_t> n_ue_mix;
  LiFiPhyConfig lifi;
  WiFiPhyConfig wifi;
  SolverConfig solver;
  ModelKind model_kind = ModelKind::Gat;
  TrainConfig train;
  EvalOptions eval;
  BenchOptions bench;

  void validate() const;
};

// Sections: room, lifi_phy, wifi_phy, solver, model, train, eval. All keys are
// optional; unknown keys raise a Schema error naming the offending path.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace hetlb
