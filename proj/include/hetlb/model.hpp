#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetlb/allocator.hpp"
#include "hetlb/dnn.hpp"
#include "hetlb/gat.hpp"
#include "hetlb/scenario.hpp"

namespace hetlb {

inline constexpr int kCheckpointSchemaVersion = 1;

enum class ModelKind { Gat, Dnn };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct TrainedOn {
  std::size_t n_a = 0;
  std::size_t n_f = 0;
  std::vector<std::size_t> n_u;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
};

// A trained predictor: parameters plus the feature normalisation it was fitted with.
struct Model {
  ModelKind kind = ModelKind::Gat;
  GatParams gat;
  DnnParams dnn;
  NormMeta norm;
  TrainedOn trained_on;

  std::size_t n_subflows() const;
  std::vector<Mat*> tensors();
  std::vector<const Mat*> tensors() const;

  // Inference-mode predictions for every UE row of the batch (N_f columns).
  Mat predict(const GraphBatch& batch) const;
  // Scenario -> graph -> prediction -> feasible allocation.
  AllocationMatrix allocate(const Scenario& sc) const;
  // Throws ModelMismatch when the scenario cannot be evaluated by this model.
  void check_compatible(const Scenario& sc) const;
};

nlohmann::json model_to_json(const Model& m);
Model model_from_json(const nlohmann::json& j);

void save_checkpoint(const Model& m, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace hetlb
