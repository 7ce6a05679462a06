#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetlb/mat.hpp"
#include "hetlb/scenario.hpp"

namespace hetlb {

inline constexpr int kDatasetSchemaVersion = 1;

// One dataset line: a scenario plus optional serving-order labels.
struct Record {
  std::uint64_t seed = 0;
  Scenario scenario;
  std::optional<Mat> labels;  // N_u x N_f
  std::string label_method;   // "optimizer" | "heuristic" | "oracle" | "" (unlabelled)
};

nlohmann::json record_to_json(const Record& r);
Record record_from_json(const nlohmann::json& j);

void write_jsonl(const std::filesystem::path& path, std::span<const Record> records);
std::vector<Record> read_jsonl(const std::filesystem::path& path);

struct DatasetMeta {
  std::size_t n_samples = 0;
  std::size_t n_a = 0;
  std::size_t n_f = 0;
  std::vector<std::size_t> n_u;  // distinct UE counts present, ascending
  NormMeta norm;                 // fitted over the whole file
  std::string label_method;
  std::uint64_t seed = 0;
  std::size_t skipped = 0;
};

nlohmann::json meta_to_json(const DatasetMeta& m);
DatasetMeta meta_from_json(const nlohmann::json& j);
nlohmann::json norm_to_json(const NormMeta& n);
NormMeta norm_from_json(const nlohmann::json& j);

// <dir>/<stem>.meta.json for <dir>/<stem>.jsonl
std::filesystem::path meta_path(const std::filesystem::path& dataset);
void write_meta(const std::filesystem::path& path, const DatasetMeta& m);
DatasetMeta read_meta(const std::filesystem::path& path);

// Parses a JSON document from a file; parse failures become Schema errors
// carrying the byte offset.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace hetlb
