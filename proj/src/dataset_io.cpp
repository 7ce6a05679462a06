#include "hetlb/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "hetlb/errors.hpp"

namespace hetlb {

using nlohmann::json;

namespace {

json vec3(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::Schema, "position must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorKind::Schema, std::string("missing field '") + key + "'");
  return *it;
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("field '") + key + "': " + e.what());
  }
}

void check_version(const json& j, int expected, const char* what) {
  const int v = get<int>(j, "schema_version");
  if (v != expected)
    throw Error(ErrorKind::Schema, std::string(what) + " schema_version " + std::to_string(v) +
                                       " is not supported (expected " + std::to_string(expected) + ")");
}

}  // namespace

json record_to_json(const Record& r) {
  const Scenario& sc = r.scenario;
  json j;
  j["schema_version"] = kDatasetSchemaVersion;
  j["seed"] = r.seed;
  j["scale"] = {{"room", {sc.room.length_m, sc.room.width_m, sc.room.height_m}},
                {"grid", {sc.room.grid_rows, sc.room.grid_cols}},
                {"d0", sc.room.ap_separation_m},
                {"h0", sc.room.wifi_height_m},
                {"ue_height", sc.room.ue_height_m},
                {"mean_rate_bps", sc.room.mean_rate_bps}};
  j["n_a"] = sc.n_ap();
  j["n_u"] = sc.n_ue();
  j["n_f"] = sc.n_subflows();
  json aps = json::array();
  for (std::size_t i = 0; i < sc.n_ap(); ++i) aps.push_back({{"kind", to_string(sc.ap_kinds[i])}, {"pos", vec3(sc.ap_pos[i])}});
  j["ap"] = std::move(aps);
  json ues = json::array();
  for (std::size_t u = 0; u < sc.n_ue(); ++u) {
    json sinr = json::array(), cap = json::array();
    for (std::size_t i : sc.serving[u]) {
      sinr.push_back(sc.sinr(i, u));
      cap.push_back(sc.capacity_bps(i, u));
    }
    ues.push_back({{"pos", vec3(sc.ue_pos[u])},
                   {"req_bps", sc.req_bps[u]},
                   {"serving", sc.serving[u]},
                   {"sinr", std::move(sinr)},
                   {"cap_bps", std::move(cap)}});
  }
  j["ue"] = std::move(ues);
  if (r.labels) {
    json labels = json::array();
    for (std::size_t u = 0; u < r.labels->rows; ++u) {
      const auto row = r.labels->row(u);
      labels.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["labels"] = std::move(labels);
    j["label_method"] = r.label_method;
  }
  return j;
}

Record record_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Schema, "record must be a JSON object");
  check_version(j, kDatasetSchemaVersion, "dataset");
  Record r;
  r.seed = get<std::uint64_t>(j, "seed");
  Scenario& sc = r.scenario;
  const json& scale = field(j, "scale");
  const auto room = get<std::vector<double>>(scale, "room");
  const auto grid = get<std::vector<std::size_t>>(scale, "grid");
  if (room.size() != 3 || grid.size() != 2) throw Error(ErrorKind::Schema, "scale.room / scale.grid malformed");
  sc.room.length_m = room[0];
  sc.room.width_m = room[1];
  sc.room.height_m = room[2];
  sc.room.grid_rows = grid[0];
  sc.room.grid_cols = grid[1];
  sc.room.ap_separation_m = get<double>(scale, "d0");
  sc.room.wifi_height_m = get<double>(scale, "h0");
  if (scale.contains("ue_height")) sc.room.ue_height_m = get<double>(scale, "ue_height");
  if (scale.contains("mean_rate_bps")) sc.room.mean_rate_bps = get<double>(scale, "mean_rate_bps");

  const auto na = get<std::size_t>(j, "n_a");
  const auto nu = get<std::size_t>(j, "n_u");
  const auto nf = get<std::size_t>(j, "n_f");
  sc.room.n_ue = nu;
  sc.room.n_subflows = nf;

  const json& aps = field(j, "ap");
  if (!aps.is_array() || aps.size() != na) throw Error(ErrorKind::Schema, "ap array length != n_a");
  for (const json& a : aps) {
    sc.ap_kinds.push_back(ap_kind_from_string(get<std::string>(a, "kind")));
    sc.ap_pos.push_back(vec3_from(field(a, "pos")));
  }
  const json& ues = field(j, "ue");
  if (!ues.is_array() || ues.size() != nu) throw Error(ErrorKind::Schema, "ue array length != n_u");
  sc.sinr = Mat(na, nu);
  sc.capacity_bps = Mat(na, nu);
  for (std::size_t u = 0; u < nu; ++u) {
    const json& e = ues[u];
    sc.ue_pos.push_back(vec3_from(field(e, "pos")));
    sc.req_bps.push_back(get<double>(e, "req_bps"));
    auto serving = get<std::vector<std::size_t>>(e, "serving");
    const auto sinr = get<std::vector<double>>(e, "sinr");
    const auto cap = get<std::vector<double>>(e, "cap_bps");
    if (serving.size() != nf || sinr.size() != nf || cap.size() != nf)
      throw Error(ErrorKind::Schema, "ue serving/sinr/cap_bps length != n_f");
    for (std::size_t k = 0; k < nf; ++k) {
      if (serving[k] >= na) throw Error(ErrorKind::Schema, "serving AP index out of range");
      sc.sinr(serving[k], u) = sinr[k];
      sc.capacity_bps(serving[k], u) = cap[k];
    }
    sc.serving.push_back(std::move(serving));
  }
  try {
    sc.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Schema, std::string("record fails scenario invariants: ") + e.what());
  }

  if (j.contains("labels") && !j["labels"].is_null()) {
    const auto rows = get<std::vector<std::vector<double>>>(j, "labels");
    if (rows.size() != nu) throw Error(ErrorKind::Schema, "labels row count != n_u");
    Mat l(nu, nf);
    for (std::size_t u = 0; u < nu; ++u) {
      if (rows[u].size() != nf) throw Error(ErrorKind::Schema, "labels row length != n_f");
      for (std::size_t k = 0; k < nf; ++k) l(u, k) = rows[u][k];
    }
    r.labels = std::move(l);
    r.label_method = get<std::string>(j, "label_method");
    if (r.label_method != "optimizer" && r.label_method != "heuristic" && r.label_method != "oracle")
      throw Error(ErrorKind::Schema, "unknown label_method '" + r.label_method + "'");
  }
  return r;
}

void write_jsonl(const std::filesystem::path& path, std::span<const Record> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  for (const Record& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<Record> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<Record> out;
  std::string line;
  std::size_t line_no = 0, offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(line_no) + ": parse error at byte " +
                                         std::to_string(line_start + e.byte) + ": " + e.what());
    }
    try {
      out.push_back(record_from_json(j));
    } catch (const Error& e) {
      throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(line_no) + ": " +
                                         (e.kind() == ErrorKind::Schema ? e.message() : std::string(e.what())));
    }
  }
  return out;
}

json norm_to_json(const NormMeta& n) {
  return {{"sinr_db_min", n.sinr_db_min},
          {"sinr_db_max", n.sinr_db_max},
          {"rate_min", n.rate_min},
          {"rate_max", n.rate_max},
          {"hash", n.hash()}};
}

NormMeta norm_from_json(const json& j) {
  NormMeta n;
  n.sinr_db_min = get<double>(j, "sinr_db_min");
  n.sinr_db_max = get<double>(j, "sinr_db_max");
  n.rate_min = get<double>(j, "rate_min");
  n.rate_max = get<double>(j, "rate_max");
  if (j.contains("hash") && get<std::uint64_t>(j, "hash") != n.hash())
    throw Error(ErrorKind::Integrity, "normalisation metadata does not match its recorded hash");
  if (!(n.sinr_db_max > n.sinr_db_min) || !(n.rate_max > n.rate_min))
    throw Error(ErrorKind::Schema, "normalisation ranges must satisfy min < max");
  return n;
}

json meta_to_json(const DatasetMeta& m) {
  return {{"schema_version", kDatasetSchemaVersion},
          {"n_samples", m.n_samples},
          {"n_a", m.n_a},
          {"n_f", m.n_f},
          {"n_u", m.n_u},
          {"norm", norm_to_json(m.norm)},
          {"label_method", m.label_method},
          {"seed", m.seed},
          {"skipped", m.skipped}};
}

DatasetMeta meta_from_json(const json& j) {
  check_version(j, kDatasetSchemaVersion, "dataset meta");
  DatasetMeta m;
  m.n_samples = get<std::size_t>(j, "n_samples");
  m.n_a = get<std::size_t>(j, "n_a");
  m.n_f = get<std::size_t>(j, "n_f");
  m.n_u = get<std::vector<std::size_t>>(j, "n_u");
  m.norm = norm_from_json(field(j, "norm"));
  m.label_method = get<std::string>(j, "label_method");
  m.seed = get<std::uint64_t>(j, "seed");
  m.skipped = get<std::size_t>(j, "skipped");
  return m;
}

std::filesystem::path meta_path(const std::filesystem::path& dataset) {
  std::filesystem::path p = dataset;
  p.replace_extension(".meta.json");
  return p;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Schema, path.string() + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

void write_meta(const std::filesystem::path& path, const DatasetMeta& m) { write_json_file(path, meta_to_json(m)); }
DatasetMeta read_meta(const std::filesystem::path& path) { return meta_from_json(read_json_file(path)); }

}  // namespace hetlb
