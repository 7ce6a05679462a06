#include "hetlb/model.hpp"

#include "hetlb/dataset_io.hpp"
#include "hetlb/errors.hpp"

namespace hetlb {

using nlohmann::json;

const char* to_string(ModelKind k) { return k == ModelKind::Gat ? "gat" : "dnn"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "gat") return ModelKind::Gat;
  if (s == "dnn") return ModelKind::Dnn;
  throw Error(ErrorKind::InvalidArgument, "unknown model kind '" + s + "' (expected gat or dnn)");
}

std::size_t Model::n_subflows() const { return kind == ModelKind::Gat ? gat.config.out_dim : dnn.config.n_subflows; }

std::vector<Mat*> Model::tensors() { return kind == ModelKind::Gat ? gat.tensors() : dnn.tensors(); }
std::vector<const Mat*> Model::tensors() const { return kind == ModelKind::Gat ? gat.tensors() : dnn.tensors(); }

void Model::check_compatible(const Scenario& sc) const {
  if (sc.n_subflows() != n_subflows())
    throw Error(ErrorKind::ModelMismatch, std::string(to_string(kind)) + " model expects N_f = " +
                                              std::to_string(n_subflows()) + ", data has N_f = " +
                                              std::to_string(sc.n_subflows()));
  if (kind == ModelKind::Dnn && sc.n_ue() != dnn.config.n_ue)
    throw Error(ErrorKind::ModelMismatch, "dnn model is fixed to N_u = " + std::to_string(dnn.config.n_ue) +
                                              ", data has N_u = " + std::to_string(sc.n_ue()));
}

Mat Model::predict(const GraphBatch& batch) const {
  if (kind == ModelKind::Gat) return gat_forward(batch, gat, false).predictions;
  return dnn_forward(dnn_inputs(batch, dnn.config.n_ue), dnn, false).predictions;
}

AllocationMatrix Model::allocate(const Scenario& sc) const {
  check_compatible(sc);
  const GraphBatch batch = make_batch(build_graph(sc, nullptr, norm));
  return project_feasible(predict(batch), sc);
}

// ---- serialisation ----------------------------------------------------------

namespace {

json mat_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Mat mat_from(const json& j, std::size_t rows, std::size_t cols, const std::string& what) {
  if (!j.is_array() || j.size() != rows) throw Error(ErrorKind::Schema, what + ": expected " + std::to_string(rows) + " rows");
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw Error(ErrorKind::Schema, what + ": expected " + std::to_string(cols) + " columns");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw Error(ErrorKind::Schema, what + ": non-numeric entry");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

template <typename T>
T req(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorKind::Schema, std::string("checkpoint: missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("checkpoint field '") + key + "': " + e.what());
  }
}

json gat_config_json(const GatConfig& c) {
  return {{"n_layers", c.n_layers},         {"hidden_dim", c.hidden_dim},
          {"n_heads", c.n_heads},           {"in_dim", c.in_dim},
          {"out_dim", c.out_dim},           {"leaky_slope", c.leaky_slope},
          {"dropout_p", c.dropout_p},       {"hidden_activation", to_string(c.hidden_activation)},
          {"output_activation", to_string(c.output_activation)}};
}

GatConfig gat_config_from(const json& j) {
  GatConfig c;
  c.n_layers = req<std::size_t>(j, "n_layers");
  c.hidden_dim = req<std::size_t>(j, "hidden_dim");
  c.n_heads = req<std::size_t>(j, "n_heads");
  c.in_dim = req<std::size_t>(j, "in_dim");
  c.out_dim = req<std::size_t>(j, "out_dim");
  c.leaky_slope = req<double>(j, "leaky_slope");
  c.dropout_p = req<double>(j, "dropout_p");
  c.hidden_activation = activation_from_string(req<std::string>(j, "hidden_activation"));
  c.output_activation = activation_from_string(req<std::string>(j, "output_activation"));
  c.validate();
  return c;
}

json dnn_config_json(const DnnConfig& c) {
  return {{"n_hidden_layers", c.n_hidden_layers},
          {"hidden_width", c.hidden_width},
          {"n_ue", c.n_ue},
          {"n_subflows", c.n_subflows},
          {"dropout_p", c.dropout_p}};
}

DnnConfig dnn_config_from(const json& j) {
  DnnConfig c;
  c.n_hidden_layers = req<std::size_t>(j, "n_hidden_layers");
  c.hidden_width = req<std::size_t>(j, "hidden_width");
  c.n_ue = req<std::size_t>(j, "n_ue");
  c.n_subflows = req<std::size_t>(j, "n_subflows");
  c.dropout_p = req<double>(j, "dropout_p");
  c.validate();
  return c;
}

}  // namespace

json model_to_json(const Model& m) {
  json j;
  j["schema_version"] = kCheckpointSchemaVersion;
  j["model_kind"] = to_string(m.kind);
  json layers = json::array();
  if (m.kind == ModelKind::Gat) {
    j["config"] = gat_config_json(m.gat.config);
    for (const GatLayer& l : m.gat.layers) {
      json heads = json::array();
      for (std::size_t k = 0; k < l.weight.size(); ++k)
        heads.push_back({{"weight", mat_json(l.weight[k])}, {"attention", mat_json(l.attention[k])[0]}});
      layers.push_back({{"heads", std::move(heads)}, {"bias", mat_json(l.bias)[0]}});
    }
  } else {
    j["config"] = dnn_config_json(m.dnn.config);
    for (std::size_t l = 0; l < m.dnn.weight.size(); ++l)
      layers.push_back({{"weight", mat_json(m.dnn.weight[l])}, {"bias", mat_json(m.dnn.bias[l])[0]}});
  }
  j["params"] = {{"layers", std::move(layers)}};
  j["norm_meta"] = norm_to_json(m.norm);
  json n_u = m.trained_on.n_u.size() == 1 ? json(m.trained_on.n_u.front()) : json(m.trained_on.n_u);
  j["trained_on"] = {{"n_a", m.trained_on.n_a},
                     {"n_f", m.trained_on.n_f},
                     {"n_u", std::move(n_u)},
                     {"seed", m.trained_on.seed},
                     {"epochs", m.trained_on.epochs}};
  return j;
}

Model model_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Schema, "checkpoint must be a JSON object");
  const int version = req<int>(j, "schema_version");
  if (version != kCheckpointSchemaVersion)
    throw Error(ErrorKind::Schema, "checkpoint schema_version " + std::to_string(version) +
                                       " is not supported (expected " + std::to_string(kCheckpointSchemaVersion) + ")");
  Model m;
  try {
    m.kind = model_kind_from_string(req<std::string>(j, "model_kind"));
  } catch (const Error& e) {
    throw Error(ErrorKind::Schema, e.what());
  }
  const json cfg = req<json>(j, "config");
  const json layers = req<json>(req<json>(j, "params"), "layers");
  if (!layers.is_array()) throw Error(ErrorKind::Schema, "params.layers must be an array");
  auto as_row = [](const json& v) { return json::array({v}); };
  if (m.kind == ModelKind::Gat) {
    m.gat.config = gat_config_from(cfg);
    const GatConfig& c = m.gat.config;
    if (layers.size() != c.n_layers) throw Error(ErrorKind::Schema, "layer count does not match config");
    for (std::size_t l = 0; l < c.n_layers; ++l) {
      const std::size_t in = c.layer_in(l), out = c.layer_out(l);
      const json heads = req<json>(layers[l], "heads");
      if (!heads.is_array() || heads.size() != c.n_heads) throw Error(ErrorKind::Schema, "head count does not match config");
      GatLayer layer;
      for (const json& h : heads) {
        layer.weight.push_back(mat_from(req<json>(h, "weight"), out, in, "weight"));
        layer.attention.push_back(mat_from(as_row(req<json>(h, "attention")), 1, 2 * out, "attention"));
      }
      layer.bias = mat_from(as_row(req<json>(layers[l], "bias")), 1, out, "bias");
      m.gat.layers.push_back(std::move(layer));
    }
  } else {
    m.dnn.config = dnn_config_from(cfg);
    const DnnConfig& c = m.dnn.config;
    if (layers.size() != c.n_hidden_layers + 1) throw Error(ErrorKind::Schema, "layer count does not match config");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::size_t in = l == 0 ? c.in_dim() : c.hidden_width;
      const std::size_t out = l == c.n_hidden_layers ? c.out_dim() : c.hidden_width;
      m.dnn.weight.push_back(mat_from(req<json>(layers[l], "weight"), out, in, "weight"));
      m.dnn.bias.push_back(mat_from(as_row(req<json>(layers[l], "bias")), 1, out, "bias"));
    }
  }
  m.norm = norm_from_json(req<json>(j, "norm_meta"));
  const json t = req<json>(j, "trained_on");
  m.trained_on.n_a = req<std::size_t>(t, "n_a");
  m.trained_on.n_f = req<std::size_t>(t, "n_f");
  const json nu = req<json>(t, "n_u");
  m.trained_on.n_u = nu.is_array() ? nu.get<std::vector<std::size_t>>() : std::vector<std::size_t>{nu.get<std::size_t>()};
  m.trained_on.seed = req<std::uint64_t>(t, "seed");
  m.trained_on.epochs = req<std::size_t>(t, "epochs");
  return m;
}

void save_checkpoint(const Model& m, const std::filesystem::path& path) { write_json_file(path, model_to_json(m)); }

Model load_checkpoint(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  try {
    return model_from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
  }
}

}  // namespace hetlb
