#include <doctest.h>

#include "hetlb/config.hpp"
#include "tmpdir.hpp"

using namespace hetlb;
using nlohmann::json;

namespace {

ErrorKind kind_of(const json& j) {
  try {
    config_from_json(j);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("defaults: Scale II, 20 UEs, 3 subflows, training table") {
  const RunConfig c = config_from_json(json::object());
  CHECK(c.room.n_ap() == 17);
  CHECK(c.room.n_ue == 20);
  CHECK(c.room.n_subflows == 3);
  CHECK(c.room.mean_rate_bps == 100e6);
  CHECK(c.train.batch_size == 100);
  CHECK(c.train.lr == 1e-3);
  CHECK(c.train.lr_decay == 0.95);
  CHECK(c.train.gat.n_layers == 2);
  CHECK(c.train.gat.hidden_dim == 32);
  CHECK(c.train.gat.dropout_p == 0.5);
  CHECK(c.train.dnn.n_hidden_layers == 4);
  CHECK(c.model_kind == ModelKind::Gat);
  CHECK(c.lifi.bandwidth_Hz == 20e6);
  CHECK(c.wifi.breakpoint_m == 10.0);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("sections override fields") {
  const json j = json::parse(R"({
    "room": {"scale": 1, "n_ue": 10, "n_subflows": 2},
    "lifi_phy": {"nlos_factor": 0.1},
    "solver": {"tolerance": 1e-6},
    "model": {"kind": "dnn", "dropout_p": 0.25, "n_heads": 8},
    "train": {"epochs": 7, "seed": 9},
    "eval": {"workers": 2, "bench_repeats": 20}
  })");
  const RunConfig c = config_from_json(j);
  CHECK(c.room.n_ap() == 10);
  CHECK(c.room.n_ue == 10);
  CHECK(c.room.n_subflows == 2);
  CHECK(c.lifi.nlos_factor == 0.1);
  CHECK(c.solver.tolerance == 1e-6);
  CHECK(c.model_kind == ModelKind::Dnn);
  CHECK(c.train.gat.dropout_p == 0.25);
  CHECK(c.train.dnn.dropout_p == 0.25);
  CHECK(c.train.gat.n_heads == 8);
  CHECK(c.train.epochs == 7);
  CHECK(c.train.seed == 9);
  CHECK(c.eval.workers == 2);
  CHECK(c.bench.repeats == 20);
}

TEST_CASE("round trip through JSON") {
  RunConfig c;
  c.room = RoomConfig::scale(3, 30, 4);
  c.train.epochs = 3;
  c.eval.jain_absolute = true;
  const RunConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.room.n_ap() == 26);
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK(kind_of(json::parse(R"({"rooom": {}})")) == ErrorKind::Schema);
  CHECK(kind_of(json::parse(R"({"room": {"n_ue": "many"}})")) == ErrorKind::Schema);
  CHECK(kind_of(json::parse(R"({"train": {"lr": "fast"}})")) == ErrorKind::Schema);
  CHECK(kind_of(json::parse(R"({"model": {"kind": "cnn"}})")) == ErrorKind::Schema);
  CHECK(kind_of(json::parse(R"([1, 2])")) == ErrorKind::Schema);
  CHECK(kind_of(json::parse(R"({"train": {"batch_size": 0}})")) == ErrorKind::InvalidConfig);
  CHECK(kind_of(json::parse(R"({"room": {"n_subflows": 1}})")) == ErrorKind::InvalidConfig);
}

TEST_CASE("load_config reads files") {
  test::TempDir dir;
  test::spit(dir / "c.json", R"({"train": {"epochs": 4}})");
  CHECK(load_config(dir / "c.json").train.epochs == 4);
  test::spit(dir / "bad.json", R"({"train": )");
  CHECK_THROWS_AS(load_config(dir / "bad.json"), Error);
}
