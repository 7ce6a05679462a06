#include "hetlb/scenario.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "hetlb/allocator.hpp"
#include "hetlb/errors.hpp"
#include "hetlb/numcore.hpp"

namespace hetlb {

namespace {

constexpr std::uint64_t kUeStream = 0x55450001;
constexpr std::uint64_t kRateStream = 0x52410002;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidConfig, what);
}

}  // namespace

void RoomConfig::validate() const {
  require(length_m > 0.0 && width_m > 0.0 && height_m > 0.0, "room dimensions must be > 0");
  require(grid_rows >= 1 && grid_cols >= 1, "LiFi grid must have at least one AP");
  require(ap_separation_m > 0.0 || (grid_rows == 1 && grid_cols == 1), "ap_separation_m must be > 0");
  require(static_cast<double>(grid_cols - 1) * ap_separation_m <= length_m + 1e-12 &&
              static_cast<double>(grid_rows - 1) * ap_separation_m <= width_m + 1e-12,
          "LiFi grid does not fit inside the room footprint");
  require(wifi_height_m >= 0.0 && wifi_height_m <= height_m, "wifi_height_m must be inside the room");
  require(ue_height_m >= 0.0 && ue_height_m < height_m, "ue_height_m must be below the ceiling");
  require(n_subflows >= 2, "n_subflows must be >= 2");
  require(n_subflows - 1 <= n_lifi(), "n_subflows - 1 exceeds the number of LiFi APs");
  require(mean_rate_bps > 0.0, "mean_rate_bps must be > 0");
}

RoomConfig RoomConfig::scale(int which, std::size_t n_ue, std::size_t n_subflows) {
  RoomConfig c;
  switch (which) {
    case 1: c.length_m = c.width_m = 7.5; c.grid_rows = c.grid_cols = 3; break;
    case 2: c.length_m = c.width_m = 10.0; c.grid_rows = c.grid_cols = 4; break;
    case 3: c.length_m = c.width_m = 12.5; c.grid_rows = c.grid_cols = 5; break;
    default: throw Error(ErrorKind::InvalidConfig, "scale must be 1, 2 or 3");
  }
  c.n_ue = n_ue;
  c.n_subflows = n_subflows;
  return c;
}

std::size_t Scenario::wifi_index() const {
  for (std::size_t i = 0; i < ap_kinds.size(); ++i)
    if (ap_kinds[i] == ApKind::WiFi) return i;
  throw Error(ErrorKind::Integrity, "scenario has no WiFi AP");
}

void Scenario::validate() const {
  const std::size_t na = n_ap(), nu = n_ue();
  if (ap_pos.size() != na) throw Error(ErrorKind::Integrity, "AP position count mismatch");
  if (std::count(ap_kinds.begin(), ap_kinds.end(), ApKind::WiFi) != 1)
    throw Error(ErrorKind::Integrity, "scenario must have exactly one WiFi AP");
  if (req_bps.size() != nu || serving.size() != nu) throw Error(ErrorKind::Integrity, "per-UE vector length mismatch");
  if (sinr.rows != na || sinr.cols != nu || capacity_bps.rows != na || capacity_bps.cols != nu)
    throw Error(ErrorKind::Integrity, "link matrix shape mismatch");
  const std::size_t wifi = wifi_index();
  const std::size_t nf = nu ? serving.front().size() : 0;
  for (std::size_t j = 0; j < nu; ++j) {
    if (!(req_bps[j] > 0.0)) throw Error(ErrorKind::Integrity, "rate requirement must be > 0");
    const auto& s = serving[j];
    if (s.size() != nf || nf < 2) throw Error(ErrorKind::Integrity, "serving sets must all have size N_f >= 2");
    if (s.front() != wifi) throw Error(ErrorKind::Integrity, "serving set must start with the WiFi AP");
    std::vector<std::size_t> sorted(s.begin(), s.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw Error(ErrorKind::Integrity, "serving set has duplicate APs");
    for (std::size_t k = 1; k < s.size(); ++k)
      if (s[k] >= na || ap_kinds[s[k]] != ApKind::LiFi)
        throw Error(ErrorKind::Integrity, "serving set LiFi member is not a LiFi AP");
  }
}

PlacedAps place_aps(const RoomConfig& cfg) {
  cfg.validate();
  PlacedAps out;
  out.kinds.push_back(ApKind::WiFi);
  out.pos.push_back({cfg.length_m / 2.0, cfg.width_m / 2.0, cfg.wifi_height_m});
  const double x0 = cfg.length_m / 2.0 - 0.5 * static_cast<double>(cfg.grid_cols - 1) * cfg.ap_separation_m;
  const double y0 = cfg.width_m / 2.0 - 0.5 * static_cast<double>(cfg.grid_rows - 1) * cfg.ap_separation_m;
  for (std::size_t r = 0; r < cfg.grid_rows; ++r) {
    for (std::size_t c = 0; c < cfg.grid_cols; ++c) {
      out.kinds.push_back(ApKind::LiFi);
      out.pos.push_back({x0 + static_cast<double>(c) * cfg.ap_separation_m,
                         y0 + static_cast<double>(r) * cfg.ap_separation_m, cfg.height_m});
    }
  }
  return out;
}

std::vector<Vec3> sample_ues(const RoomConfig& cfg, std::uint64_t seed) {
  Rng rng = make_rng(seed, kUeStream);
  std::uniform_real_distribution<double> ux(0.0, cfg.length_m), uy(0.0, cfg.width_m);
  std::vector<Vec3> out(cfg.n_ue);
  for (auto& p : out) {
    p.x = ux(rng);
    p.y = uy(rng);
    p.z = cfg.ue_height_m;
  }
  return out;
}

std::vector<double> sample_requirements(const RoomConfig& cfg, std::uint64_t seed) {
  require(cfg.mean_rate_bps > 0.0, "mean_rate_bps must be > 0");
  Rng rng = make_rng(seed, kRateStream);
  std::gamma_distribution<double> gamma(1.0, cfg.mean_rate_bps);
  std::vector<double> out(cfg.n_ue);
  for (auto& r : out) {
    do {
      r = gamma(rng);
    } while (!(r > 0.0));
  }
  return out;
}

std::vector<std::vector<std::size_t>> select_subflows(const Scenario& sc) {
  const std::size_t na = sc.n_ap(), nu = sc.n_ue();
  const std::size_t nf = sc.room.n_subflows;
  if (sc.rx_snr.rows != na || sc.rx_snr.cols != nu)
    throw Error(ErrorKind::ContractViolation, "select_subflows needs the received-SNR matrix");
  std::vector<std::size_t> lifi;
  for (std::size_t i = 0; i < na; ++i)
    if (sc.ap_kinds[i] == ApKind::LiFi) lifi.push_back(i);
  if (nf < 1 || nf - 1 > lifi.size()) throw Error(ErrorKind::InvalidConfig, "not enough LiFi APs for N_f - 1 subflows");
  const std::size_t wifi = sc.wifi_index();

  std::vector<std::vector<std::size_t>> out(nu);
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < nu; ++j) {
    order = lifi;
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nf - 1), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double ga = sc.rx_snr(a, j), gb = sc.rx_snr(b, j);
                        return ga != gb ? ga > gb : a < b;
                      });
    out[j].push_back(wifi);
    out[j].insert(out[j].end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nf - 1));
  }
  return out;
}

Scenario build_scenario(const RoomConfig& room, const LiFiPhyConfig& lifi, const WiFiPhyConfig& wifi,
                        std::uint64_t seed) {
  room.validate();
  lifi.validate();
  wifi.validate();

  Scenario sc;
  sc.room = room;
  auto aps = place_aps(room);
  sc.ap_kinds = std::move(aps.kinds);
  sc.ap_pos = std::move(aps.pos);
  sc.ue_pos = sample_ues(room, seed);
  sc.req_bps = sample_requirements(room, seed);

  const std::size_t na = sc.n_ap(), nu = sc.n_ue();
  Mat gain(na, nu);
  sc.rx_snr = Mat(na, nu);
  const double lifi_scale = lifi.responsivity_A_per_W * lifi.mod_power_W;
  const double lifi_noise = lifi.noise_psd_A2_per_Hz * lifi.bandwidth_Hz;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nu; ++j) {
      LinkGeometry g{sc.ap_pos[i], sc.ue_pos[j]};
      if (sc.ap_kinds[i] == ApKind::LiFi) {
        gain(i, j) = lifi_channel_gain(g, lifi);
        const double a = lifi_scale * gain(i, j);
        sc.rx_snr(i, j) = a * a / lifi_noise;
      } else {
        sc.rx_snr(i, j) = wifi_snr(g, wifi);
      }
    }
  }
  sc.serving = select_subflows(sc);

  std::vector<std::size_t> lifi_idx;
  for (std::size_t i = 0; i < na; ++i)
    if (sc.ap_kinds[i] == ApKind::LiFi) lifi_idx.push_back(i);

  sc.sinr = Mat(na, nu);
  sc.capacity_bps = Mat(na, nu);
  const std::size_t nl = lifi_idx.size();
  std::vector<double> gains(nl);
  std::unique_ptr<bool[]> serving_lifi(new bool[nl]);
  std::unique_ptr<bool[]> mask(new bool[nl]);
  for (std::size_t j = 0; j < nu; ++j) {
    for (std::size_t u = 0; u < nl; ++u) {
      gains[u] = gain(lifi_idx[u], j);
      serving_lifi[u] = std::find(sc.serving[j].begin() + 1, sc.serving[j].end(), lifi_idx[u]) != sc.serving[j].end();
    }
    for (std::size_t u = 0; u < nl; ++u) {
      std::span<const bool> excluded;
      if (lifi.wdm_exclude_serving) {
        for (std::size_t v = 0; v < nl; ++v) mask[v] = serving_lifi[v] && v != u;
        excluded = std::span<const bool>(mask.get(), nl);
      }
      sc.sinr(lifi_idx[u], j) = lifi_sinr(gains, u, lifi, excluded);
    }
    const std::size_t w = sc.wifi_index();
    sc.sinr(w, j) = sc.rx_snr(w, j);
    for (std::size_t i = 0; i < na; ++i) sc.capacity_bps(i, j) = link_capacity(sc.sinr(i, j), sc.ap_kinds[i], lifi, wifi);
  }
  sc.validate();
  return sc;
}

// ---- graph ------------------------------------------------------------------

double NormMeta::sinr_feature(double sinr_linear) const {
  const double v = (to_db(sinr_linear, kSinrDbFloor) - sinr_db_min) / (sinr_db_max - sinr_db_min);
  return std::clamp(v, kFeatureClampLo, kFeatureClampHi);
}

double NormMeta::rate_feature(double rate_bps) const {
  const double v = (rate_bps - rate_min) / (rate_max - rate_min);
  return std::clamp(v, kFeatureClampLo, kFeatureClampHi);
}

std::uint64_t NormMeta::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : {sinr_db_min, sinr_db_max, rate_min, rate_max}) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

bool operator==(const NormMeta& a, const NormMeta& b) { return a.hash() == b.hash(); }

SampleGraph build_graph(const Scenario& sc, const AllocationMatrix* labels, const NormMeta& norm) {
  const std::size_t na = sc.n_ap(), nu = sc.n_ue(), nf = sc.n_subflows();
  if (sc.ap_kinds.empty() || sc.ap_kinds.front() != ApKind::WiFi)
    throw Error(ErrorKind::Integrity, "graph node order expects the WiFi AP first");
  SampleGraph g;
  g.n_ue = nu;
  g.n_ap = na;
  g.n_subflows = nf;
  g.serving = sc.serving;
  g.norm = norm;
  g.node_features = Mat(nu + na, nf + 1);
  for (std::size_t j = 0; j < nu; ++j) {
    if (sc.serving[j].size() != nf) throw Error(ErrorKind::Integrity, "ragged serving sets");
    for (std::size_t k = 0; k < nf; ++k) g.node_features(j, k) = norm.sinr_feature(sc.sinr(sc.serving[j][k], j));
    g.node_features(j, nf) = norm.rate_feature(sc.req_bps[j]);
  }

  g.edges.reserve(2 * nu * nf + nu + na);
  for (std::size_t j = 0; j < nu; ++j) {
    for (std::size_t ap : sc.serving[j]) {
      g.edges.emplace_back(j, g.ap_node(ap));
      g.edges.emplace_back(g.ap_node(ap), j);
    }
  }
  for (std::size_t v = 0; v < nu + na; ++v) g.edges.emplace_back(v, v);

  if (labels) {
    if (labels->rho.rows != na || labels->rho.cols != nu)
      throw Error(ErrorKind::Integrity, "label allocation shape does not match the scenario");
    g.ue_labels = Mat(nu, nf);
    std::vector<char> seen(na * nu, 0);
    for (std::size_t j = 0; j < nu; ++j)
      for (std::size_t k = 0; k < nf; ++k) {
        const std::size_t i = sc.serving[j][k];
        g.ue_labels(j, k) = labels->rho(i, j);
        seen[i * nu + j] = 1;
      }
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < nu; ++j)
        if (!seen[i * nu + j] && labels->rho(i, j) != 0.0)
          throw Error(ErrorKind::Integrity, "label allocation has mass outside the serving sets");
  }
  return g;
}

}  // namespace hetlb
