#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "hetlb/channel.hpp"
#include "hetlb/mat.hpp"

namespace hetlb {

struct RoomConfig {
  double length_m = 10.0;
  double width_m = 10.0;
  double height_m = 3.0;
  std::size_t grid_rows = 4;
  std::size_t grid_cols = 4;
  double ap_separation_m = 2.5;
  double wifi_height_m = 0.5;
  double ue_height_m = 0.5;
  std::size_t n_ue = 20;
  std::size_t n_subflows = 3;
  double mean_rate_bps = 100e6;

  void validate() const;
  std::size_t n_lifi() const { return grid_rows * grid_cols; }
  std::size_t n_ap() const { return n_lifi() + 1; }

  // Square rooms of side 7.5 / 10 / 12.5 m with 3x3 / 4x4 / 5x5 LiFi grids.
  static RoomConfig scale(int which, std::size_t n_ue = 20, std::size_t n_subflows = 3);
};

struct Scenario {
  RoomConfig room;
  std::vector<ApKind> ap_kinds;
  std::vector<Vec3> ap_pos;
  std::vector<Vec3> ue_pos;
  std::vector<double> req_bps;
  Mat sinr;          // N_a x N_u, linear
  Mat capacity_bps;  // N_a x N_u
  // Ordered serving sets: [WiFi AP, LiFi APs by descending received SNR].
  std::vector<std::vector<std::size_t>> serving;
  // Interference-free received SNR per (AP, UE) used for subflow selection.
  // Not serialised; empty on scenarios loaded from disk.
  Mat rx_snr;

  std::size_t n_ap() const { return ap_kinds.size(); }
  std::size_t n_ue() const { return ue_pos.size(); }
  std::size_t n_subflows() const { return serving.empty() ? room.n_subflows : serving.front().size(); }
  std::size_t wifi_index() const;

  // Checks the structural invariants (one WiFi AP, serving sets shape, R > 0).
  void validate() const;
};

struct PlacedAps {
  std::vector<ApKind> kinds;
  std::vector<Vec3> pos;
};

PlacedAps place_aps(const RoomConfig& cfg);
std::vector<Vec3> sample_ues(const RoomConfig& cfg, std::uint64_t seed);
std::vector<double> sample_requirements(const RoomConfig& cfg, std::uint64_t seed);

// SSS: every UE gets the WiFi AP plus the N_f - 1 LiFi APs with the
// strongest interference-free SNR. Ties go to the lower AP index.
std::vector<std::vector<std::size_t>> select_subflows(const Scenario& sc);

Scenario build_scenario(const RoomConfig& room, const LiFiPhyConfig& lifi, const WiFiPhyConfig& wifi,
                        std::uint64_t seed);

// ---- learning graph ---------------------------------------------------------

inline constexpr double kSinrDbFloor = -30.0;
inline constexpr double kFeatureClampLo = -0.5;
inline constexpr double kFeatureClampHi = 1.5;

struct NormMeta {
  double sinr_db_min = 0.0;
  double sinr_db_max = 1.0;
  double rate_min = 0.0;
  double rate_max = 1.0;

  double sinr_feature(double sinr_linear) const;
  double rate_feature(double rate_bps) const;
  // FNV-1a over the exact bit patterns of the four ranges.
  std::uint64_t hash() const;
};

bool operator==(const NormMeta& a, const NormMeta& b);

struct AllocationMatrix;

struct SampleGraph {
  std::size_t n_ue = 0;
  std::size_t n_ap = 0;
  std::size_t n_subflows = 0;
  Mat node_features;  // N x (N_f + 1); UE rows first, then WiFi, then LiFi APs
  // Message-passing edges (src, dst): both directions of every UE-AP pair,
  // then one self-loop per node.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  Mat ue_labels;  // N_u x N_f in serving order; empty when unlabelled
  std::vector<std::vector<std::size_t>> serving;
  NormMeta norm;

  std::size_t n_nodes() const { return n_ue + n_ap; }
  std::size_t n_pairs() const { return n_ue * n_subflows; }
  bool labelled() const { return !ue_labels.empty(); }
  // Node index of AP i (AP order as in the scenario).
  std::size_t ap_node(std::size_t ap) const { return n_ue + ap; }
};

// Scenario AP order is [WiFi, LiFi...] so node order is [UEs, WiFi, LiFi...].
SampleGraph build_graph(const Scenario& sc, const AllocationMatrix* labels, const NormMeta& norm);

}  // namespace hetlb
