#pragma once

#include <span>
#include <string>
#include <vector>

namespace hetlb {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(const Vec3& v);

enum class ApKind { WiFi, LiFi };

const char* to_string(ApKind kind);
ApKind ap_kind_from_string(const std::string& s);

// Optical front end. nlos_factor scales the LoS gain to stand in for the
// diffuse component: H = (1 + nlos_factor) * H_LoS.
struct LiFiPhyConfig {
  double semi_angle_deg = 60.0;
  double pd_area_m2 = 1e-4;
  double filter_gain = 1.0;
  double concentrator_gain = 1.0;
  double fov_deg = 90.0;
  double responsivity_A_per_W = 0.53;
  double mod_power_W = 3.0;
  double noise_psd_A2_per_Hz = 1e-21;
  double bandwidth_Hz = 20e6;
  double nlos_factor = 0.0;
  // When set, a UE's other serving LiFi APs (separate WDM wavelengths) are
  // dropped from the interference sum of each of its LiFi links.
  bool wdm_exclude_serving = false;

  void validate() const;
};

// Two-slope indoor path loss: free space up to breakpoint_m, then
// exponent pathloss_exp_after_bp.
struct WiFiPhyConfig {
  double tx_power_W = 0.1;                  // 20 dBm
  double noise_psd_W_per_Hz = 3.981071705534969e-20;  // -174 dBm/Hz + 10 dB NF
  double bandwidth_Hz = 20e6;
  double carrier_freq_Hz = 2.4e9;
  double breakpoint_m = 10.0;
  double pathloss_exp_after_bp = 3.5;

  void validate() const;
};

struct LinkGeometry {
  Vec3 ap_pos;
  Vec3 ue_pos;
  Vec3 ap_normal{0.0, 0.0, -1.0};
  Vec3 ue_normal{0.0, 0.0, 1.0};
};

double lambertian_order(double semi_angle_deg);

// Total optical gain of one AP->UE link, zero outside the receiver FOV.
double lifi_channel_gain(const LinkGeometry& geom, const LiFiPhyConfig& cfg);

// SINR of the link from LiFi AP `serving_ap` given the gains of every LiFi AP
// to this UE. `excluded` (optional, same length as gains) drops APs from the
// interference sum.
double lifi_sinr(std::span<const double> gains, std::size_t serving_ap, const LiFiPhyConfig& cfg,
                 std::span<const bool> excluded = {});

// |H_WiFi|^2 at distance d.
double wifi_power_gain(double distance_m, const WiFiPhyConfig& cfg);
double wifi_snr(const LinkGeometry& geom, const WiFiPhyConfig& cfg);

double link_capacity(double sinr, ApKind kind, const LiFiPhyConfig& lifi, const WiFiPhyConfig& wifi);

// SINR/SNR in dB with a floor for zero (and tiny) ratios.
double to_db(double ratio, double floor_db = -30.0);

}  // namespace hetlb
