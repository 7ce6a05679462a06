#include "hetlb/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hetlb/errors.hpp"

namespace hetlb {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::InvalidConfig, what);
}

}  // namespace

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

const char* to_string(ApKind kind) { return kind == ApKind::WiFi ? "wifi" : "lifi"; }

ApKind ap_kind_from_string(const std::string& s) {
  if (s == "wifi") return ApKind::WiFi;
  if (s == "lifi") return ApKind::LiFi;
  throw Error(ErrorKind::Schema, "unknown AP kind '" + s + "'");
}

void LiFiPhyConfig::validate() const {
  require(semi_angle_deg > 0.0 && semi_angle_deg < 90.0, "lifi semi_angle_deg must be in (0, 90)");
  require(pd_area_m2 > 0.0, "lifi pd_area_m2 must be > 0");
  require(filter_gain > 0.0 && concentrator_gain > 0.0, "lifi optical gains must be > 0");
  require(fov_deg > 0.0 && fov_deg <= 90.0, "lifi fov_deg must be in (0, 90]");
  require(responsivity_A_per_W > 0.0, "lifi responsivity must be > 0");
  require(mod_power_W > 0.0, "lifi mod_power_W must be > 0");
  require(noise_psd_A2_per_Hz > 0.0, "lifi noise psd must be > 0");
  require(bandwidth_Hz > 0.0, "lifi bandwidth must be > 0");
  require(nlos_factor >= 0.0, "lifi nlos_factor must be >= 0");
}

void WiFiPhyConfig::validate() const {
  require(tx_power_W > 0.0, "wifi tx_power_W must be > 0");
  require(noise_psd_W_per_Hz > 0.0, "wifi noise psd must be > 0");
  require(bandwidth_Hz > 0.0, "wifi bandwidth must be > 0");
  require(carrier_freq_Hz > 0.0, "wifi carrier frequency must be > 0");
  require(breakpoint_m > 0.0, "wifi breakpoint_m must be > 0");
  require(pathloss_exp_after_bp > 0.0, "wifi path-loss exponent must be > 0");
}

double lambertian_order(double semi_angle_deg) {
  if (!(semi_angle_deg > 0.0 && semi_angle_deg < 90.0))
    throw Error(ErrorKind::InvalidConfig, "semi-angle must be in (0, 90) degrees");
  return -1.0 / std::log2(std::cos(deg2rad(semi_angle_deg)));
}

double lifi_channel_gain(const LinkGeometry& geom, const LiFiPhyConfig& cfg) {
  const Vec3 d = geom.ue_pos - geom.ap_pos;
  const double dist = norm(d);
  if (!(dist > 0.0)) throw Error(ErrorKind::DegenerateGeometry, "AP and UE coincide");

  const double cos_irr = dot(d, geom.ap_normal) / dist;    // emitter side
  const double cos_inc = -dot(d, geom.ue_normal) / dist;   // receiver side
  if (cos_irr <= 0.0 || cos_inc <= 0.0) return 0.0;
  const double incidence = std::acos(std::min(1.0, cos_inc));
  if (incidence > deg2rad(cfg.fov_deg) + 1e-12) return 0.0;

  const double m = lambertian_order(cfg.semi_angle_deg);
  const double los = (m + 1.0) * cfg.pd_area_m2 / (2.0 * std::numbers::pi * dist * dist) *
                     std::pow(cos_irr, m) * cfg.filter_gain * cfg.concentrator_gain * cos_inc;
  return (1.0 + cfg.nlos_factor) * los;
}

double lifi_sinr(std::span<const double> gains, std::size_t serving_ap, const LiFiPhyConfig& cfg,
                 std::span<const bool> excluded) {
  if (serving_ap >= gains.size()) throw Error(ErrorKind::InvalidArgument, "serving AP index out of range");
  if (!excluded.empty() && excluded.size() != gains.size())
    throw Error(ErrorKind::InvalidArgument, "exclusion mask length mismatch");
  const double scale = cfg.responsivity_A_per_W * cfg.mod_power_W;
  auto power = [&](double h) {
    const double a = scale * h;
    return a * a;
  };
  double interference = 0.0;
  for (std::size_t u = 0; u < gains.size(); ++u) {
    if (u == serving_ap) continue;
    if (!excluded.empty() && excluded[u]) continue;
    interference += power(gains[u]);
  }
  return power(gains[serving_ap]) / (cfg.noise_psd_A2_per_Hz * cfg.bandwidth_Hz + interference);
}

double wifi_power_gain(double distance_m, const WiFiPhyConfig& cfg) {
  if (!(distance_m > 0.0)) throw Error(ErrorKind::DegenerateGeometry, "AP and UE coincide");
  const double lambda = kSpeedOfLight / cfg.carrier_freq_Hz;
  auto free_space = [&](double d) {
    const double a = lambda / (4.0 * std::numbers::pi * d);
    return a * a;
  };
  if (distance_m <= cfg.breakpoint_m) return free_space(distance_m);
  return free_space(cfg.breakpoint_m) * std::pow(cfg.breakpoint_m / distance_m, cfg.pathloss_exp_after_bp);
}

double wifi_snr(const LinkGeometry& geom, const WiFiPhyConfig& cfg) {
  const double gain = wifi_power_gain(norm(geom.ue_pos - geom.ap_pos), cfg);
  return gain * cfg.tx_power_W / (cfg.noise_psd_W_per_Hz * cfg.bandwidth_Hz);
}

double link_capacity(double sinr, ApKind kind, const LiFiPhyConfig& lifi, const WiFiPhyConfig& wifi) {
  if (!(sinr >= 0.0)) throw Error(ErrorKind::InvalidArgument, "SINR must be a non-negative number");
  if (kind == ApKind::LiFi)
    return 0.5 * lifi.bandwidth_Hz * std::log2(1.0 + std::numbers::e / (2.0 * std::numbers::pi) * sinr);
  return wifi.bandwidth_Hz * std::log2(1.0 + sinr);
}

double to_db(double ratio, double floor_db) {
  if (!(ratio > 0.0)) return floor_db;
  return std::max(floor_db, 10.0 * std::log10(ratio));
}

}  // namespace hetlb
