#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hetlb/channel.hpp"
#include "hetlb/errors.hpp"

using namespace hetlb;

namespace {

LinkGeometry nadir(double d) { return {{0, 0, d}, {0, 0, 0}, {0, 0, -1}, {0, 0, 1}}; }

}  // namespace

TEST_CASE("lambertian order") {
  CHECK(lambertian_order(60.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lambertian_order(45.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(lambertian_order(30.0) == doctest::Approx(4.818841679306418).epsilon(1e-13));
  double prev = lambertian_order(1.0);
  for (double a = 2.0; a < 90.0; a += 1.0) {
    const double m = lambertian_order(a);
    CHECK(m < prev);
    CHECK(m > 0.0);
    prev = m;
  }
  CHECK_THROWS_AS(lambertian_order(0.0), Error);
  CHECK_THROWS_AS(lambertian_order(90.0), Error);
  try {
    lambertian_order(95.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidConfig);
  }
}

TEST_CASE("lifi gain at nadir and inverse square") {
  LiFiPhyConfig cfg;
  const double h = lifi_channel_gain(nadir(2.5), cfg);
  CHECK(h == doctest::Approx(5.092958178940651e-6).epsilon(1e-13));
  CHECK(lifi_channel_gain(nadir(5.0), cfg) == doctest::Approx(h / 4.0).epsilon(1e-14));
  cfg.nlos_factor = 0.5;
  CHECK(lifi_channel_gain(nadir(2.5), cfg) == doctest::Approx(1.5 * h).epsilon(1e-14));
}

TEST_CASE("lifi gain outside fov is zero") {
  LiFiPhyConfig cfg;
  cfg.fov_deg = 30.0;
  LinkGeometry g{{0, 0, 1}, {2, 0, 0}, {0, 0, -1}, {0, 0, 1}};  // incidence ~63 deg
  CHECK(lifi_channel_gain(g, cfg) == 0.0);
  cfg.fov_deg = 90.0;
  CHECK(lifi_channel_gain(g, cfg) > 0.0);
}

TEST_CASE("lifi gain scales as inverse square at fixed angles") {
  LiFiPhyConfig cfg;
  LinkGeometry a{{0, 0, 2}, {1, 1, 0}};
  LinkGeometry b{{0, 0, 4}, {2, 2, 0}};
  CHECK(lifi_channel_gain(b, cfg) == doctest::Approx(lifi_channel_gain(a, cfg) / 4.0).epsilon(1e-13));
}

TEST_CASE("lifi gain rejects zero distance") {
  LiFiPhyConfig cfg;
  try {
    lifi_channel_gain(nadir(0.0), cfg);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateGeometry);
  }
}

TEST_CASE("lifi sinr") {
  LiFiPhyConfig cfg;
  const double nb = cfg.noise_psd_A2_per_Hz * cfg.bandwidth_Hz;
  // Received electrical power equal to noise -> 1.
  const double h1 = std::sqrt(nb) / (cfg.responsivity_A_per_W * cfg.mod_power_W);
  std::vector<double> g{h1};
  CHECK(lifi_sinr(g, 0, cfg) == doctest::Approx(1.0).epsilon(1e-12));

  cfg.noise_psd_A2_per_Hz = 1e-14 / cfg.bandwidth_Hz;
  g = {5.093e-6};
  CHECK(lifi_sinr(g, 0, cfg) == doctest::Approx(6557.54985369).epsilon(1e-10));

  // Symmetric interference limit.
  cfg.noise_psd_A2_per_Hz = 1e-40;
  g = {1e-5, 1e-5};
  CHECK(lifi_sinr(g, 0, cfg) == doctest::Approx(1.0).epsilon(1e-12));

  // Adding an interferer never increases SINR; serving gain is monotone.
  cfg = LiFiPhyConfig{};
  std::vector<double> base{3e-6, 1e-6, 0.0};
  const double s0 = lifi_sinr(base, 0, cfg);
  base[2] = 2e-7;
  CHECK(lifi_sinr(base, 0, cfg) < s0);
  std::vector<double> lone{3e-6};
  std::vector<double> stronger{4e-6};
  CHECK(lifi_sinr(stronger, 0, cfg) > lifi_sinr(lone, 0, cfg));

  std::vector<double> zero{0.0, 1e-6};
  CHECK(lifi_sinr(zero, 0, cfg) == 0.0);

  bool excl[] = {false, true, false};
  CHECK(lifi_sinr(base, 0, cfg, excl) > lifi_sinr(base, 0, cfg));
}

TEST_CASE("wifi snr golden values") {
  WiFiPhyConfig cfg;
  CHECK(wifi_snr(nadir(3.0), cfg) == doctest::Approx(1378880.6885817497).epsilon(1e-12));
  CHECK(wifi_snr(nadir(20.0), cfg) == doctest::Approx(10968.928710112477).epsilon(1e-12));
  CHECK(wifi_snr(nadir(6.0), cfg) == doctest::Approx(wifi_snr(nadir(3.0), cfg) / 4.0).epsilon(1e-13));
  const double g = wifi_power_gain(5.0, cfg);
  cfg.tx_power_W = cfg.noise_psd_W_per_Hz * cfg.bandwidth_Hz / g;
  CHECK(wifi_snr(nadir(5.0), cfg) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(wifi_snr(nadir(0.0), cfg), Error);
}

TEST_CASE("link capacity") {
  const LiFiPhyConfig l;
  const WiFiPhyConfig w;
  const double two_pi_over_e = 2.0 * std::numbers::pi / std::numbers::e;
  CHECK(link_capacity(two_pi_over_e, ApKind::LiFi, l, w) == doctest::Approx(10e6).epsilon(1e-14));
  CHECK(link_capacity(3.0, ApKind::WiFi, l, w) == doctest::Approx(40e6).epsilon(1e-14));
  CHECK(link_capacity(0.0, ApKind::WiFi, l, w) == 0.0);
  CHECK(link_capacity(0.0, ApKind::LiFi, l, w) == 0.0);
  double prev = 0.0;
  for (double g = 1e-3; g < 1e7; g *= 3.0) {
    const double c = link_capacity(g, ApKind::LiFi, l, w);
    CHECK(c > prev);
    CHECK(std::isfinite(c));
    prev = c;
  }
  try {
    link_capacity(-1.0, ApKind::WiFi, l, w);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidArgument);
  }
}

TEST_CASE("dB conversion floors zero") {
  CHECK(to_db(100.0) == doctest::Approx(20.0));
  CHECK(to_db(0.0) == -30.0);
  CHECK(to_db(1e-9) == -30.0);
}

TEST_CASE("config validation") {
  LiFiPhyConfig l;
  l.pd_area_m2 = 0.0;
  CHECK_THROWS_AS(l.validate(), Error);
  l = {};
  l.nlos_factor = -0.1;
  CHECK_THROWS_AS(l.validate(), Error);
  WiFiPhyConfig w;
  w.breakpoint_m = 0.0;
  CHECK_THROWS_AS(w.validate(), Error);
  CHECK(ap_kind_from_string("lifi") == ApKind::LiFi);
  CHECK_THROWS_AS(ap_kind_from_string("5g"), Error);
}
