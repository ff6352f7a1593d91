#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "advrl/metrics.hpp"

using namespace advrl;

TEST_CASE("acr") {
  CHECK(acr(100, 100) == 1.0);
  CHECK(acr(0, 50) == 0.0);
  CHECK(acr(163, 500) == doctest::Approx(0.326));
  CHECK_THROWS_AS(acr(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(acr(5, 4), std::invalid_argument);
  CHECK_THROWS_AS(acr(-1, 4), std::invalid_argument);
}

TEST_CASE("psnr") {
  // mse 0.01 over 4 pixels
  CHECK(psnr({0, 0, 0, 0}, {0.2, 0, 0, 0}) == doctest::Approx(20.0));
  CHECK(psnr({0, 0}, {1, 1}) == doctest::Approx(0.0));
  CHECK(std::isinf(psnr({0.3, 0.7}, {0.3, 0.7})));

  // strictly decreasing as mse grows
  double prev = std::numeric_limits<double>::infinity();
  for (double d = 0.05; d <= 0.5; d += 0.05) {
    const double p = psnr({0.5}, {0.5 + d});
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("delta_r") {
  CHECK(delta_r(21.0, -21.0, -21.0) == 1.0);  // Pong full damage
  CHECK(delta_r(2155.0, 2155.0, 0.0) == 0.0);
  CHECK(delta_r(2155.0, 222.0, 0.0) == doctest::Approx(0.8970).epsilon(1e-4));

  // clamping: an attack that raises reward counts as no damage
  CHECK(delta_r(10.0, 12.0, 0.0) == 0.0);
  CHECK(delta_r(10.0, -5.0, 0.0) == 1.0);

  CHECK_THROWS_AS(delta_r(5.0, 3.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(delta_r(5.0, 3.0, 7.0), std::invalid_argument);
}

TEST_CASE("ar reproduces published anchor cells") {
  const ARWeights w;
  CHECK(ar(1.0, 0.0877, 15.86, w) == doctest::Approx(0.7016).epsilon(1e-3));
  CHECK(std::abs(ar(1.0, 0.0877, 15.86, w) - 0.70) <= 0.01);

  const double dr_cw_pong = delta_r(21.0, -17.5, -21.0);
  CHECK(dr_cw_pong == doctest::Approx(0.9167).epsilon(1e-4));
  CHECK(std::abs(ar(dr_cw_pong, 0.0, 10.65, w) - 0.56) <= 0.01);

  CHECK(ar(0.0, 0.0, 0.0, w) == 0.0);
}

TEST_CASE("ar validates weights and finiteness") {
  ARWeights bad;
  bad.gamma = 0.2;
  CHECK_THROWS_AS(ar(0.5, 0.5, 10.0, bad), std::invalid_argument);
  CHECK_THROWS_AS(
      ar(0.5, 0.5, std::numeric_limits<double>::infinity(), ARWeights{}),
      std::invalid_argument);
}

TEST_CASE("ar is monotone in each argument") {
  Rng rng(31);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> upsnr(0.0, 100.0);
  const ARWeights w;
  for (int trial = 0; trial < 1000; ++trial) {
    const double dr = u01(rng), a = u01(rng), p = upsnr(rng);
    const double base = ar(dr, a, p, w);
    CHECK(ar(std::min(1.0, dr + 0.1), a, p, w) >= base);
    CHECK(ar(dr, std::min(1.0, a + 0.1), p, w) >= base);
    CHECK(ar(dr, a, std::min(100.0, p + 5.0), w) >= base);
  }
}

TEST_CASE("classify_weak") {
  // published U-PGNA / MsPacman row
  CHECK(classify_weak(0.9857, (2155.0 - 2144.0) / 2155.0));
  CHECK_FALSE(classify_weak(0.0, 1.0));
  CHECK_FALSE(classify_weak(0.6, 0.6));  // second condition fails
  CHECK_FALSE(classify_weak(0.5, 0.2));  // boundary: needs strictly > 0.5
}

TEST_CASE("report CSV round trip") {
  MetricsReport r;
  r.method = "pgd";
  r.env = "minipong";
  r.mean_reward = -3.2;
  r.acr = 0.0625;
  r.mean_psnr = 19.75;
  r.delta_r = 0.91;
  r.ar = 0.68;
  r.weak_attack = false;
  r.gen_time_mean = 0.0042;

  std::stringstream ss;
  write_report_header(ss);
  write_report_row(ss, r);
  std::string header, line;
  std::getline(ss, header);
  CHECK(header ==
        "method,env,mean_reward,acr,psnr,delta_r,ar,weak,gen_time_mean_seconds");
  std::getline(ss, line);
  const MetricsReport back = parse_report_row(line);
  CHECK(back.method == r.method);
  CHECK(back.env == r.env);
  CHECK(back.mean_reward == r.mean_reward);
  CHECK(back.acr == r.acr);
  CHECK(back.mean_psnr == r.mean_psnr);
  CHECK(back.delta_r == r.delta_r);
  CHECK(back.ar == r.ar);
  CHECK(back.weak_attack == r.weak_attack);
  CHECK(back.gen_time_mean == r.gen_time_mean);
}

TEST_CASE("report CSV carries the infinite-psnr sentinel") {
  MetricsReport r;
  r.method = "none";
  r.env = "collector";
  r.acr = 1.0;
  r.mean_psnr = std::numeric_limits<double>::infinity();
  std::stringstream ss;
  write_report_row(ss, r);
  std::string line;
  std::getline(ss, line);
  const MetricsReport back = parse_report_row(line);
  CHECK(std::isinf(back.mean_psnr));
}
