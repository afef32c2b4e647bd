#include <doctest.h>

#include <cmath>
#include <vector>

#include <svct/svct.hpp>

#include "oracles.hpp"

using namespace svct;

namespace {

DegradeConfig desk_config(int size = 32, double pixel = 0.25, int detectors = 96) {
  FanSpec fan;
  fan.num_detectors = detectors;
  return DegradeConfig::for_grid(size, size, pixel, fan);
}

}  // namespace

TEST_CASE("severity map defaults and level lookups") {
  const SeverityMap map = SeverityMap::defaults();
  CHECK(map.t_max() == 8);
  CHECK(map.views_at_level(8) == 18);
  CHECK(map.views_at_level(1) == 288);
  CHECK(map.views_at_level(0) == kIdentityViews);
  CHECK_THROWS_AS(map.views_at_level(9), ConfigError);
  CHECK_THROWS_AS(map.views_at_level(-1), ConfigError);

  CHECK(map.level_for_views(18) == 8);
  CHECK(map.level_for_views(288) == 1);
  CHECK(map.level_for_views(17) == 0);

  SeverityMap bad;
  bad.views_per_level = {288, 288, 18};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("angle sets are uniform and nested for divisible view counts") {
  const auto four = angle_set(4);
  REQUIRE(four.size() == 4);
  CHECK(four[0] == 0.0);
  CHECK(four[1] == doctest::Approx(M_PI / 2).epsilon(1e-15));
  CHECK(four[2] == doctest::Approx(M_PI).epsilon(1e-15));
  CHECK(four[3] == doctest::Approx(3 * M_PI / 2).epsilon(1e-15));

  const auto eighteen = angle_set(18);
  for (int i = 0; i < 18; ++i)
    CHECK(eighteen[i] == doctest::Approx(M_PI * i / 9.0).epsilon(1e-14));

  // Every angle of the sparse set appears in the dense one when the counts
  // divide evenly.
  const auto pairs = std::vector<std::pair<int, int>>{
      {18, 36}, {18, 54}, {36, 72}, {72, 144}};
  for (auto [sparse_n, dense_n] : pairs) {
    const auto sparse = angle_set(sparse_n);
    const auto dense = angle_set(dense_n);
    const int stride = dense_n / sparse_n;
    for (int i = 0; i < sparse_n; ++i)
      CHECK(std::abs(sparse[i] - dense[i * stride]) < 1e-12);
  }

  CHECK_THROWS_AS(angle_set(0), ConfigError);
}

TEST_CASE("level zero degradation is the identity, bit for bit") {
  const DegradeConfig cfg = desk_config();
  RandomStream rng(21);
  for (int i = 0; i < 5; ++i) {
    const Image x = oracle::random_image(rng, 32, 32, 0.25);
    const Image y = degrade(x, 0, cfg);
    CHECK(oracle::images_equal(x, y));
  }
}

TEST_CASE("degrading a zero image yields a zero image at every level") {
  const DegradeConfig cfg = desk_config();
  const Image zero(32, 32, 0.25);
  for (int t = 0; t <= cfg.severity.t_max(); ++t) {
    const Image y = degrade(zero, t, cfg);
    CHECK(y.data.abs().maxCoeff() == 0.0f);
  }
}

TEST_CASE("degradation is linear in the image") {
  const DegradeConfig cfg = desk_config();
  RandomStream rng(22);
  const Image a = oracle::random_image(rng, 32, 32, 0.25);
  const Image b = oracle::random_image(rng, 32, 32, 0.25);
  Image mix(32, 32, 0.25);
  mix.data = 0.8f * a.data + 0.5f * b.data;

  const int t = 8;
  const Image da = degrade(a, t, cfg);
  const Image db = degrade(b, t, cfg);
  const Image dm = degrade(mix, t, cfg);

  const auto expected = (0.8f * da.data + 0.5f * db.data).eval();
  const double err = (dm.data - expected).abs().maxCoeff();
  const double scale = expected.abs().maxCoeff();
  CHECK(err <= 1e-6 * scale);
}

TEST_CASE("degradation error grows with severity level") {
  FanSpec fan;
  fan.num_detectors = 336;
  const Image phantom = shepp_logan(128, 128);
  const DegradeConfig cfg = DegradeConfig::for_image(phantom, fan);

  std::vector<double> psnrs;
  for (int t = 1; t <= cfg.severity.t_max(); ++t)
    psnrs.push_back(psnr_hu(degrade(phantom, t, cfg), phantom));

  for (std::size_t i = 1; i < psnrs.size(); ++i)
    CHECK(psnrs[i] <= psnrs[i - 1] + 1e-9);
}

TEST_CASE("degradation is deterministic") {
  const DegradeConfig cfg = desk_config();
  RandomStream rng(23);
  const Image x = oracle::random_image(rng, 32, 32, 0.25);
  CHECK(oracle::images_equal(degrade(x, 8, cfg), degrade(x, 8, cfg)));
}

TEST_CASE("degradation rejects mismatched grids and bad levels") {
  const DegradeConfig cfg = desk_config();
  const Image wrong(16, 16, 0.25);
  CHECK_THROWS_AS(degrade(wrong, 1, cfg), ConfigError);

  Image wrong_pixel(32, 32, 0.5);
  CHECK_THROWS_AS(degrade(wrong_pixel, 1, cfg), ConfigError);

  const Image ok(32, 32, 0.25);
  CHECK_THROWS_AS(degrade(ok, 99, cfg), ConfigError);
}

TEST_CASE("severity maps parse from text and reject garbage") {
  std::istringstream good("288 234 180 126 72 54 36 18\n");
  const SeverityMap map = parse_severity_map(good);
  CHECK(map.views_per_level == SeverityMap::defaults().views_per_level);

  std::istringstream garbage("288 twelve 18");
  CHECK_THROWS_AS(parse_severity_map(garbage), DataError);

  std::istringstream unsorted("18 288");
  CHECK_THROWS_AS(parse_severity_map(unsorted), ConfigError);
}
