#include <doctest.h>

#include <algorithm>
#include <random>

#include "stormforge/error.hpp"
#include "stormforge/rain.hpp"

using namespace stormforge;

namespace {

std::size_t nonzero(const GrayMap& m) {
  return static_cast<std::size_t>(std::count_if(m.data.begin(), m.data.end(), [](double v) { return v > 0.0; }));
}

bool all_zero(const GrayMap& m) { return nonzero(m) == 0; }

RainParams seeded(std::uint64_t seed) {
  RainParams p;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_SUITE("rain") {
  TEST_CASE("zero density or intensity renders nothing") {
    RainParams p;
    p.density = 0.0;
    CHECK(all_zero(render_scale_layer(p, 1.0, 32, 32)));
    CHECK(all_zero(render_rain(p, 32, 32)));
    p = RainParams{};
    p.intensity = 0.0;
    CHECK(all_zero(render_scale_layer(p, 0.5, 32, 32)));
    CHECK(all_zero(render_rain(p, 32, 32)));
  }

  TEST_CASE("determinism") {
    const RainParams p = seeded(17);
    CHECK(render_scale_layer(p, 1.0, 40, 48) == render_scale_layer(p, 1.0, 40, 48));
    CHECK(render_rain(p, 40, 48) == render_rain(p, 40, 48));
    CHECK_FALSE(render_rain(seeded(18), 40, 48) == render_rain(p, 40, 48));
  }

  TEST_CASE("layers are nonnegative") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      for (double scale : {1.0, 0.5, 0.25}) {
        const GrayMap m = render_scale_layer(seeded(s), scale, 64, 64);
        CHECK(*std::min_element(m.data.begin(), m.data.end()) >= 0.0);
      }
    }
  }

  TEST_CASE("singleton scale set equals the clamped base layer") {
    RainParams p = seeded(3);
    p.scales = {1.0};
    p.intensity = 1.0;
    p.density = 20000.0;
    GrayMap expected = render_scale_layer(p, 1.0, 64, 64);
    clamp_in_place(expected);
    CHECK(render_rain(p, 64, 64) == expected);
  }

  TEST_CASE("superposition is sum then clamp") {
    RainParams p = seeded(5);
    p.intensity = 1.0;
    p.density = 15000.0;
    GrayMap sum(64, 64);
    for (double s : p.scales) {
      const GrayMap layer = render_scale_layer(p, s, 64, 64);
      for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += layer.data[i];
    }
    CHECK(render_rain_unclamped(p, 64, 64) == sum);
    clamp_in_place(sum);
    CHECK(render_rain(p, 64, 64) == sum);
  }

  TEST_CASE("multi-scale stack covers more pixels than the base layer") {
    int more = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const RainParams p = seeded(s);
      more += nonzero(render_rain(p, 64, 64)) > nonzero(render_scale_layer(p, 1.0, 64, 64));
    }
    CHECK(more >= 95);
  }

  TEST_CASE("pre-clamp layer is monotone in intensity") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      RainParams lo = seeded(s), hi = seeded(s);
      lo.intensity = 0.3;
      hi.intensity = 0.9;
      const GrayMap a = render_rain_unclamped(lo, 48, 48);
      const GrayMap b = render_rain_unclamped(hi, 48, 48);
      for (std::size_t i = 0; i < a.data.size(); ++i) REQUIRE(a.data[i] <= b.data[i]);
    }
  }

  TEST_CASE("coverage is non-decreasing in density on average") {
    double previous = -1.0;
    for (double rho : {1000.0, 4000.0, 8000.0, 16000.0}) {
      double acc = 0.0;
      for (std::uint64_t s = 0; s < 100; ++s) {
        RainParams p = seeded(s);
        p.density = rho;
        acc += coverage_fraction(render_rain(p, 48, 48));
      }
      CHECK(acc / 100.0 >= previous);
      previous = acc / 100.0;
    }
  }

  TEST_CASE("rain_to_image broadcasts") {
    const Image dark = rain_to_image(GrayMap(3, 3, 0.0)), grey = rain_to_image(GrayMap(3, 3, 0.7));
    for (double v : dark.data()) CHECK(v == 0.0);
    for (double v : grey.data()) CHECK(v == 0.7);
    const Image img = rain_to_image(render_rain(seeded(1), 32, 32));
    for (std::size_t r = 0; r < 32; ++r) {
      for (std::size_t c = 0; c < 32; ++c) {
        REQUIRE(img.at(r, c, 0) == img.at(r, c, 1));
        REQUIRE(img.at(r, c, 1) == img.at(r, c, 2));
      }
    }
  }

  TEST_CASE("blur kernel rounding") {
    CHECK(nearest_odd_kernel(1.0) == 1);
    CHECK(nearest_odd_kernel(0.2) == 1);
    CHECK(nearest_odd_kernel(2.9) == 3);
    CHECK(nearest_odd_kernel(4.2) == 5);
    CHECK(nearest_odd_kernel(8.9) == 9);
  }

  TEST_CASE("validation and canvas errors") {
    const RainParams p;
    auto code = [](auto&& fn) {
      try {
        fn();
      } catch (const Error& e) {
        return e.code();
      }
      return Errc::kConfig;
    };
    CHECK(code([&] { render_scale_layer(p, 1.0, 0, 16); }) == Errc::kZeroAreaCanvas);
    CHECK(code([&] { render_scale_layer(p, 1.0, 4, 16); }) == Errc::kInvalidArgument);
    CHECK(code([&] { render_scale_layer(p, 0.3, 16, 16); }) == Errc::kInvalidArgument);
    RainParams bad;
    bad.blur = 4;
    CHECK_THROWS_WITH(bad.validate(), doctest::Contains("blur"));
    bad = RainParams{};
    bad.scales = {0.5, 1.0};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = RainParams{};
    bad.direction_deg = 60.0;
    CHECK_THROWS_WITH(bad.validate(), doctest::Contains("direction"));
  }
}
