#include <doctest.h>

#include <functional>

#include <png.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "png_fixtures.hpp"
#include "stormforge/error.hpp"
#include "stormforge/png_io.hpp"
#include "temp_dir.hpp"

using namespace stormforge;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kInvalidArgument;
}

}  // namespace

TEST_SUITE("png_io") {
  TEST_CASE("white and black 2x2") {
    fixture::TempDir dir;
    save_png(Image(2, 2, 1.0), dir / "w.png");
    save_png(Image(2, 2, 0.0), dir / "b.png");
    const Image w = load_png(dir / "w.png"), b = load_png(dir / "b.png");
    for (double v : w.data()) CHECK(v == 1.0);
    for (double v : b.data()) CHECK(v == 0.0);
  }

  TEST_CASE("encoded bytes of constant images") {
    fixture::TempDir dir;
    save_png(Image(3, 2, 0.5), dir / "half.png");
    // Re-read with libpng's raw interface to see the stored bytes.
    png_image raw{};
    raw.version = PNG_IMAGE_VERSION;
    REQUIRE(png_image_begin_read_from_file(&raw, (dir / "half.png").c_str()));
    raw.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buf(PNG_IMAGE_SIZE(raw));
    REQUIRE(png_image_finish_read(&raw, nullptr, buf.data(), 0, nullptr));
    for (auto b : buf) CHECK(b == 128);

    save_png(Image(1, 1, 0.0), dir / "zero.png");
    png_image z{};
    z.version = PNG_IMAGE_VERSION;
    REQUIRE(png_image_begin_read_from_file(&z, (dir / "zero.png").c_str()));
    z.format = PNG_FORMAT_RGB;
    std::vector<png_byte> zb(PNG_IMAGE_SIZE(z));
    REQUIRE(png_image_finish_read(&z, nullptr, zb.data(), 0, nullptr));
    CHECK(zb == std::vector<png_byte>{0, 0, 0});
  }

  TEST_CASE("round trip within one quantization step") {
    fixture::TempDir dir;
    std::mt19937_64 rng(21);
    const Image img = oracle::random_image(16, 16, rng);
    save_png(img, dir / "r.png");
    const Image back = load_png(dir / "r.png");
    REQUIRE(back.height() == 16);
    REQUIRE(back.width() == 16);
    double worst = 0.0;
    for (std::size_t i = 0; i < img.data().size(); ++i) worst = std::max(worst, std::abs(img.data()[i] - back.data()[i]));
    CHECK(worst <= 1.0 / 255.0);
    CHECK(back == quantize_8bit(img));
  }

  TEST_CASE("16-bit, gray, palette and alpha inputs") {
    fixture::TempDir dir;
    // 16-bit RGB, one pixel of (65535, 0, 32768), big-endian samples.
    fixture::write_raw_png(dir / "d16.png", 1, 1, 16, PNG_COLOR_TYPE_RGB, {{0xFF, 0xFF, 0x00, 0x00, 0x80, 0x00}});
    const Image d16 = load_png(dir / "d16.png");
    CHECK(d16.at(0, 0, 0) == 1.0);
    CHECK(d16.at(0, 0, 1) == 0.0);
    CHECK(d16.at(0, 0, 2) == doctest::Approx(32768.0 / 65535.0).epsilon(1e-15));

    fixture::write_raw_png(dir / "rgba.png", 2, 1, 8, PNG_COLOR_TYPE_RGB_ALPHA, {{255, 0, 0, 0, 0, 255, 0, 128}});
    const Image rgba = load_png(dir / "rgba.png");
    CHECK(rgba.at(0, 0, 0) == 1.0);
    CHECK(rgba.at(0, 1, 1) == 1.0);

    fixture::write_raw_png(dir / "gray.png", 2, 1, 8, PNG_COLOR_TYPE_GRAY, {{0, 255}});
    const Image gray = load_png(dir / "gray.png");
    CHECK(gray.at(0, 1, 0) == 1.0);
    CHECK(gray.at(0, 1, 2) == 1.0);
    CHECK(gray.at(0, 0, 1) == 0.0);

    fixture::write_raw_png(dir / "pal.png", 2, 1, 8, PNG_COLOR_TYPE_PALETTE, {{1, 0}});
    const Image pal = load_png(dir / "pal.png");
    CHECK(pal.at(0, 0, 0) == 1.0);
    CHECK(pal.at(0, 1, 0) == 0.0);
  }

  TEST_CASE("error values are distinct") {
    fixture::TempDir dir;
    CHECK(code_of([&] { load_png(dir / "missing.png"); }) == Errc::kFileNotFound);

    fixture::write_file(dir / "junk.png", "definitely not a png");
    CHECK(code_of([&] { load_png(dir / "junk.png"); }) == Errc::kDecodeFailure);

    fixture::write_raw_png(dir / "onebit.png", 8, 1, 1, PNG_COLOR_TYPE_GRAY, {{0xAA}});
    CHECK(code_of([&] { load_png(dir / "onebit.png"); }) == Errc::kUnsupportedBitDepth);

    CHECK(code_of([&] { save_png(Image(1, 1), dir / "no" / "such" / "dir" / "x.png"); }) == Errc::kUnwritablePath);
  }

  TEST_CASE("truncated stream is a decode failure") {
    auto bytes = encode_png(Image(8, 8, 0.3));
    bytes.resize(bytes.size() / 2);
    CHECK(code_of([&] { decode_png(bytes); }) == Errc::kDecodeFailure);
  }
}
