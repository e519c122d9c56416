#include "stormforge/png_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "stormforge/error.hpp"

namespace stormforge {
namespace {

struct ByteSource {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* src = static_cast<ByteSource*>(png_get_io_ptr(png));
  if (src->offset + count > src->size) png_error(png, "truncated PNG stream");
  std::memcpy(out, src->data + src->offset, count);
  src->offset += count;
}

void append_to_vector(png_structp png, png_bytep in, png_size_t count) {
  auto* dst = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  dst->insert(dst->end(), in, in + count);
}

void flush_noop(png_structp) {}

void silent_warning(png_structp, png_const_charp) {}

struct PngHeader {
  png_uint_32 width;
  png_uint_32 height;
  int bit_depth;
  int color_type;
  png_size_t rowbytes;
  int channels;
};

// libpng reports errors via longjmp; the frames below hold only trivially
// destructible state so the jump never skips a C++ destructor.
bool read_header(png_structp png, png_infop info, ByteSource* src, PngHeader* hdr) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_read_fn(png, src, read_from_memory);
  png_read_info(png, info);
  hdr->width = png_get_image_width(png, info);
  hdr->height = png_get_image_height(png, info);
  hdr->bit_depth = png_get_bit_depth(png, info);
  hdr->color_type = png_get_color_type(png, info);
  if (hdr->bit_depth != 8 && hdr->bit_depth != 16) return true;

  if (hdr->color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (hdr->color_type == PNG_COLOR_TYPE_GRAY || hdr->color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  if (hdr->color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
  }
  if (hdr->bit_depth == 16) png_set_swap(png);  // native little-endian uint16 rows
  png_read_update_info(png, info);
  hdr->rowbytes = png_get_rowbytes(png, info);
  hdr->channels = png_get_channels(png, info);
  return true;
}

bool read_rows(png_structp png, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

bool write_all(png_structp png, png_infop info, std::vector<std::uint8_t>* out, png_uint_32 width,
               png_uint_32 height, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_write_fn(png, out, append_to_vector, flush_noop);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return true;
}

struct ReadHandles {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~ReadHandles() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct WriteHandles {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~WriteHandles() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

}  // namespace

Image decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(Errc::kDecodeFailure, "missing PNG signature");
  }
  ReadHandles h;
  h.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
  if (h.png) h.info = png_create_info_struct(h.png);
  if (!h.png || !h.info) throw Error(Errc::kDecodeFailure, "libpng initialisation failed");

  ByteSource src{bytes.data(), bytes.size(), 0};
  PngHeader hdr{};
  if (!read_header(h.png, h.info, &src, &hdr)) {
    throw Error(Errc::kDecodeFailure, "corrupt PNG header");
  }
  if (hdr.bit_depth != 8 && hdr.bit_depth != 16) {
    throw Error(Errc::kUnsupportedBitDepth, "bit depth " + std::to_string(hdr.bit_depth));
  }
  if (hdr.channels != 3) throw Error(Errc::kDecodeFailure, "unexpected channel layout");

  std::vector<std::uint8_t> pixels(hdr.rowbytes * hdr.height);
  std::vector<png_bytep> rows(hdr.height);
  for (png_uint_32 r = 0; r < hdr.height; ++r) rows[r] = pixels.data() + r * hdr.rowbytes;
  if (!read_rows(h.png, rows.data())) throw Error(Errc::kDecodeFailure, "corrupt PNG data");

  const std::size_t count = std::size_t{hdr.width} * hdr.height * 3;
  std::vector<double> data(count);
  if (hdr.bit_depth == 8) {
    for (png_uint_32 r = 0; r < hdr.height; ++r) {
      for (std::size_t i = 0; i < std::size_t{hdr.width} * 3; ++i) {
        data[r * hdr.width * 3 + i] = rows[r][i] / 255.0;
      }
    }
  } else {
    for (png_uint_32 r = 0; r < hdr.height; ++r) {
      for (std::size_t i = 0; i < std::size_t{hdr.width} * 3; ++i) {
        std::uint16_t v;
        std::memcpy(&v, rows[r] + 2 * i, 2);
        data[r * hdr.width * 3 + i] = v / 65535.0;
      }
    }
  }
  return Image(hdr.height, hdr.width, std::move(data));
}

Image load_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kFileNotFound, path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.empty()) throw Error(Errc::kInvalidArgument, "cannot encode an empty image");
  std::vector<std::uint8_t> pixels(img.data().size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<std::uint8_t>(std::lround(img.data()[i] * 255.0));
  }
  std::vector<png_bytep> rows(img.height());
  for (std::size_t r = 0; r < img.height(); ++r) rows[r] = pixels.data() + r * img.width() * 3;

  WriteHandles h;
  h.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
  if (h.png) h.info = png_create_info_struct(h.png);
  if (!h.png || !h.info) throw Error(Errc::kInvalidArgument, "libpng initialisation failed");

  std::vector<std::uint8_t> out;
  if (!write_all(h.png, h.info, &out, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), rows.data())) {
    throw Error(Errc::kInvalidArgument, "PNG encoding failed");
  }
  return out;
}

void save_png(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kUnwritablePath, path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::kUnwritablePath, path.string());
}

Image quantize_8bit(const Image& img) {
  std::vector<double> data(img.data().begin(), img.data().end());
  for (double& v : data) v = static_cast<double>(std::lround(v * 255.0)) / 255.0;
  return Image(img.height(), img.width(), std::move(data));
}

}  // namespace stormforge
