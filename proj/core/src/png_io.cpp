#include "planekit/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include "planekit/error.hpp"

namespace planekit {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void on_png_error(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = message;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr file(std::fopen(path.c_str(), mode));
  if (!file) throw Error(ErrorKind::kFormat, "cannot open " + path);
  return file;
}

// libpng reports errors by longjmp; everything that needs destruction lives
// outside the setjmp scope.
void read_into(std::FILE* file, const std::string& path, GrayImage& out) {
  std::string message;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, on_png_error, on_png_warning);
  if (!png) throw Error(ErrorKind::kFormat, "libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  int width = 0, height = 0, depth = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::kFormat, path + ": " + message);
  }
  png_init_io(png, file);
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_PALETTE) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::kFormat, path + ": expected a single-channel grayscale or indexed PNG");
  }
  if (depth < 8) png_set_packing(png);
  png_read_update_info(png, info);

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * static_cast<std::size_t>(height));
  rows.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + row_bytes * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.bit_depth = depth == 16 ? 16 : 8;
  out.pixels = Raster<std::uint16_t>(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (depth == 16) {
        const png_bytep src = rows[y] + 2 * x;  // big-endian samples
        out.pixels(x, y) = static_cast<std::uint16_t>((src[0] << 8) | src[1]);
      } else {
        out.pixels(x, y) = rows[y][x];
      }
    }
  }
}

void write_gray(const std::string& path, const Raster<std::uint16_t>& pixels, int depth) {
  if (pixels.width() <= 0 || pixels.height() <= 0) {
    throw Error(ErrorKind::kFormat, path + ": cannot write an empty image");
  }
  const int width = pixels.width();
  const int height = pixels.height();
  const std::size_t bytes_per = depth == 16 ? 2 : 1;
  std::vector<std::uint8_t> buffer(static_cast<std::size_t>(width) * bytes_per *
                                   static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint16_t value = pixels(x, y);
      std::uint8_t* dst = buffer.data() + (static_cast<std::size_t>(y) * width + x) * bytes_per;
      if (depth == 16) {
        dst[0] = static_cast<std::uint8_t>(value >> 8);  // PNG is big-endian
        dst[1] = static_cast<std::uint8_t>(value & 0xff);
      } else {
        if (value > 0xff) throw Error(ErrorKind::kFormat, path + ": value exceeds 8 bits");
        dst[0] = static_cast<std::uint8_t>(value);
      }
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[y] = buffer.data() + static_cast<std::size_t>(y) * width * bytes_per;
  }

  FilePtr file = open_file(path, "wb");
  std::string message;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, on_png_error, on_png_warning);
  if (!png) throw Error(ErrorKind::kFormat, "libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kFormat, path + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw Error(ErrorKind::kFormat, path + ": write failed");
}

}  // namespace

GrayImage read_png_gray(const std::string& path) {
  FilePtr file = open_file(path, "rb");
  unsigned char signature[8] = {};
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw Error(ErrorKind::kFormat, path + ": not a PNG file");
  }
  std::rewind(file.get());
  GrayImage image;
  read_into(file.get(), path, image);
  return image;
}

void write_png_gray8(const std::string& path, const Raster<std::uint16_t>& pixels) {
  write_gray(path, pixels, 8);
}

void write_png_gray16(const std::string& path, const Raster<std::uint16_t>& pixels) {
  write_gray(path, pixels, 16);
}

}  // namespace planekit
