#pragma once

#include <cstdint>
#include <string>

#include "planekit/raster.hpp"

namespace planekit {

struct GrayImage {
  Raster<std::uint16_t> pixels;
  int bit_depth = 0;  // 8 or 16 as stored in the file
};

// Reads single-channel grayscale or palette-indexed PNGs without expanding
// palettes. Throws Error(kFormat).
GrayImage read_png_gray(const std::string& path);

void write_png_gray8(const std::string& path, const Raster<std::uint16_t>& pixels);
void write_png_gray16(const std::string& path, const Raster<std::uint16_t>& pixels);

}  // namespace planekit
