#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "core/error.hpp"

namespace photoscore {

// 8-bit RGB image, row-major triples.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  Image() = default;
  Image(int w, int h) : width(w), height(h) {
    pixels.assign(static_cast<size_t>(w) * h * 3, 0);
  }

  uint8_t* pixel(int x, int y) {
    return pixels.data() + 3 * (static_cast<size_t>(y) * width + x);
  }
  const uint8_t* pixel(int x, int y) const {
    return pixels.data() + 3 * (static_cast<size_t>(y) * width + x);
  }
};

// Binary portable pixmap (P6, maxval 255) with lossless round-trips.
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const Image& img, const std::filesystem::path& path);

// Center crop when the source is larger, black letterbox when smaller.
Image fit_to_square(const Image& img, int edge);

}  // namespace photoscore
