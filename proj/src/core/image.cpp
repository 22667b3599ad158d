#include "core/image.hpp"

#include <cstdio>
#include <fstream>

namespace photoscore {

namespace {

// Skips whitespace and '#' comment lines between header tokens.
void skip_separators(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string dummy;
      std::getline(in, dummy);
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      in.get();
    } else {
      return;
    }
  }
}

int read_header_int(std::istream& in, const std::filesystem::path& path) {
  skip_separators(in);
  int v = 0;
  if (!(in >> v))
    fail(Errc::truncated_file, "incomplete header in " + path.string());
  return v;
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::missing_image, "cannot open " + path.string());

  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P')
    fail(Errc::unsupported_format, "not a PPM file: " + path.string());
  if (magic[1] != '6')
    fail(Errc::unsupported_format,
         std::string("only binary P6 is supported, got P") + magic[1] + ": " +
             path.string());

  const int width = read_header_int(in, path);
  const int height = read_header_int(in, path);
  const int maxval = read_header_int(in, path);
  if (width < 1 || height < 1)
    fail(Errc::unsupported_format, "bad dimensions in " + path.string());
  if (maxval != 255)
    fail(Errc::unsupported_format,
         "maxval " + std::to_string(maxval) + " unsupported (need 255): " +
             path.string());
  in.get();  // the single whitespace byte before the raster

  Image img(width, height);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    fail(Errc::truncated_file,
         "raster shorter than " + std::to_string(img.pixels.size()) +
             " bytes: " + path.string());
  return img;
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  if (img.width < 1 || img.height < 1)
    fail(Errc::shape_mismatch, "cannot write an empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot create " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) fail(Errc::io_error, "short write to " + path.string());
}

Image fit_to_square(const Image& img, int edge) {
  Image out(edge, edge);
  // Offsets are negative when cropping, positive when padding.
  const int dx = (edge - img.width) / 2;
  const int dy = (edge - img.height) / 2;
  for (int y = 0; y < edge; ++y) {
    const int sy = y - dy;
    if (sy < 0 || sy >= img.height) continue;
    for (int x = 0; x < edge; ++x) {
      const int sx = x - dx;
      if (sx < 0 || sx >= img.width) continue;
      const uint8_t* src = img.pixel(sx, sy);
      uint8_t* dst = out.pixel(x, y);
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
    }
  }
  return out;
}

}  // namespace photoscore
