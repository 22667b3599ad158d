#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "core/rng.hpp"

namespace photoscore {

namespace {

struct Rgb {
  double r, g, b;
};

// h in [0, 360), s and v in [0, 1]; channels returned in [0, 255].
Rgb hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1)      { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else             { r = c; b = x; }
  const double m = v - c;
  return {(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0};
}

uint8_t clamp_u8(double x) {
  return static_cast<uint8_t>(std::clamp(std::lround(x), 0L, 255L));
}

// Attribute bits per class: bit 0 brightness band, bit 1 saturation level,
// bit 2 edge density.  All eight combinations are distinct, so the class is
// a deterministic function of the rendered attributes.
struct ClassAttributes {
  bool bright;
  bool saturated;
  bool edgy;
};

ClassAttributes attributes_for(int score) {
  const int k = score - kScoreMin;
  return {(k & 1) != 0, (k & 2) != 0, (k & 4) != 0};
}

Image render_sample(int score, int edge_px, Rng& rng) {
  const ClassAttributes attr = attributes_for(score);
  const double v_base =
      attr.bright ? rng.uniform(150.0, 190.0) : rng.uniform(70.0, 110.0);
  const double sat =
      attr.saturated ? rng.uniform(0.60, 0.90) : rng.uniform(0.05, 0.20);
  const double hue = rng.uniform(0.0, 360.0);

  Image img(edge_px, edge_px);
  const int w = edge_px, h = edge_px;
  if (attr.edgy) {
    // Checkerboard of two contrasting colors.  Cell sizes avoid dividing the
    // convolution stride, so subsampled pixels still see both colors.
    static const int kCells[] = {5, 7, 9, 11};
    const int cell = kCells[rng.below(4)];
    const double hue2 = std::fmod(hue + 40.0, 360.0);
    const Rgb a = hsv_to_rgb(hue, sat, std::min(1.0, (v_base + 35.0) / 255.0));
    const Rgb b = hsv_to_rgb(hue2, sat, std::max(0.0, (v_base - 35.0) / 255.0));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Rgb& px = (((x / cell) + (y / cell)) & 1) ? b : a;
        uint8_t* out = img.pixel(x, y);
        out[0] = clamp_u8(px.r + static_cast<double>(rng.below(13)) - 6.0);
        out[1] = clamp_u8(px.g + static_cast<double>(rng.below(13)) - 6.0);
        out[2] = clamp_u8(px.b + static_cast<double>(rng.below(13)) - 6.0);
      }
  } else {
    // Smooth diagonal brightness gradient around the base value.
    const double gx = rng.below(2) ? 1.0 : -1.0;
    const double gy = rng.below(2) ? 1.0 : -1.0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double ramp =
            gx * (static_cast<double>(x) / (w - 1) - 0.5) +
            gy * (static_cast<double>(y) / (h - 1) - 0.5);
        const double v = std::clamp((v_base + 15.0 * ramp) / 255.0, 0.0, 1.0);
        const Rgb px = hsv_to_rgb(hue, sat, v);
        uint8_t* out = img.pixel(x, y);
        out[0] = clamp_u8(px.r + static_cast<double>(rng.below(13)) - 6.0);
        out[1] = clamp_u8(px.g + static_cast<double>(rng.below(13)) - 6.0);
        out[2] = clamp_u8(px.b + static_cast<double>(rng.below(13)) - 6.0);
      }
  }
  return img;
}

}  // namespace

std::array<int, kScoreClasses> class_counts(const SynthSpec& spec) {
  double sum = 0.0;
  for (double p : spec.proportions) {
    if (p < 0.0) fail(Errc::bad_config, "negative class proportion");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    fail(Errc::bad_config, "class proportions must sum to 1");
  if (spec.total < 1) fail(Errc::bad_config, "total must be positive");

  std::array<int, kScoreClasses> counts{};
  int assigned = 0;
  for (int c = 0; c < kScoreClasses; ++c) {
    counts[c] = static_cast<int>(
        std::floor(spec.proportions[c] * spec.total + 0.5));
    assigned += counts[c];
  }
  counts[4 - kScoreMin] += spec.total - assigned;  // remainder to class 4
  if (counts[4 - kScoreMin] < 0)
    fail(Errc::bad_config, "rounding left class 4 negative");
  return counts;
}

Dataset synth_dataset(const SynthSpec& spec) {
  if (spec.image_size < 2) fail(Errc::bad_config, "image_size too small");
  const auto counts = class_counts(spec);

  std::vector<int> labels;
  labels.reserve(spec.total);
  for (int c = 0; c < kScoreClasses; ++c)
    labels.insert(labels.end(), counts[c], c + kScoreMin);
  Rng order_rng(mix_seed(spec.seed, 0xab31));
  order_rng.shuffle(labels);

  Dataset ds;
  ds.synthetic = true;
  ds.samples.reserve(spec.total);
  for (int i = 0; i < spec.total; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "s%06d", i);
    Rng rng(mix_seed(spec.seed, 1000 + static_cast<uint64_t>(i)));
    ds.samples.push_back(
        {id, labels[i], render_sample(labels[i], spec.image_size, rng)});
  }
  return ds;
}

}  // namespace photoscore
