#include "core/saliency.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace photoscore {

FeatureMapStack stack_from_trace(const ForwardTrace& trace, int sample) {
  const Tensor& t = trace.final_conv_maps;
  if (sample < 0 || sample >= t.n)
    fail(Errc::index_out_of_range, "sample outside the traced batch");
  FeatureMapStack stack;
  stack.h = t.h;
  stack.w = t.w;
  stack.maps.assign(t.c, std::vector<double>(
                             static_cast<size_t>(t.h) * t.w, 0.0));
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x) {
      const double* px = t.pixel(sample, y, x);
      for (int c = 0; c < t.c; ++c)
        stack.maps[c][static_cast<size_t>(y) * t.w + x] = px[c];
    }
  return stack;
}

int most_activated_map(const FeatureMapStack& stack) {
  if (stack.maps.empty()) fail(Errc::empty_stack, "no feature maps");
  int best = 0;
  double best_total = -1.0;
  for (int p = 0; p < stack.count(); ++p) {
    double total = 0.0;
    for (double v : stack.maps[p]) total += v;
    if (total > best_total) {
      best_total = total;
      best = p;
    }
  }
  return best;
}

std::vector<double> sum_maps(const FeatureMapStack& stack) {
  if (stack.maps.empty()) fail(Errc::empty_stack, "no feature maps");
  std::vector<double> out(stack.maps[0].size(), 0.0);
  for (const auto& m : stack.maps)
    for (size_t i = 0; i < out.size(); ++i) out[i] += m[i];
  return out;
}

std::vector<double> normalize_resize(const std::vector<double>& map, int h,
                                     int w, int out_h, int out_w) {
  if (h < 1 || w < 1 || out_h < 1 || out_w < 1)
    fail(Errc::dimension_mismatch, "map dimensions must be positive");
  if (map.size() != static_cast<size_t>(h) * w)
    fail(Errc::dimension_mismatch, "map size does not match h*w");

  const auto [lo_it, hi_it] = std::minmax_element(map.begin(), map.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> norm(map.size(), 0.0);
  if (hi > lo) {
    const double span = hi - lo;
    for (size_t i = 0; i < map.size(); ++i) norm[i] = (map[i] - lo) / span;
  }

  std::vector<double> out(static_cast<size_t>(out_h) * out_w, 0.0);
  const double sy = out_h > 1 ? static_cast<double>(h - 1) / (out_h - 1) : 0.0;
  const double sx = out_w > 1 ? static_cast<double>(w - 1) / (out_w - 1) : 0.0;
  for (int oy = 0; oy < out_h; ++oy) {
    const double fy = oy * sy;
    const int y0 = std::min(static_cast<int>(fy), h - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      const double fx = ox * sx;
      const int x0 = std::min(static_cast<int>(fx), w - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - x0;
      const double top = norm[static_cast<size_t>(y0) * w + x0] * (1.0 - tx) +
                         norm[static_cast<size_t>(y0) * w + x1] * tx;
      const double bot = norm[static_cast<size_t>(y1) * w + x0] * (1.0 - tx) +
                         norm[static_cast<size_t>(y1) * w + x1] * tx;
      out[static_cast<size_t>(oy) * out_w + ox] = top * (1.0 - ty) + bot * ty;
    }
  }
  return out;
}

Image apply_mask(const Image& image, const std::vector<double>& mask) {
  if (mask.size() != static_cast<size_t>(image.width) * image.height)
    fail(Errc::dimension_mismatch, "mask does not match the image size");
  Image out(image.width, image.height);
  for (size_t p = 0; p < mask.size(); ++p) {
    const double m = mask[p];
    for (int c = 0; c < 3; ++c) {
      const double v = std::round(m * image.pixels[3 * p + c]);
      out.pixels[3 * p + c] =
          static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

Image ffp_from_stack(const Image& image, const FeatureMapStack& stack) {
  const int p = most_activated_map(stack);
  return apply_mask(image, normalize_resize(stack.maps[p], stack.h, stack.w,
                                            image.height, image.width));
}

Image air_from_stack(const Image& image, const FeatureMapStack& stack) {
  return apply_mask(image, normalize_resize(sum_maps(stack), stack.h, stack.w,
                                            image.height, image.width));
}

SaliencyOutput explain(const TypeCNetwork& net, const Image& image) {
  // The network wants 227x227; the masks go onto the image as given.
  Image fitted;
  const Image* net_input = &image;
  if (image.width != kInputEdge || image.height != kInputEdge) {
    fitted = fit_to_square(image, kInputEdge);
    net_input = &fitted;
  }
  auto& mutable_net = const_cast<TypeCNetwork&>(net);
  const Image* batch[1] = {net_input};
  ForwardTrace trace;
  forward(mutable_net, batch, Mode::infer, trace);
  const FeatureMapStack stack = stack_from_trace(trace, 0);
  SaliencyOutput out;
  out.p_max = most_activated_map(stack);
  out.ffp = ffp_from_stack(image, stack);
  out.air = air_from_stack(image, stack);
  return out;
}

}  // namespace photoscore
