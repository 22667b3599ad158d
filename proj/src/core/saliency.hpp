#pragma once

#include <vector>

#include "core/image.hpp"
#include "core/nn.hpp"

namespace photoscore {

// Nonnegative feature maps of the final convolution stage for one sample.
struct FeatureMapStack {
  int h = 0, w = 0;
  std::vector<std::vector<double>> maps;  // each h*w, row-major

  int count() const { return static_cast<int>(maps.size()); }
};

// Post-ReLU final-convolution activations of one traced sample.
FeatureMapStack stack_from_trace(const ForwardTrace& trace, int sample);

// Index of the map with the largest total activation; ties go to the lowest
// index.
int most_activated_map(const FeatureMapStack& stack);

// Elementwise sum over all maps.
std::vector<double> sum_maps(const FeatureMapStack& stack);

// Min-max normalization to [0,1] (a constant map becomes all zeros) followed
// by corner-aligned bilinear resize to out_w x out_h.
std::vector<double> normalize_resize(const std::vector<double>& map, int h,
                                     int w, int out_h, int out_w);

// Multiplies every channel by the mask (image-sized, values in [0,1]),
// rounding to the nearest integer and clamping to 0..255.
Image apply_mask(const Image& image, const std::vector<double>& mask);

// Masked views of the image: the most activated map (first fixation) and the
// sum of all maps (overall interest region).
Image ffp_from_stack(const Image& image, const FeatureMapStack& stack);
Image air_from_stack(const Image& image, const FeatureMapStack& stack);

struct SaliencyOutput {
  int p_max = 0;
  Image ffp;
  Image air;
};

// Runs the network on the image and extracts both views.
SaliencyOutput explain(const TypeCNetwork& net, const Image& image);

}  // namespace photoscore
