#pragma once

#include <array>
#include <cstdint>

#include "core/dataset.hpp"

namespace photoscore {

// Synthetic imbalanced score dataset.  Class proportions default to the
// heavy mid-score concentration of professional photo-score collections:
// score 4 carries 45% of the mass and scores 3-5 together carry 87%.
struct SynthSpec {
  int total = 1000;
  std::array<double, kScoreClasses> proportions = {
      0.026, 0.21, 0.45, 0.21, 0.026, 0.026, 0.026, 0.026};
  uint64_t seed = 0;
  int image_size = 227;
};

// Exact per-class counts: proportions rounded half-up, any remainder folded
// into class 4.
std::array<int, kScoreClasses> class_counts(const SynthSpec& spec);

// Deterministic for a seed.  Each image renders three class-coded visual
// attributes (brightness band, saturation level, edge density) plus bounded
// pixel noise, so the score is recoverable from per-pixel color statistics.
Dataset synth_dataset(const SynthSpec& spec);

}  // namespace photoscore
