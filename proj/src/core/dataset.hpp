#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace photoscore {

constexpr int kScoreMin = 2;
constexpr int kScoreMax = 9;
constexpr int kScoreClasses = kScoreMax - kScoreMin + 1;

struct Sample {
  std::string id;
  int score = 0;  // in [2, 9]
  Image image;
};

struct Dataset {
  std::vector<Sample> samples;
  bool synthetic = false;

  std::array<int, kScoreClasses> histogram() const;
  int classes_represented() const;
};

enum class SizePolicy {
  reject,  // images must already be edge x edge
  fit,     // center-crop or letterbox to edge x edge
};

// Reads a comma-separated index ("id,relative_path,score", one header line)
// and loads every referenced PPM image.
Dataset load_dataset(const std::filesystem::path& index_path,
                     const std::filesystem::path& root,
                     SizePolicy policy = SizePolicy::reject, int edge = 227);

// Writes images/<id>.ppm for every sample plus index.csv under out_dir.
void write_dataset(const Dataset& ds, const std::filesystem::path& out_dir);

// Index lists into Dataset::samples; both sides preserve the parent order.
struct SplitView {
  std::vector<int> train;
  std::vector<int> validation;
};

// Stratified by class: every class contributes ~ratio of its samples to the
// training side and at least one sample to each side.
SplitView split(const Dataset& ds, double ratio, uint64_t seed);

}  // namespace photoscore
