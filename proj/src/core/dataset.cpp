#include "core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "core/rng.hpp"

namespace photoscore {

std::array<int, kScoreClasses> Dataset::histogram() const {
  std::array<int, kScoreClasses> h{};
  for (const auto& s : samples) ++h[s.score - kScoreMin];
  return h;
}

int Dataset::classes_represented() const {
  const auto h = histogram();
  int n = 0;
  for (int c : h)
    if (c > 0) ++n;
  return n;
}

Dataset load_dataset(const std::filesystem::path& index_path,
                     const std::filesystem::path& root, SizePolicy policy,
                     int edge) {
  std::ifstream in(index_path);
  if (!in) fail(Errc::io_error, "cannot open index " + index_path.string());

  Dataset ds;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_skipped) {
      header_skipped = true;  // first non-empty line is the column header
      continue;
    }

    std::istringstream ls(line);
    std::string id, rel, score_str;
    if (!std::getline(ls, id, ',') || !std::getline(ls, rel, ',') ||
        !std::getline(ls, score_str) || id.empty() || rel.empty())
      fail(Errc::malformed_row,
           "line " + std::to_string(lineno) + ": expected id,path,score");
    if (!seen.insert(id).second)
      fail(Errc::malformed_row,
           "line " + std::to_string(lineno) + ": duplicate id '" + id + "'");

    int score = 0;
    try {
      size_t pos = 0;
      score = std::stoi(score_str, &pos);
      if (pos != score_str.size()) throw std::invalid_argument(score_str);
    } catch (const std::exception&) {
      fail(Errc::malformed_row, "line " + std::to_string(lineno) +
                                    ": score '" + score_str +
                                    "' is not an integer");
    }
    if (score < kScoreMin || score > kScoreMax)
      fail(Errc::bad_label, "line " + std::to_string(lineno) + ": score " +
                                std::to_string(score) + " outside [2, 9]");

    const std::filesystem::path img_path = root / rel;
    if (!std::filesystem::exists(img_path))
      fail(Errc::missing_image, "line " + std::to_string(lineno) + ": " +
                                    img_path.string() + " does not exist");
    Image img = read_ppm(img_path);
    if (img.width != edge || img.height != edge) {
      if (policy == SizePolicy::reject)
        fail(Errc::shape_mismatch,
             "line " + std::to_string(lineno) + ": image is " +
                 std::to_string(img.width) + "x" + std::to_string(img.height) +
                 ", expected " + std::to_string(edge) + "x" +
                 std::to_string(edge));
      img = fit_to_square(img, edge);
    }
    ds.samples.push_back({id, score, std::move(img)});
  }
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& out_dir) {
  const std::filesystem::path img_dir = out_dir / "images";
  std::filesystem::create_directories(img_dir);
  std::ofstream index(out_dir / "index.csv");
  if (!index) fail(Errc::io_error, "cannot create index.csv in " +
                                       out_dir.string());
  index << "id,path,score\n";
  for (const auto& s : ds.samples) {
    const std::string rel = "images/" + s.id + ".ppm";
    write_ppm(s.image, out_dir / rel);
    index << s.id << "," << rel << "," << s.score << "\n";
  }
}

SplitView split(const Dataset& ds, double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    fail(Errc::bad_config, "split ratio must be in (0, 1)");

  std::array<std::vector<int>, kScoreClasses> by_class;
  for (int i = 0; i < static_cast<int>(ds.samples.size()); ++i)
    by_class[ds.samples[i].score - kScoreMin].push_back(i);

  std::vector<char> to_train(ds.samples.size(), 0);
  for (int c = 0; c < kScoreClasses; ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    const int n = static_cast<int>(members.size());
    if (n < 2)
      fail(Errc::class_too_small,
           "class " + std::to_string(c + kScoreMin) +
               " has a single sample and cannot be stratified");
    int take = static_cast<int>(std::lround(ratio * n));
    take = std::clamp(take, 1, n - 1);  // both sides stay nonempty
    Rng rng(mix_seed(seed, 0x5714 + c));
    rng.shuffle(members);
    for (int k = 0; k < take; ++k) to_train[members[k]] = 1;
  }

  SplitView view;
  for (int i = 0; i < static_cast<int>(ds.samples.size()); ++i)
    (to_train[i] ? view.train : view.validation).push_back(i);
  return view;
}

}  // namespace photoscore
