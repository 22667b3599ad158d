#include "core/report.hpp"

#include <cstdio>
#include <ctime>
#include <numeric>
#include <sstream>

namespace photoscore {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string utc_timestamp() {
  char buf[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string measure_report(const std::string& model_name,
                           const DisentanglementResult& result,
                           bool include_timestamp) {
  std::ostringstream os;
  os << "# photoscore measure v1\n";
  if (include_timestamp) os << "# generated " << utc_timestamp() << "\n";
  os << "model " << model_name << "\n";
  os << "d_measure " << g17(result.d_measure) << "\n";
  os << "columns node score dis_min\n";
  const int nodes = static_cast<int>(result.per_node_min.size());
  for (int j = 0; j < nodes; ++j) {
    const int label = nodes == 8 ? j + 2 : j;
    os << j << " " << label << " " << g17(result.per_node_min[j]) << "\n";
  }
  return os.str();
}

std::string eval_report(const ClassMetrics& metrics, bool binary,
                        bool include_timestamp) {
  std::ostringstream os;
  os << "# photoscore eval v1\n";
  if (include_timestamp) os << "# generated " << utc_timestamp() << "\n";
  os << "mode " << (binary ? "binary" : "perclass") << "\n";
  const int64_t total =
      std::accumulate(metrics.confusion.begin(), metrics.confusion.end(),
                      static_cast<int64_t>(0));
  os << "samples " << total << "\n";

  auto label_name = [&](int j) -> std::string {
    if (binary) return j == 0 ? "low" : "high";
    return std::to_string(metrics.labels[j]);
  };

  os << "labels";
  for (int j = 0; j < metrics.classes; ++j) os << " " << label_name(j);
  os << "\n";
  for (int t = 0; t < metrics.classes; ++t) {
    os << "confusion " << label_name(t);
    for (int p = 0; p < metrics.classes; ++p) os << " " << metrics.at(t, p);
    os << "\n";
  }
  os << "columns class precision recall f\n";
  for (int j = 0; j < metrics.classes; ++j) {
    os << label_name(j) << " " << g17(metrics.precision[j]) << " "
       << g17(metrics.recall[j]) << " " << g17(metrics.per_class_f[j]) << "\n";
  }
  os << "f_all " << g17(metrics.f_all_raw) << "\n";
  int64_t diag = 0;
  for (int j = 0; j < metrics.classes; ++j) diag += metrics.at(j, j);
  os << "accuracy " << g17(total > 0 ? static_cast<double>(diag) / total : 0.0)
     << "\n";
  return os.str();
}

}  // namespace photoscore
