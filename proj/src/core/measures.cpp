#include "core/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>
#include <numeric>
#include <sstream>

namespace photoscore {

namespace {

constexpr double kEigenvalueFloor = 1e-10;  // factors below this are dropped
constexpr double kNegativeTolerance = -1e-9;

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

FactorDecomposition factor_loadings(const EigenSystem& eig) {
  const int n = static_cast<int>(eig.eigenvalues.size());
  std::vector<int> keep;
  for (int m = 0; m < n; ++m) {
    double ev = eig.eigenvalues[m];
    if (ev < kNegativeTolerance)
      fail(Errc::negative_eigenvalue,
           "eigenvalue " + std::to_string(m) + " = " + g17(ev));
    if (ev > kEigenvalueFloor) keep.push_back(m);
  }
  if (keep.empty()) fail(Errc::all_zero, "no eigenvalue above the floor");

  FactorDecomposition fd;
  fd.factor_count = static_cast<int>(keep.size());
  fd.loadings = Matrix(fd.factor_count, n);
  for (int row = 0; row < fd.factor_count; ++row) {
    const int m = keep[row];
    const double scale = std::sqrt(eig.eigenvalues[m]);
    for (int j = 0; j < n; ++j)
      fd.loadings(row, j) = scale * eig.eigenvectors(j, m);
  }
  fd.source = eig;
  return fd;
}

double pairwise_factor_distance(const FactorDecomposition& fd, int j1, int j2) {
  const int nodes = fd.loadings.cols();
  if (j1 < 0 || j1 >= nodes || j2 < 0 || j2 >= nodes)
    fail(Errc::index_out_of_range,
         "node index outside [0, " + std::to_string(nodes) + ")");
  double ss = 0.0;
  for (int m = 0; m < fd.factor_count; ++m) {
    const double d = fd.loadings(m, j1) - fd.loadings(m, j2);
    ss += d * d;
  }
  return std::sqrt(ss);
}

DisentanglementResult d_measure(const Matrix& weights) {
  if (weights.cols() < 2)
    fail(Errc::single_node, "disentanglement needs at least 2 nodes");

  const Matrix standardized = zscore_columns(weights);
  const Matrix corr = correlation_matrix(standardized);
  const FactorDecomposition fd = factor_loadings(sym_eig(corr));

  const int nodes = corr.cols();
  DisentanglementResult out;
  out.pairwise = Matrix(nodes, nodes);
  for (int j1 = 0; j1 < nodes; ++j1)
    for (int j2 = j1 + 1; j2 < nodes; ++j2) {
      const double d = pairwise_factor_distance(fd, j1, j2);
      out.pairwise(j1, j2) = d;
      out.pairwise(j2, j1) = d;
    }

  out.per_node_min.resize(nodes);
  for (int j = 0; j < nodes; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    for (int jj = 0; jj < nodes; ++jj)
      if (jj != j) lo = std::min(lo, out.pairwise(j, jj));
    out.per_node_min[j] = lo;
  }
  out.d_measure =
      std::accumulate(out.per_node_min.begin(), out.per_node_min.end(), 0.0) /
      nodes;
  return out;
}

ClassMetrics f_measures(const std::vector<int64_t>& confusion, int classes,
                        std::vector<int> labels) {
  if (classes < 1 ||
      confusion.size() != static_cast<size_t>(classes) * classes)
    fail(Errc::empty_confusion, "confusion table is not square");
  int64_t total = 0;
  for (int64_t c : confusion) {
    if (c < 0) fail(Errc::empty_confusion, "negative count");
    total += c;
  }
  if (total == 0) fail(Errc::empty_confusion, "confusion table is all zero");

  ClassMetrics out;
  out.classes = classes;
  out.confusion = confusion;
  if (!labels.empty()) {
    out.labels = std::move(labels);
  } else {
    out.labels.resize(classes);
    for (int j = 0; j < classes; ++j)
      out.labels[j] = classes == 8 ? j + 2 : j;
  }

  out.precision.resize(classes);
  out.recall.resize(classes);
  out.per_class_f.resize(classes);
  for (int j = 0; j < classes; ++j) {
    int64_t row = 0, col = 0;
    for (int k = 0; k < classes; ++k) {
      row += out.at(j, k);
      col += out.at(k, j);
    }
    const int64_t tp = out.at(j, j);
    const double p = col > 0 ? static_cast<double>(tp) / col : 0.0;
    const double r = row > 0 ? static_cast<double>(tp) / row : 0.0;
    out.precision[j] = p;
    out.recall[j] = r;
    out.per_class_f[j] = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    out.f_all_raw += out.per_class_f[j];
  }
  return out;
}

FdScores fd_scores(const std::vector<double>& f_all,
                   const std::vector<double>& d) {
  if (f_all.size() != d.size())
    fail(Errc::length_mismatch, "f_all and d lists differ in length");
  if (f_all.empty()) fail(Errc::length_mismatch, "empty score lists");

  const double fmax = *std::max_element(f_all.begin(), f_all.end());
  const double dmax = *std::max_element(d.begin(), d.end());
  if (fmax <= 0.0) fail(Errc::all_zero, "every f_all value is zero");
  if (dmax <= 0.0) fail(Errc::all_zero, "every d value is zero");

  FdScores out;
  const size_t n = f_all.size();
  out.f_hat.resize(n);
  out.d_hat.resize(n);
  out.fd.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.f_hat[i] = f_all[i] / fmax;
    out.d_hat[i] = d[i] / dmax;
    out.fd[i] = 0.5 * out.f_hat[i] + 0.5 * out.d_hat[i];
  }
  return out;
}

void ModelFamilyLedger::renormalize() {
  std::vector<double> f, d;
  f.reserve(records.size());
  d.reserve(records.size());
  for (const auto& r : records) {
    f.push_back(r.f_all_raw);
    d.push_back(r.d_measure);
  }
  const FdScores s = fd_scores(f, d);
  for (size_t i = 0; i < records.size(); ++i) {
    records[i].f_hat = s.f_hat[i];
    records[i].d_hat = s.d_hat[i];
    records[i].fd = weight_f * s.f_hat[i] + weight_d * s.d_hat[i];
  }
}

Selection select_optimal(const ModelFamilyLedger& ledger) {
  if (ledger.records.empty())
    fail(Errc::length_mismatch, "ledger has no records");

  Selection sel;
  sel.by_f = 0;
  sel.by_d = 0;
  for (int i = 1; i < static_cast<int>(ledger.records.size()); ++i) {
    if (ledger.records[i].f_hat > ledger.records[sel.by_f].f_hat) sel.by_f = i;
    if (ledger.records[i].d_hat > ledger.records[sel.by_d].d_hat) sel.by_d = i;
  }
  if (ledger.records[sel.by_f].fd > ledger.threshold) {
    sel.optimal = sel.by_f;
    sel.converged = true;
  }
  return sel;
}

std::string serialize_ledger(const ModelFamilyLedger& ledger,
                             bool include_timestamp) {
  std::ostringstream os;
  os << "# photoscore ledger v1\n";
  if (include_timestamp) {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    os << "# generated " << buf << "\n";
  }
  os << "threshold " << g17(ledger.threshold) << "\n";
  os << "weights " << g17(ledger.weight_f) << " " << g17(ledger.weight_d)
     << "\n";
  os << "columns iter f_all_raw d_measure f_hat d_hat fd\n";
  for (const auto& r : ledger.records) {
    os << r.iteration << " " << g17(r.f_all_raw) << " " << g17(r.d_measure)
       << " " << g17(r.f_hat) << " " << g17(r.d_hat) << " " << g17(r.fd)
       << "\n";
  }
  os << "selected_by_f " << ledger.selection.by_f << "\n";
  os << "selected_by_d " << ledger.selection.by_d << "\n";
  if (ledger.selection.converged)
    os << "optimal " << ledger.selection.optimal << "\n";
  else
    os << "optimal not_converged\n";
  return os.str();
}

ModelFamilyLedger parse_ledger(const std::string& text) {
  ModelFamilyLedger ledger;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "threshold") {
      ls >> ledger.threshold;
    } else if (key == "weights") {
      ls >> ledger.weight_f >> ledger.weight_d;
    } else if (key == "columns") {
      // header only, order is fixed
    } else if (key == "selected_by_f") {
      ls >> ledger.selection.by_f;
    } else if (key == "selected_by_d") {
      ls >> ledger.selection.by_d;
    } else if (key == "optimal") {
      std::string v;
      ls >> v;
      if (v == "not_converged") {
        ledger.selection.converged = false;
        ledger.selection.optimal = -1;
      } else {
        ledger.selection.converged = true;
        ledger.selection.optimal = std::stoi(v);
      }
    } else {
      LedgerRecord r;
      std::istringstream rs(line);
      if (!(rs >> r.iteration >> r.f_all_raw >> r.d_measure >> r.f_hat >>
            r.d_hat >> r.fd))
        fail(Errc::malformed_row,
             "ledger line " + std::to_string(lineno) + ": '" + line + "'");
      ledger.records.push_back(r);
    }
  }
  if (ledger.records.empty())
    fail(Errc::malformed_row, "ledger contains no records");
  return ledger;
}

EnsembleResult ensemble_predict(const std::vector<double>& probs_f,
                                const std::vector<double>& probs_d) {
  if (probs_f.size() != probs_d.size() || probs_f.empty())
    fail(Errc::length_mismatch, "probability vectors differ in length");

  EnsembleResult out;
  out.blended.resize(probs_f.size());
  int best = 0;
  for (size_t j = 0; j < probs_f.size(); ++j) {
    out.blended[j] = 0.5 * probs_f[j] + 0.5 * probs_d[j];
    if (out.blended[j] > out.blended[best]) best = static_cast<int>(j);
  }
  out.score = best + 2;
  return out;
}

}  // namespace photoscore
