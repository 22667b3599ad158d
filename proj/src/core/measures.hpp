#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/eigen_sym.hpp"
#include "core/matrix.hpp"

namespace photoscore {

// Factor decomposition of a node correlation matrix.  Row m of the loadings
// is sqrt(eigenvalue_m) times eigenvector m; factors with eigenvalues at or
// below 1e-10 are excluded.
struct FactorDecomposition {
  Matrix loadings;  // factor_count x node_count
  int factor_count = 0;
  EigenSystem source;
};

FactorDecomposition factor_loadings(const EigenSystem& eig);

// Euclidean distance between the loading columns of two nodes.  With all
// factors retained this equals sqrt(2 - 2r) for correlation input.
double pairwise_factor_distance(const FactorDecomposition& fd, int j1, int j2);

struct DisentanglementResult {
  Matrix pairwise;                   // node x node symmetric distance table
  std::vector<double> per_node_min;  // min distance to any other node
  double d_measure = 0.0;            // mean of per_node_min, in [0, 2]
};

// Full pipeline over a weight matrix (penultimate nodes x final nodes):
// standardize columns, correlate, eigendecompose, load factors, take the
// per-node minimum pairwise distance, average.
DisentanglementResult d_measure(const Matrix& weights);

// ------------------------------------------------------------------ F-measure

struct ClassMetrics {
  int classes = 0;
  std::vector<int64_t> confusion;  // row-major, true class x predicted class
  std::vector<int> labels;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> per_class_f;
  double f_all_raw = 0.0;  // sum of per-class F, in [0, classes]

  int64_t at(int truth, int predicted) const {
    return confusion[static_cast<size_t>(truth) * classes + predicted];
  }
};

// Per-class F1 from a square confusion table.  Classes that are never seen
// and never predicted get F = 0.  Default labels are score classes 2..9 when
// the table is 8x8, indices otherwise.
ClassMetrics f_measures(const std::vector<int64_t>& confusion, int classes,
                        std::vector<int> labels = {});

// ------------------------------------------------------------------ FD scores

struct FdScores {
  std::vector<double> f_hat;  // f_all / max(f_all)
  std::vector<double> d_hat;  // d / max(d)
  std::vector<double> fd;     // 0.5 * f_hat + 0.5 * d_hat
};

FdScores fd_scores(const std::vector<double>& f_all,
                   const std::vector<double>& d);

// ------------------------------------------------------------------- ledger

struct LedgerRecord {
  int iteration = 0;
  std::string model_file;  // snapshot reference, may be empty
  double f_all_raw = 0.0;
  double d_measure = 0.0;
  double f_hat = 0.0;
  double d_hat = 0.0;
  double fd = 0.0;
};

struct Selection {
  int by_f = -1;      // argmax of normalized F
  int by_d = -1;      // argmax of normalized D
  int optimal = -1;   // by_f when its FD clears the threshold, else -1
  bool converged = false;
};

struct ModelFamilyLedger {
  std::vector<LedgerRecord> records;
  double threshold = 0.95;
  double weight_f = 0.5;
  double weight_d = 0.5;
  Selection selection;

  // Recomputes f_hat/d_hat/fd across the family from the raw columns.
  void renormalize();
};

// Picks the family member with maximal normalized F, accepted only when its
// FD exceeds the ledger threshold.  Ties break toward the lowest iteration.
Selection select_optimal(const ModelFamilyLedger& ledger);

// Line-oriented ledger report; parse_ledger reads it back.
std::string serialize_ledger(const ModelFamilyLedger& ledger,
                             bool include_timestamp);
ModelFamilyLedger parse_ledger(const std::string& text);

// ------------------------------------------------------------------ ensemble

struct EnsembleResult {
  int score = 0;  // score label, argmax index + 2
  std::vector<double> blended;
};

// Equal-weight blend of two class-probability vectors; ties break toward the
// lower class.
EnsembleResult ensemble_predict(const std::vector<double>& probs_f,
                                const std::vector<double>& probs_d);

}  // namespace photoscore
