#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/measures.hpp"
#include "core/nn.hpp"

namespace photoscore {

struct RsrlConfig {
  enum class DropRule { threshold, quantile };

  int max_iterations = 29;
  std::vector<int> majority_classes = {3, 4, 5};  // score labels
  DropRule drop_rule = DropRule::threshold;
  double drop_threshold = 0.5;  // drop when true-class probability is below
  double drop_quantile = 0.2;   // or drop the bottom fraction of each class
  double fd_threshold = 0.95;
  double split_ratio = 0.8;
  uint64_t seed = 0;
  TrainConfig train;

  void validate() const;
};

struct SampleRecord {
  int dataset_index = -1;
  std::string id;
  int score = 0;
  double likelihood = 0.0;  // predicted probability of the true class
  bool dropped = false;
  int drop_iteration = -1;
};

// True-class probability of every listed sample under the model, inference
// mode, in list order.
std::vector<SampleRecord> per_sample_likelihood(const TypeCNetwork& net,
                                                const Dataset& ds,
                                                std::span<const int> indices);

struct DropOutcome {
  std::vector<int> retained;          // dataset indices, original order
  std::vector<SampleRecord> dropped;  // in original order
};

// Applies the configured drop rule to majority-class samples only.  Every
// class that enters with at least one sample keeps at least one.
DropOutcome drop_samples(const std::vector<SampleRecord>& records,
                         const RsrlConfig& cfg);

struct IterationMetrics {
  int iteration = 0;
  int train_size = 0;
  double train_loss = 0.0;  // mean loss of the final epoch
  ClassMetrics validation;
};

struct RsrlResult {
  ModelFamilyLedger ledger;
  std::vector<TypeCNetwork> models;  // snapshot per iteration
  std::vector<IterationMetrics> metrics;
  std::vector<SampleRecord> drop_log;
  SplitView split;
  bool early_stopped = false;
};

// The self-revising loop: train, measure (validation F_all + weight-matrix
// disentanglement), prune low-likelihood majority samples, warm-start again.
// Stops when the newest FD beats the threshold under family-so-far
// normalization (checked from the second iteration on) or after
// max_iterations; the returned ledger carries the final selection.
RsrlResult rsrl_run(const Dataset& ds, const RsrlConfig& cfg);

// Validation confusion of a trained model over the listed samples.
ClassMetrics confusion_metrics(const TypeCNetwork& net, const Dataset& ds,
                               std::span<const int> indices);

// Mean per-class F over the classes not listed as majority.
double minority_mean_f(const ClassMetrics& metrics,
                       const std::vector<int>& majority_classes);

// One line per dropped sample: iteration, id, score, likelihood.
std::string serialize_drop_log(const std::vector<SampleRecord>& drops);

// Writes ledger.txt, drop_log.txt and model_<iter>.rsrl files.
void write_rsrl_artifacts(const RsrlResult& result,
                          const std::filesystem::path& out_dir,
                          bool include_timestamp);

}  // namespace photoscore
