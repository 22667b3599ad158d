#include "core/rsrl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "core/error.hpp"
#include "core/model_io.hpp"
#include "core/report.hpp"

namespace photoscore {

namespace {

constexpr int kInferChunk = 32;

// Inference over a sample list in fixed-size chunks; hands each traced batch
// to the sink as (chunk start, trace).
template <typename Sink>
void infer_over(const TypeCNetwork& net, const Dataset& ds,
                std::span<const int> indices, Sink&& sink) {
  auto& mutable_net = const_cast<TypeCNetwork&>(net);
  ForwardTrace trace;
  for (size_t start = 0; start < indices.size(); start += kInferChunk) {
    const size_t stop = std::min(indices.size(), start + kInferChunk);
    std::vector<const Image*> batch;
    batch.reserve(stop - start);
    for (size_t k = start; k < stop; ++k)
      batch.push_back(&ds.samples[indices[k]].image);
    forward(mutable_net, batch, Mode::infer, trace);
    sink(start, trace);
  }
}

std::string model_file_name(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "model_%03d.rsrl", iteration);
  return buf;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) fail(Errc::io_error, "short write to " + path.string());
}

}  // namespace

void RsrlConfig::validate() const {
  if (max_iterations < 1 || max_iterations > 1000)
    fail(Errc::bad_config, "max_iterations must be in [1, 1000]");
  std::set<int> seen;
  for (int c : majority_classes) {
    if (c < kScoreMin || c > kScoreMax)
      fail(Errc::bad_config,
           "majority class " + std::to_string(c) + " outside scores 2..9");
    if (!seen.insert(c).second)
      fail(Errc::bad_config,
           "majority class " + std::to_string(c) + " listed twice");
  }
  if (drop_threshold < 0.0 || drop_threshold >= 1.0)
    fail(Errc::bad_config, "drop_threshold must be in [0, 1)");
  if (drop_quantile < 0.0 || drop_quantile >= 1.0)
    fail(Errc::bad_config, "drop_quantile must be in [0, 1)");
  if (fd_threshold < 0.0)
    fail(Errc::bad_config, "fd_threshold must be nonnegative");
  if (split_ratio <= 0.0 || split_ratio >= 1.0)
    fail(Errc::bad_config, "split_ratio must be in (0, 1)");
  if (train.learning_rate <= 0.0)
    fail(Errc::bad_config, "learning_rate must be positive");
  if (train.batch_size < 2)
    fail(Errc::bad_config, "batch_size must be at least 2");
  if (train.epochs < 1) fail(Errc::bad_config, "epochs must be at least 1");
}

std::vector<SampleRecord> per_sample_likelihood(const TypeCNetwork& net,
                                                const Dataset& ds,
                                                std::span<const int> indices) {
  std::vector<SampleRecord> records(indices.size());
  infer_over(net, ds, indices,
             [&](size_t start, const ForwardTrace& trace) {
               for (int r = 0; r < trace.probs.rows(); ++r) {
                 const int di = indices[start + r];
                 SampleRecord& rec = records[start + r];
                 rec.dataset_index = di;
                 rec.id = ds.samples[di].id;
                 rec.score = ds.samples[di].score;
                 rec.likelihood = trace.probs(r, rec.score - kScoreMin);
               }
             });
  return records;
}

DropOutcome drop_samples(const std::vector<SampleRecord>& records,
                         const RsrlConfig& cfg) {
  const size_t n = records.size();
  std::vector<bool> drop(n, false);

  for (int cls : cfg.majority_classes) {
    std::vector<size_t> members;
    for (size_t i = 0; i < n; ++i)
      if (records[i].score == cls) members.push_back(i);
    if (members.empty()) continue;

    if (cfg.drop_rule == RsrlConfig::DropRule::threshold) {
      std::vector<size_t> victims;
      for (size_t i : members)
        if (records[i].likelihood < cfg.drop_threshold) victims.push_back(i);
      if (victims.size() == members.size()) {
        // Retention guard: the class must not empty out; spare the most
        // confident sample.
        size_t keep = members[0];
        for (size_t i : members)
          if (records[i].likelihood > records[keep].likelihood) keep = i;
        std::erase(victims, keep);
      }
      for (size_t i : victims) drop[i] = true;
    } else {
      size_t k = static_cast<size_t>(
          std::floor(cfg.drop_quantile * static_cast<double>(members.size())));
      k = std::min(k, members.size() - 1);
      std::stable_sort(members.begin(), members.end(),
                       [&](size_t a, size_t b) {
                         return records[a].likelihood < records[b].likelihood;
                       });
      for (size_t i = 0; i < k; ++i) drop[members[i]] = true;
    }
  }

  DropOutcome out;
  for (size_t i = 0; i < n; ++i) {
    if (drop[i]) {
      SampleRecord rec = records[i];
      rec.dropped = true;
      out.dropped.push_back(std::move(rec));
    } else {
      out.retained.push_back(records[i].dataset_index);
    }
  }
  return out;
}

ClassMetrics confusion_metrics(const TypeCNetwork& net, const Dataset& ds,
                               std::span<const int> indices) {
  std::vector<int64_t> confusion(
      static_cast<size_t>(kScoreClasses) * kScoreClasses, 0);
  infer_over(net, ds, indices,
             [&](size_t start, const ForwardTrace& trace) {
               for (int r = 0; r < trace.probs.rows(); ++r) {
                 const int truth =
                     ds.samples[indices[start + r]].score - kScoreMin;
                 int pred = 0;
                 for (int j = 1; j < kScoreClasses; ++j)
                   if (trace.probs(r, j) > trace.probs(r, pred)) pred = j;
                 ++confusion[static_cast<size_t>(truth) * kScoreClasses +
                             pred];
               }
             });
  return f_measures(confusion, kScoreClasses);
}

double minority_mean_f(const ClassMetrics& metrics,
                       const std::vector<int>& majority_classes) {
  double sum = 0.0;
  int count = 0;
  for (int j = 0; j < metrics.classes; ++j) {
    if (std::find(majority_classes.begin(), majority_classes.end(),
                  metrics.labels[j]) != majority_classes.end())
      continue;
    sum += metrics.per_class_f[j];
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

RsrlResult rsrl_run(const Dataset& ds, const RsrlConfig& cfg) {
  cfg.validate();
  if (ds.classes_represented() < 2)
    fail(Errc::bad_config, "need at least two represented classes");

  RsrlResult result;
  result.split = split(ds, cfg.split_ratio, cfg.seed);
  result.ledger.threshold = cfg.fd_threshold;

  std::vector<int> train_idx = result.split.train;

  TypeCNetwork net = TypeCNetwork::init(cfg.seed);
  net.set_zerocenter(ds, train_idx);

  SgdOptimizer opt(net, cfg.train);
  Rng train_rng(mix_seed(cfg.seed, 0x7e41));

  for (int l = 0; l < cfg.max_iterations; ++l) {
    double loss = 0.0;
    for (int e = 0; e < cfg.train.epochs; ++e)
      loss = train_epoch(net, ds, train_idx, cfg.train, opt, train_rng);

    IterationMetrics im;
    im.iteration = l;
    im.train_size = static_cast<int>(train_idx.size());
    im.train_loss = loss;
    im.validation = confusion_metrics(net, ds, result.split.validation);
    const DisentanglementResult dis = d_measure(net.final_fc_weights());

    LedgerRecord rec;
    rec.iteration = l;
    rec.model_file = model_file_name(l);
    rec.f_all_raw = im.validation.f_all_raw;
    rec.d_measure = dis.d_measure;
    result.ledger.records.push_back(rec);
    result.ledger.renormalize();

    result.metrics.push_back(std::move(im));
    result.models.push_back(net);

    // Online stop on the family-so-far FD.  A family of one normalizes to
    // FD = 1 by construction, so the check only means something once a
    // second model exists.
    if (l >= 1 && result.ledger.records.back().fd > cfg.fd_threshold) {
      result.early_stopped = true;
      break;
    }
    if (l + 1 == cfg.max_iterations) break;

    auto records = per_sample_likelihood(net, ds, train_idx);
    DropOutcome outcome = drop_samples(records, cfg);
    for (auto& rec_dropped : outcome.dropped) {
      rec_dropped.drop_iteration = l;
      result.drop_log.push_back(rec_dropped);
    }
    train_idx = std::move(outcome.retained);
  }

  result.ledger.selection = select_optimal(result.ledger);
  return result;
}

std::string serialize_drop_log(const std::vector<SampleRecord>& drops) {
  std::ostringstream os;
  os << "# photoscore drop log v1\n";
  os << "columns iteration id score likelihood\n";
  for (const auto& rec : drops) {
    os << rec.drop_iteration << " " << rec.id << " " << rec.score << " "
       << g17(rec.likelihood) << "\n";
  }
  return os.str();
}

void write_rsrl_artifacts(const RsrlResult& result,
                          const std::filesystem::path& out_dir,
                          bool include_timestamp) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(Errc::io_error, "cannot create " + out_dir.string());

  write_text_file(out_dir / "ledger.txt",
                  serialize_ledger(result.ledger, include_timestamp));
  write_text_file(out_dir / "drop_log.txt",
                  serialize_drop_log(result.drop_log));
  for (size_t i = 0; i < result.models.size(); ++i)
    save_model(result.models[i],
               out_dir / result.ledger.records[i].model_file);
}

}  // namespace photoscore
