#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "core/error.hpp"
#include "core/model_io.hpp"
#include "core/rsrl.hpp"
#include "core/synth.hpp"

using namespace photoscore;
namespace fs = std::filesystem;

namespace {

Dataset small_corpus(uint64_t seed, int total = 80) {
  SynthSpec spec;
  spec.total = total;
  spec.seed = seed;
  return synth_dataset(spec);
}

RsrlConfig quick_config(uint64_t seed) {
  RsrlConfig cfg;
  cfg.seed = seed;
  cfg.max_iterations = 2;
  cfg.train.epochs = 1;
  cfg.train.batch_size = 16;
  return cfg;
}

SampleRecord rec(int index, int score, double likelihood) {
  SampleRecord r;
  r.dataset_index = index;
  r.id = "r" + std::to_string(index);
  r.score = score;
  r.likelihood = likelihood;
  return r;
}

}  // namespace

TEST_CASE("per-sample likelihood is the true-class probability") {
  const Dataset ds = small_corpus(31, 24);
  TypeCNetwork net = TypeCNetwork::init(31);
  std::vector<int> idx = {0, 3, 7};
  const auto records = per_sample_likelihood(net, ds, idx);
  REQUIRE(records.size() == 3);
  for (size_t k = 0; k < idx.size(); ++k) {
    const Sample& s = ds.samples[idx[k]];
    CHECK(records[k].dataset_index == idx[k]);
    CHECK(records[k].id == s.id);
    CHECK(records[k].score == s.score);
    const auto probs = predict(net, s.image);
    CHECK(records[k].likelihood ==
          doctest::Approx(probs[s.score - kScoreMin]).epsilon(1e-12));
    CHECK_FALSE(records[k].dropped);
  }
}

TEST_CASE("threshold drop rule") {
  RsrlConfig cfg;  // majority {3,4,5}, threshold 0.5

  SUBCASE("majority below the threshold goes, everything else stays") {
    const std::vector<SampleRecord> records = {
        rec(0, 4, 0.1),   // majority, unlikely -> dropped
        rec(1, 9, 0.1),   // minority, unlikely -> kept
        rec(2, 4, 0.9),   // majority, likely -> kept
        rec(3, 3, 0.49),  // majority, unlikely, class has a survivor -> dropped
        rec(4, 3, 0.8),
        rec(5, 5, 0.5),   // exactly at the threshold -> kept
    };
    const DropOutcome out = drop_samples(records, cfg);
    CHECK(out.retained == std::vector<int>{1, 2, 4, 5});
    REQUIRE(out.dropped.size() == 2);
    CHECK(out.dropped[0].dataset_index == 0);
    CHECK(out.dropped[1].dataset_index == 3);
    for (const auto& d : out.dropped) CHECK(d.dropped);
  }

  SUBCASE("a class never empties out") {
    const std::vector<SampleRecord> records = {
        rec(0, 4, 0.10),
        rec(1, 4, 0.30),  // best of a doomed class -> spared
        rec(2, 4, 0.20),
        rec(3, 6, 0.9),
    };
    const DropOutcome out = drop_samples(records, cfg);
    CHECK(out.retained == std::vector<int>{1, 3});
    CHECK(out.dropped.size() == 2);
  }

  SUBCASE("a zero threshold drops nothing") {
    cfg.drop_threshold = 0.0;
    const std::vector<SampleRecord> records = {rec(0, 4, 0.0),
                                               rec(1, 4, 0.2)};
    const DropOutcome out = drop_samples(records, cfg);
    CHECK(out.retained == std::vector<int>{0, 1});
    CHECK(out.dropped.empty());
  }
}

TEST_CASE("quantile drop rule") {
  RsrlConfig cfg;
  cfg.drop_rule = RsrlConfig::DropRule::quantile;
  cfg.drop_quantile = 0.5;

  const std::vector<SampleRecord> records = {
      rec(0, 4, 0.9), rec(1, 4, 0.1), rec(2, 4, 0.5),
      rec(3, 4, 0.3), rec(4, 4, 0.7), rec(5, 2, 0.01),  // minority survives
  };
  const DropOutcome out = drop_samples(records, cfg);
  // floor(0.5 * 5) = 2 weakest of class 4 go
  CHECK(out.retained == std::vector<int>{0, 2, 4, 5});
  REQUIRE(out.dropped.size() == 2);
  CHECK(out.dropped[0].dataset_index == 1);
  CHECK(out.dropped[1].dataset_index == 3);

  SUBCASE("an aggressive quantile still keeps one per class") {
    cfg.drop_quantile = 0.99;
    const std::vector<SampleRecord> three = {rec(0, 4, 0.3), rec(1, 4, 0.2),
                                             rec(2, 4, 0.1)};
    const DropOutcome kept = drop_samples(three, cfg);
    CHECK(kept.retained == std::vector<int>{0});
  }
}

TEST_CASE("configuration validation") {
  RsrlConfig cfg;
  cfg.validate();  // defaults are fine

  auto expect_bad = [](RsrlConfig broken) {
    CHECK_THROWS_WITH_AS(broken.validate(), doctest::Contains("BadConfig"),
                         Error);
  };

  RsrlConfig c = cfg;
  c.max_iterations = 0;
  expect_bad(c);
  c = cfg;
  c.max_iterations = 1001;
  expect_bad(c);
  c = cfg;
  c.drop_threshold = 1.0;
  expect_bad(c);
  c = cfg;
  c.drop_threshold = -0.1;
  expect_bad(c);
  c = cfg;
  c.majority_classes = {3, 3};
  expect_bad(c);
  c = cfg;
  c.majority_classes = {10};
  expect_bad(c);
  c = cfg;
  c.split_ratio = 1.0;
  expect_bad(c);
  c = cfg;
  c.train.learning_rate = 0.0;
  expect_bad(c);
  c = cfg;
  c.train.batch_size = 1;
  expect_bad(c);
  c = cfg;
  c.train.epochs = 0;
  expect_bad(c);
}

TEST_CASE("minority mean F averages the light classes") {
  ClassMetrics m;
  m.classes = 8;
  m.labels = {2, 3, 4, 5, 6, 7, 8, 9};
  m.per_class_f = {1.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.0};
  CHECK(minority_mean_f(m, {3, 4, 5}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(minority_mean_f(m, {}) ==
        doctest::Approx(2.5 / 8.0).epsilon(1e-12));
}

TEST_CASE("confusion metrics cover every listed sample") {
  const Dataset ds = small_corpus(17, 40);
  TypeCNetwork net = TypeCNetwork::init(17);
  std::vector<int> idx(ds.samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  const ClassMetrics m = confusion_metrics(net, ds, idx);
  CHECK(m.classes == 8);
  CHECK(m.labels.front() == 2);
  int64_t total = 0;
  for (int64_t v : m.confusion) {
    CHECK(v >= 0);
    total += v;
  }
  CHECK(total == static_cast<int64_t>(idx.size()));
  // row sums follow the class histogram
  const auto h = ds.histogram();
  for (int t = 0; t < 8; ++t) {
    int64_t row = 0;
    for (int p = 0; p < 8; ++p) row += m.at(t, p);
    CHECK(row == h[t]);
  }
}

TEST_CASE("revision loop produces a coherent family") {
  const Dataset ds = small_corpus(51);
  RsrlConfig cfg = quick_config(51);
  const RsrlResult result = rsrl_run(ds, cfg);

  const size_t n = result.ledger.records.size();
  REQUIRE(n >= 1);
  REQUIRE(n <= 2);
  CHECK(result.models.size() == n);
  CHECK(result.metrics.size() == n);

  for (size_t l = 0; l < n; ++l) {
    CHECK(result.ledger.records[l].iteration == static_cast<int>(l));
    CHECK(result.metrics[l].train_size > 0);
    CHECK(result.ledger.records[l].fd >= 0.0);
    CHECK(result.ledger.records[l].fd <= 1.0);
    CHECK_FALSE(result.ledger.records[l].model_file.empty());
  }
  for (size_t l = 1; l < n; ++l)
    CHECK(result.metrics[l].train_size <= result.metrics[l - 1].train_size);

  // drops stay inside the majority classes and below the threshold
  for (const auto& d : result.drop_log) {
    CHECK((d.score == 3 || d.score == 4 || d.score == 5));
    CHECK(d.likelihood < cfg.drop_threshold);
    CHECK(d.dropped);
    CHECK(d.drop_iteration >= 0);
  }

  // the selection is consistent with the scores
  const Selection& sel = result.ledger.selection;
  REQUIRE(sel.by_f >= 0);
  for (size_t l = 0; l < n; ++l)
    CHECK(result.ledger.records[sel.by_f].f_hat >=
          result.ledger.records[l].f_hat);
  if (sel.converged) CHECK(sel.optimal == sel.by_f);

  SUBCASE("identical configuration reproduces everything bitwise") {
    const RsrlResult again = rsrl_run(ds, cfg);
    CHECK(serialize_ledger(result.ledger, false) ==
          serialize_ledger(again.ledger, false));
    CHECK(serialize_drop_log(result.drop_log) ==
          serialize_drop_log(again.drop_log));
    REQUIRE(again.models.size() == n);
    for (size_t l = 0; l < n; ++l)
      CHECK(models_equal(result.models[l], again.models[l]));
  }
}

TEST_CASE("null pruning keeps the training set intact") {
  const Dataset ds = small_corpus(52);
  RsrlConfig cfg = quick_config(52);
  cfg.drop_threshold = 0.0;
  const RsrlResult result = rsrl_run(ds, cfg);
  CHECK(result.drop_log.empty());
  for (const auto& m : result.metrics)
    CHECK(m.train_size == result.metrics.front().train_size);
}

TEST_CASE("a single-iteration family trivially converges") {
  const Dataset ds = small_corpus(53);
  RsrlConfig cfg = quick_config(53);
  cfg.max_iterations = 1;
  const RsrlResult result = rsrl_run(ds, cfg);
  REQUIRE(result.ledger.records.size() == 1);
  CHECK(result.ledger.records[0].fd == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(result.ledger.selection.by_f == 0);
  CHECK(result.ledger.selection.converged);
  CHECK(result.ledger.selection.optimal == 0);
  CHECK_FALSE(result.early_stopped);
}

TEST_CASE("a zero threshold stops the loop at the second iteration") {
  const Dataset ds = small_corpus(54);
  RsrlConfig cfg = quick_config(54);
  cfg.max_iterations = 5;
  cfg.fd_threshold = 0.0;
  const RsrlResult result = rsrl_run(ds, cfg);
  CHECK(result.ledger.records.size() == 2);
  CHECK(result.early_stopped);
}

TEST_CASE("artifacts land on disk and read back") {
  const Dataset ds = small_corpus(55);
  RsrlConfig cfg = quick_config(55);
  cfg.max_iterations = 1;
  const RsrlResult result = rsrl_run(ds, cfg);

  const fs::path dir = fs::temp_directory_path() / "photoscore_artifacts";
  fs::remove_all(dir);
  write_rsrl_artifacts(result, dir, false);

  std::ifstream ledger_in(dir / "ledger.txt");
  const std::string ledger_text((std::istreambuf_iterator<char>(ledger_in)),
                                std::istreambuf_iterator<char>());
  const ModelFamilyLedger parsed = parse_ledger(ledger_text);
  REQUIRE(parsed.records.size() == result.ledger.records.size());
  CHECK(parsed.records[0].f_all_raw == result.ledger.records[0].f_all_raw);
  CHECK(parsed.records[0].d_measure == result.ledger.records[0].d_measure);

  CHECK(fs::exists(dir / "drop_log.txt"));
  REQUIRE(!result.ledger.records[0].model_file.empty());
  const TypeCNetwork back =
      load_model(dir / result.ledger.records[0].model_file);
  CHECK(models_equal(back, result.models[0]));
}

TEST_CASE("the loop needs at least two classes") {
  SynthSpec spec;
  spec.total = 8;
  spec.proportions = {0, 0, 1.0, 0, 0, 0, 0, 0};
  spec.seed = 5;
  const Dataset ds = synth_dataset(spec);
  RsrlConfig cfg = quick_config(5);
  CHECK_THROWS_AS(rsrl_run(ds, cfg), Error);
}
