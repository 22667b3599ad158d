#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <photoscore/photoscore.h>

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  const fs::path dir =
      fs::temp_directory_path() / (std::string("photoscore_capi_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct DatasetHandle {
  ps_dataset* ds = nullptr;
  ~DatasetHandle() { ps_dataset_free(ds); }
};

struct ModelHandle {
  ps_model* m = nullptr;
  ~ModelHandle() { ps_model_free(m); }
};

struct LedgerHandle {
  ps_ledger* l = nullptr;
  ~LedgerHandle() { ps_ledger_free(l); }
};

struct Text {
  char* s = nullptr;
  ~Text() { ps_text_free(s); }
  std::string str() const { return s ? s : ""; }
};

ps_synth_spec tiny_spec(uint64_t seed, int total) {
  ps_synth_spec spec;
  ps_synth_spec_default(&spec);
  spec.total = total;
  spec.seed = seed;
  return spec;
}

// A 227x227 image on disk for predict/explain calls.
fs::path sample_image(const fs::path& dir) {
  ps_synth_spec spec = tiny_spec(99, 8);
  double even[8] = {0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125};
  std::memcpy(spec.proportions, even, sizeof even);
  DatasetHandle h;
  REQUIRE(ps_dataset_synth(&spec, &h.ds) == PS_OK);
  REQUIRE(ps_dataset_write(h.ds, dir.string().c_str()) == PS_OK);
  return dir / "images" / "s000000.ppm";
}

}  // namespace

TEST_CASE("version and error slot") {
  const std::string v = ps_version();
  CHECK(!v.empty());
  CHECK(std::string(ps_last_error()).empty());
}

TEST_CASE("synthetic datasets through the C boundary") {
  ps_synth_spec spec;
  ps_synth_spec_default(&spec);
  CHECK(spec.total == 1000);
  CHECK(spec.image_size == 227);
  CHECK(spec.proportions[2] == doctest::Approx(0.45));

  spec = tiny_spec(7, 40);
  DatasetHandle h;
  REQUIRE(ps_dataset_synth(&spec, &h.ds) == PS_OK);
  CHECK(ps_dataset_size(h.ds) == 40);
  int total = 0;
  for (int score = 2; score <= 9; ++score)
    total += ps_dataset_class_count(h.ds, score);
  CHECK(total == 40);
  CHECK(ps_dataset_class_count(h.ds, 4) == 19);  // rounding remainder

  SUBCASE("bad proportions are a config error") {
    spec.proportions[0] = 0.9;
    ps_dataset* bad = nullptr;
    CHECK(ps_dataset_synth(&spec, &bad) == PS_ERROR_CONFIG);
    CHECK(!std::string(ps_last_error()).empty());
  }
}

TEST_CASE("dataset write and load round trip") {
  const fs::path dir = temp_dir("roundtrip");
  ps_synth_spec spec = tiny_spec(3, 24);
  spec.image_size = 32;
  DatasetHandle made;
  REQUIRE(ps_dataset_synth(&spec, &made.ds) == PS_OK);
  REQUIRE(ps_dataset_write(made.ds, dir.string().c_str()) == PS_OK);

  DatasetHandle back;
  REQUIRE(ps_dataset_load((dir / "index.csv").string().c_str(),
                          dir.string().c_str(), 1, &back.ds) == PS_OK);
  CHECK(ps_dataset_size(back.ds) == 24);

  SUBCASE("the image root defaults to the index directory") {
    DatasetHandle defaulted;
    REQUIRE(ps_dataset_load((dir / "index.csv").string().c_str(), nullptr, 1,
                            &defaulted.ds) == PS_OK);
    CHECK(ps_dataset_size(defaulted.ds) == 24);
  }

  SUBCASE("a missing index is an io error") {
    ps_dataset* none = nullptr;
    CHECK(ps_dataset_load((dir / "absent.csv").string().c_str(), nullptr, 0,
                          &none) == PS_ERROR_IO);
    CHECK(!std::string(ps_last_error()).empty());
  }
}

TEST_CASE("model lifecycle") {
  const fs::path dir = temp_dir("model");
  ModelHandle m;
  REQUIRE(ps_model_init(11, &m.m) == PS_OK);

  const fs::path model_path = dir / "net.rsrl";
  REQUIRE(ps_model_save(m.m, model_path.string().c_str()) == PS_OK);
  ModelHandle back;
  REQUIRE(ps_model_load(model_path.string().c_str(), &back.m) == PS_OK);

  const fs::path image = sample_image(dir / "imgs");
  double p1[8], p2[8];
  REQUIRE(ps_model_predict(m.m, image.string().c_str(), p1) == PS_OK);
  REQUIRE(ps_model_predict(back.m, image.string().c_str(), p2) == PS_OK);
  double sum = 0.0;
  for (int c = 0; c < 8; ++c) {
    CHECK(p1[c] == p2[c]);
    sum += p1[c];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("measure and its report") {
    double d = 0.0, dis[8];
    REQUIRE(ps_model_measure(m.m, &d, dis) == PS_OK);
    CHECK(d >= 0.0);
    CHECK(d <= 2.0);
    Text report;
    REQUIRE(ps_model_measure_report(m.m, "net.rsrl", 1, &report.s) == PS_OK);
    CHECK(report.str().find("# photoscore measure v1") == 0);
    CHECK(report.str().find("model net.rsrl") != std::string::npos);
    CHECK(report.str().find("d_measure ") != std::string::npos);
  }

  SUBCASE("loading garbage is an io error") {
    std::ofstream(dir / "junk.rsrl") << "not a model";
    ps_model* none = nullptr;
    CHECK(ps_model_load((dir / "junk.rsrl").string().c_str(), &none) ==
          PS_ERROR_IO);
  }

  SUBCASE("null arguments are config errors") {
    CHECK(ps_model_save(nullptr, model_path.string().c_str()) ==
          PS_ERROR_CONFIG);
    CHECK(ps_model_predict(m.m, nullptr, p1) == PS_ERROR_CONFIG);
  }
}

TEST_CASE("ensemble prediction") {
  const fs::path dir = temp_dir("ensemble");
  const fs::path image = sample_image(dir / "imgs");
  ModelHandle a, b;
  REQUIRE(ps_model_init(21, &a.m) == PS_OK);
  REQUIRE(ps_model_init(21, &b.m) == PS_OK);

  double probs[8];
  REQUIRE(ps_model_predict(a.m, image.string().c_str(), probs) == PS_OK);
  int best = 0;
  for (int c = 1; c < 8; ++c)
    if (probs[c] > probs[best]) best = c;

  int32_t score = 0;
  double blended[8];
  REQUIRE(ps_ensemble_predict(a.m, b.m, image.string().c_str(), &score,
                              blended) == PS_OK);
  CHECK(score == best + 2);
  for (int c = 0; c < 8; ++c)
    CHECK(blended[c] == doctest::Approx(probs[c]).epsilon(1e-12));
}

TEST_CASE("direct d-measure entry point") {
  // two anticorrelated columns sit at the maximal distance
  const double w[8] = {1, -1, -1, 1, 1, -1, -1, 1};
  double d = 0.0, dis[2];
  REQUIRE(ps_d_measure(w, 4, 2, &d, dis) == PS_OK);
  CHECK(d == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(dis[0] == doctest::Approx(2.0).epsilon(1e-9));

  SUBCASE("constant columns are numeric errors") {
    const double flat[6] = {1, 1, 1, 1, 1, 1};
    CHECK(ps_d_measure(flat, 3, 2, &d, nullptr) == PS_ERROR_NUMERIC);
    CHECK(std::string(ps_last_error()).find("ConstantColumn") !=
          std::string::npos);
  }
}

TEST_CASE("rsrl loop, ledger and reports") {
  const fs::path dir = temp_dir("rsrl");
  ps_synth_spec spec = tiny_spec(41, 80);
  DatasetHandle ds;
  REQUIRE(ps_dataset_synth(&spec, &ds.ds) == PS_OK);

  ps_rsrl_config cfg;
  ps_rsrl_config_default(&cfg);
  CHECK(cfg.max_iterations == 29);
  CHECK(cfg.drop_threshold == doctest::Approx(0.5));
  CHECK(cfg.fd_threshold == doctest::Approx(0.95));
  CHECK(cfg.majority_count == 3);

  cfg.max_iterations = 1;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  cfg.seed = 41;

  LedgerHandle ledger;
  REQUIRE(ps_rsrl_run(ds.ds, &cfg, (dir / "run").string().c_str(), 1,
                      &ledger.l) == PS_OK);
  REQUIRE(ps_ledger_size(ledger.l) == 1);

  double f_all = 0, d = 0, f_hat = 0, d_hat = 0, fd = 0;
  REQUIRE(ps_ledger_record(ledger.l, 0, &f_all, &d, &f_hat, &d_hat, &fd) ==
          PS_OK);
  CHECK(f_hat == doctest::Approx(1.0));
  CHECK(d_hat == doctest::Approx(1.0));
  CHECK(fd == doctest::Approx(1.0));
  CHECK(ps_ledger_record(ledger.l, 9, &f_all, &d, &f_hat, &d_hat, &fd) ==
        PS_ERROR_NUMERIC);

  ps_selection sel;
  REQUIRE(ps_ledger_select(ledger.l, -1.0, &sel) == PS_OK);
  CHECK(sel.by_f == 0);
  CHECK(sel.converged == 1);
  CHECK(sel.optimal == 0);

  // an impossible threshold flips the family to not-converged
  REQUIRE(ps_ledger_select(ledger.l, 2.0, &sel) == PS_OK);
  CHECK(sel.converged == 0);
  CHECK(sel.optimal == -1);

  Text report;
  REQUIRE(ps_ledger_select_report(ledger.l, -1.0, 1, &report.s) == PS_OK);
  CHECK(report.str().find("optimal 0") != std::string::npos);

  SUBCASE("artifacts reload through the API") {
    LedgerHandle again;
    REQUIRE(ps_ledger_load((dir / "run" / "ledger.txt").string().c_str(),
                           &again.l) == PS_OK);
    CHECK(ps_ledger_size(again.l) == 1);

    ModelHandle m;
    REQUIRE(ps_model_load((dir / "run" / "model_000.rsrl").string().c_str(),
                          &m.m) == PS_OK);
    Text eval;
    REQUIRE(ps_model_evaluate(m.m, ds.ds, 0, 1, &eval.s) == PS_OK);
    CHECK(eval.str().find("# photoscore eval v1") == 0);
    CHECK(eval.str().find("mode perclass") != std::string::npos);
    CHECK(eval.str().find("f_all ") != std::string::npos);

    Text binary;
    REQUIRE(ps_model_evaluate(m.m, ds.ds, 1, 1, &binary.s) == PS_OK);
    CHECK(binary.str().find("mode binary") != std::string::npos);
    CHECK(binary.str().find("low") != std::string::npos);
    CHECK(binary.str().find("high") != std::string::npos);
  }

  SUBCASE("bad config is rejected before any work") {
    cfg.split_ratio = 1.5;
    ps_ledger* none = nullptr;
    CHECK(ps_rsrl_run(ds.ds, &cfg, nullptr, 1, &none) == PS_ERROR_CONFIG);
  }
}

TEST_CASE("explain writes both views") {
  const fs::path dir = temp_dir("explain");
  const fs::path image = sample_image(dir / "imgs");
  ModelHandle m;
  REQUIRE(ps_model_init(61, &m.m) == PS_OK);
  REQUIRE(ps_model_explain(m.m, image.string().c_str(),
                           (dir / "out").string().c_str()) == PS_OK);
  CHECK(fs::exists(dir / "out" / "s000000.ffp.ppm"));
  CHECK(fs::exists(dir / "out" / "s000000.air.ppm"));
}
