#include "photoscore/photoscore.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/image.hpp"
#include "core/measures.hpp"
#include "core/model_io.hpp"
#include "core/nn.hpp"
#include "core/report.hpp"
#include "core/rsrl.hpp"
#include "core/saliency.hpp"
#include "core/synth.hpp"

struct ps_dataset {
  photoscore::Dataset ds;
};

struct ps_model {
  photoscore::TypeCNetwork net;
};

struct ps_ledger {
  photoscore::ModelFamilyLedger ledger;
};

namespace {

thread_local std::string t_last_error;

template <typename F>
ps_status guarded(F&& body) {
  try {
    body();
    t_last_error.clear();
    return PS_OK;
  } catch (const photoscore::Error& e) {
    t_last_error = e.what();
    switch (e.family()) {
      case photoscore::ErrorFamily::config:
        return PS_ERROR_CONFIG;
      case photoscore::ErrorFamily::io:
        return PS_ERROR_IO;
      case photoscore::ErrorFamily::numeric:
        return PS_ERROR_NUMERIC;
      default:
        return PS_ERROR;
    }
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return PS_ERROR;
  } catch (...) {
    t_last_error = "unknown error";
    return PS_ERROR;
  }
}

void require(bool ok, const char* what) {
  if (!ok) photoscore::fail(photoscore::Errc::bad_config, what);
}

char* dup_text(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

// Network input must be 227x227; larger or smaller images are fitted.
photoscore::Image load_input_image(const char* path) {
  photoscore::Image img = photoscore::read_ppm(path);
  if (img.width != photoscore::kInputEdge ||
      img.height != photoscore::kInputEdge)
    img = photoscore::fit_to_square(img, photoscore::kInputEdge);
  return img;
}

photoscore::ModelFamilyLedger reselected(
    const photoscore::ModelFamilyLedger& in, double threshold) {
  photoscore::ModelFamilyLedger ledger = in;
  if (threshold >= 0.0) ledger.threshold = threshold;
  ledger.renormalize();
  ledger.selection = photoscore::select_optimal(ledger);
  return ledger;
}

}  // namespace

extern "C" {

const char* ps_version(void) { return "1.0.0"; }

const char* ps_last_error(void) { return t_last_error.c_str(); }

void ps_text_free(char* text) { std::free(text); }

/* ---------------------------------------------------------------- datasets */

void ps_synth_spec_default(ps_synth_spec* spec) {
  if (!spec) return;
  const photoscore::SynthSpec d;
  spec->total = d.total;
  for (int i = 0; i < 8; ++i) spec->proportions[i] = d.proportions[i];
  spec->seed = d.seed;
  spec->image_size = d.image_size;
}

ps_status ps_dataset_synth(const ps_synth_spec* spec, ps_dataset** out) {
  return guarded([&] {
    require(spec && out, "null argument");
    photoscore::SynthSpec s;
    s.total = spec->total;
    for (int i = 0; i < 8; ++i) s.proportions[i] = spec->proportions[i];
    s.seed = spec->seed;
    s.image_size = spec->image_size;
    auto* handle = new ps_dataset{photoscore::synth_dataset(s)};
    *out = handle;
  });
}

ps_status ps_dataset_load(const char* index_path, const char* image_root,
                          int resize_policy, ps_dataset** out) {
  return guarded([&] {
    require(index_path && out, "null argument");
    const std::filesystem::path index(index_path);
    const std::filesystem::path root =
        image_root ? std::filesystem::path(image_root) : index.parent_path();
    const auto policy = resize_policy ? photoscore::SizePolicy::fit
                                      : photoscore::SizePolicy::reject;
    auto* handle =
        new ps_dataset{photoscore::load_dataset(index, root, policy)};
    *out = handle;
  });
}

ps_status ps_dataset_write(const ps_dataset* ds, const char* out_dir) {
  return guarded([&] {
    require(ds && out_dir, "null argument");
    photoscore::write_dataset(ds->ds, out_dir);
  });
}

int32_t ps_dataset_size(const ps_dataset* ds) {
  return ds ? static_cast<int32_t>(ds->ds.samples.size()) : 0;
}

int32_t ps_dataset_class_count(const ps_dataset* ds, int32_t score) {
  if (!ds || score < photoscore::kScoreMin || score > photoscore::kScoreMax)
    return 0;
  return ds->ds.histogram()[score - photoscore::kScoreMin];
}

void ps_dataset_free(ps_dataset* ds) { delete ds; }

/* ------------------------------------------------------------------ models */

ps_status ps_model_init(uint64_t seed, ps_model** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = new ps_model{photoscore::TypeCNetwork::init(seed)};
  });
}

ps_status ps_model_load(const char* path, ps_model** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new ps_model{photoscore::load_model(path)};
  });
}

ps_status ps_model_save(const ps_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "null argument");
    photoscore::save_model(model->net, path);
  });
}

void ps_model_free(ps_model* model) { delete model; }

ps_status ps_model_predict(const ps_model* model, const char* image_path,
                           double probs[8]) {
  return guarded([&] {
    require(model && image_path && probs, "null argument");
    const photoscore::Image img = load_input_image(image_path);
    const auto p = photoscore::predict(model->net, img);
    for (int j = 0; j < 8; ++j) probs[j] = p[j];
  });
}

ps_status ps_model_measure(const ps_model* model, double* d_measure,
                           double dis_min[8]) {
  return guarded([&] {
    require(model != nullptr, "null argument");
    const auto res = photoscore::d_measure(model->net.final_fc_weights());
    if (d_measure) *d_measure = res.d_measure;
    if (dis_min)
      for (int j = 0; j < 8; ++j) dis_min[j] = res.per_node_min[j];
  });
}

ps_status ps_model_measure_report(const ps_model* model, const char* model_name,
                                  int no_timestamp, char** out_text) {
  return guarded([&] {
    require(model && out_text, "null argument");
    const auto res = photoscore::d_measure(model->net.final_fc_weights());
    const std::string name = model_name ? model_name : "model";
    *out_text = dup_text(
        photoscore::measure_report(name, res, no_timestamp == 0));
  });
}

ps_status ps_model_explain(const ps_model* model, const char* image_path,
                           const char* out_dir) {
  return guarded([&] {
    require(model && image_path && out_dir, "null argument");
    const photoscore::Image img = photoscore::read_ppm(image_path);
    const auto output = photoscore::explain(model->net, img);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
      photoscore::fail(photoscore::Errc::io_error,
                       "cannot create " + std::string(out_dir));
    const std::string stem = std::filesystem::path(image_path).stem().string();
    photoscore::write_ppm(output.ffp, std::filesystem::path(out_dir) /
                                          (stem + ".ffp.ppm"));
    photoscore::write_ppm(output.air, std::filesystem::path(out_dir) /
                                          (stem + ".air.ppm"));
  });
}

ps_status ps_model_evaluate(const ps_model* model, const ps_dataset* ds,
                            int binary, int no_timestamp, char** out_report) {
  return guarded([&] {
    require(model && ds && out_report, "null argument");
    require(!ds->ds.samples.empty(), "empty dataset");
    std::vector<int> all(ds->ds.samples.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);

    photoscore::ClassMetrics metrics =
        photoscore::confusion_metrics(model->net, ds->ds, all);
    if (binary) {
      // Predicted and true scores below 5 fall in the low class.
      std::vector<int64_t> two(4, 0);
      for (int t = 0; t < metrics.classes; ++t)
        for (int p = 0; p < metrics.classes; ++p) {
          const int tl = metrics.labels[t] < 5 ? 0 : 1;
          const int pl = metrics.labels[p] < 5 ? 0 : 1;
          two[static_cast<size_t>(tl) * 2 + pl] += metrics.at(t, p);
        }
      metrics = photoscore::f_measures(two, 2, {0, 1});
    }
    *out_report =
        dup_text(photoscore::eval_report(metrics, binary != 0,
                                         no_timestamp == 0));
  });
}

ps_status ps_d_measure(const double* weights, int32_t rows, int32_t cols,
                       double* d_out, double* dis_min_out) {
  return guarded([&] {
    require(weights && d_out, "null argument");
    require(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
    photoscore::Matrix w(rows, cols);
    std::memcpy(w.data(), weights,
                sizeof(double) * static_cast<size_t>(rows) * cols);
    const auto res = photoscore::d_measure(w);
    *d_out = res.d_measure;
    if (dis_min_out)
      for (int32_t j = 0; j < cols; ++j) dis_min_out[j] = res.per_node_min[j];
  });
}

/* -------------------------------------------------------------------- rsrl */

void ps_rsrl_config_default(ps_rsrl_config* cfg) {
  if (!cfg) return;
  const photoscore::RsrlConfig d;
  cfg->max_iterations = d.max_iterations;
  cfg->majority_count = static_cast<int32_t>(d.majority_classes.size());
  for (size_t i = 0; i < d.majority_classes.size(); ++i)
    cfg->majority_classes[i] = d.majority_classes[i];
  cfg->drop_rule = d.drop_rule == photoscore::RsrlConfig::DropRule::threshold
                       ? 0
                       : 1;
  cfg->drop_threshold = d.drop_threshold;
  cfg->drop_quantile = d.drop_quantile;
  cfg->fd_threshold = d.fd_threshold;
  cfg->split_ratio = d.split_ratio;
  cfg->seed = d.seed;
  cfg->learning_rate = d.train.learning_rate;
  cfg->momentum = d.train.momentum;
  cfg->weight_decay = d.train.weight_decay;
  cfg->batch_size = d.train.batch_size;
  cfg->epochs = d.train.epochs;
}

ps_status ps_rsrl_run(const ps_dataset* ds, const ps_rsrl_config* cfg,
                      const char* out_dir, int no_timestamp, ps_ledger** out) {
  return guarded([&] {
    require(ds && cfg && out, "null argument");
    require(cfg->majority_count >= 0 && cfg->majority_count <= 8,
            "majority_count must be in [0, 8]");
    photoscore::RsrlConfig rc;
    rc.max_iterations = cfg->max_iterations;
    rc.majority_classes.assign(cfg->majority_classes,
                               cfg->majority_classes + cfg->majority_count);
    rc.drop_rule = cfg->drop_rule == 0
                       ? photoscore::RsrlConfig::DropRule::threshold
                       : photoscore::RsrlConfig::DropRule::quantile;
    rc.drop_threshold = cfg->drop_threshold;
    rc.drop_quantile = cfg->drop_quantile;
    rc.fd_threshold = cfg->fd_threshold;
    rc.split_ratio = cfg->split_ratio;
    rc.seed = cfg->seed;
    rc.train.learning_rate = cfg->learning_rate;
    rc.train.momentum = cfg->momentum;
    rc.train.weight_decay = cfg->weight_decay;
    rc.train.batch_size = cfg->batch_size;
    rc.train.epochs = cfg->epochs;

    photoscore::RsrlResult result = photoscore::rsrl_run(ds->ds, rc);
    if (out_dir)
      photoscore::write_rsrl_artifacts(result, out_dir, no_timestamp == 0);
    *out = new ps_ledger{std::move(result.ledger)};
  });
}

ps_status ps_ledger_load(const char* path, ps_ledger** out) {
  return guarded([&] {
    require(path && out, "null argument");
    std::ifstream in(path, std::ios::binary);
    if (!in)
      photoscore::fail(photoscore::Errc::io_error,
                       "cannot open " + std::string(path));
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    *out = new ps_ledger{photoscore::parse_ledger(text)};
  });
}

int32_t ps_ledger_size(const ps_ledger* ledger) {
  return ledger ? static_cast<int32_t>(ledger->ledger.records.size()) : 0;
}

ps_status ps_ledger_record(const ps_ledger* ledger, int32_t index,
                           double* f_all_raw, double* d_measure, double* f_hat,
                           double* d_hat, double* fd) {
  return guarded([&] {
    require(ledger != nullptr, "null argument");
    if (index < 0 ||
        index >= static_cast<int32_t>(ledger->ledger.records.size()))
      photoscore::fail(photoscore::Errc::index_out_of_range,
                       "record " + std::to_string(index));
    const auto& r = ledger->ledger.records[index];
    if (f_all_raw) *f_all_raw = r.f_all_raw;
    if (d_measure) *d_measure = r.d_measure;
    if (f_hat) *f_hat = r.f_hat;
    if (d_hat) *d_hat = r.d_hat;
    if (fd) *fd = r.fd;
  });
}

ps_status ps_ledger_select(const ps_ledger* ledger, double threshold,
                           ps_selection* out) {
  return guarded([&] {
    require(ledger && out, "null argument");
    const auto l = reselected(ledger->ledger, threshold);
    out->optimal = l.selection.optimal;
    out->by_f = l.selection.by_f;
    out->by_d = l.selection.by_d;
    out->converged = l.selection.converged ? 1 : 0;
  });
}

ps_status ps_ledger_select_report(const ps_ledger* ledger, double threshold,
                                  int no_timestamp, char** out_text) {
  return guarded([&] {
    require(ledger && out_text, "null argument");
    const auto l = reselected(ledger->ledger, threshold);
    *out_text = dup_text(photoscore::serialize_ledger(l, no_timestamp == 0));
  });
}

void ps_ledger_free(ps_ledger* ledger) { delete ledger; }

ps_status ps_ensemble_predict(const ps_model* model_f, const ps_model* model_d,
                              const char* image_path, int32_t* score,
                              double blended[8]) {
  return guarded([&] {
    require(model_f && model_d && image_path && score, "null argument");
    const photoscore::Image img = load_input_image(image_path);
    const auto pf = photoscore::predict(model_f->net, img);
    const auto pd = photoscore::predict(model_d->net, img);
    const auto res = photoscore::ensemble_predict(
        std::vector<double>(pf.begin(), pf.end()),
        std::vector<double>(pd.begin(), pd.end()));
    *score = res.score;
    if (blended)
      for (int j = 0; j < 8; ++j) blended[j] = res.blended[j];
  });
}

}  // extern "C"
