// Command-line front end; everything goes through the public C API.
#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "photoscore/photoscore.h"

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

int report_failure(ps_status st) {
  std::fprintf(stderr, "error: %s\n", ps_last_error());
  return static_cast<int>(st);
}

struct DatasetGuard {
  ps_dataset* ds = nullptr;
  ~DatasetGuard() { ps_dataset_free(ds); }
};

struct ModelGuard {
  ps_model* model = nullptr;
  ~ModelGuard() { ps_model_free(model); }
};

struct LedgerGuard {
  ps_ledger* ledger = nullptr;
  ~LedgerGuard() { ps_ledger_free(ledger); }
};

struct TextGuard {
  char* text = nullptr;
  ~TextGuard() { ps_text_free(text); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"photoscore: score-class CNN with self-revised retraining"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_config("--config", "", "Read options from an INI-style file");

  uint64_t seed = 0;
  std::string out_dir = ".";
  bool no_timestamp = false;
  app.add_option("--seed", seed, "Base RNG seed")->capture_default_str();
  app.add_option("--out", out_dir, "Output directory")
      ->capture_default_str();
  app.add_flag("--no-timestamp", no_timestamp,
               "Omit generation timestamps from reports");

  // synth ------------------------------------------------------------------
  auto* synth =
      app.add_subcommand("synth", "Write a synthetic imbalanced dataset");
  ps_synth_spec sspec;
  ps_synth_spec_default(&sspec);
  std::vector<double> proportions(sspec.proportions, sspec.proportions + 8);
  synth->add_option("--total", sspec.total, "Number of images")
      ->capture_default_str();
  synth
      ->add_option("--proportions", proportions,
                   "Eight class proportions for scores 2..9")
      ->expected(8);
  synth->add_option("--image-size", sspec.image_size, "Square image edge")
      ->capture_default_str();

  // rsrl -------------------------------------------------------------------
  auto* rsrl =
      app.add_subcommand("rsrl", "Run the self-revising training loop");
  ps_rsrl_config rcfg;
  ps_rsrl_config_default(&rcfg);
  std::string rsrl_index, rsrl_root;
  bool rsrl_fit = false;
  std::vector<int32_t> majority(
      rcfg.majority_classes, rcfg.majority_classes + rcfg.majority_count);
  std::string drop_rule = "threshold";
  rsrl->add_option("--index", rsrl_index, "Dataset index CSV")->required();
  rsrl->add_option("--root", rsrl_root,
                   "Image root (default: the index directory)");
  rsrl->add_flag("--fit", rsrl_fit, "Crop/letterbox images to 227x227");
  rsrl->add_option("--max-iterations", rcfg.max_iterations, "Iteration cap")
      ->capture_default_str();
  rsrl->add_option("--majority", majority,
                   "Score classes eligible for dropping");
  rsrl->add_option("--drop-rule", drop_rule, "threshold | quantile")
      ->check(CLI::IsMember({"threshold", "quantile"}))
      ->capture_default_str();
  rsrl->add_option("--tau", rcfg.drop_threshold,
                   "Likelihood threshold for dropping")
      ->capture_default_str();
  rsrl->add_option("--quantile", rcfg.drop_quantile,
                   "Bottom fraction dropped per class (quantile rule)")
      ->capture_default_str();
  rsrl->add_option("--fd-threshold", rcfg.fd_threshold,
                   "FD acceptance threshold T")
      ->capture_default_str();
  rsrl->add_option("--split-ratio", rcfg.split_ratio,
                   "Training fraction of the stratified split")
      ->capture_default_str();
  rsrl->add_option("--lr", rcfg.learning_rate, "SGD learning rate")
      ->capture_default_str();
  rsrl->add_option("--momentum", rcfg.momentum, "SGD momentum")
      ->capture_default_str();
  rsrl->add_option("--weight-decay", rcfg.weight_decay,
                   "L2 penalty on conv/FC weights")
      ->capture_default_str();
  rsrl->add_option("--batch-size", rcfg.batch_size, "Minibatch size")
      ->capture_default_str();
  rsrl->add_option("--epochs", rcfg.epochs, "Epochs per iteration")
      ->capture_default_str();

  // measure ----------------------------------------------------------------
  auto* measure = app.add_subcommand(
      "measure", "Disentanglement measure of a model's final FC weights");
  std::string measure_model;
  measure->add_option("--model", measure_model, "Model file")->required();

  // select -----------------------------------------------------------------
  auto* select =
      app.add_subcommand("select", "Pick the optimal model from a ledger");
  std::string select_ledger;
  double select_threshold = -1.0;
  select->add_option("--ledger", select_ledger, "Ledger report file")
      ->required();
  select->add_option("--threshold", select_threshold,
                     "Override the ledger threshold T");

  // predict ----------------------------------------------------------------
  auto* predict =
      app.add_subcommand("predict", "Two-model ensemble score for an image");
  std::string model_f_path, model_d_path, predict_image;
  predict->add_option("--model-f", model_f_path, "Model with maximal F_all")
      ->required();
  predict->add_option("--model-d", model_d_path, "Model with maximal D")
      ->required();
  predict->add_option("--image", predict_image, "PPM image")->required();

  // explain ----------------------------------------------------------------
  auto* explain = app.add_subcommand(
      "explain", "Write fixation and interest-region images");
  std::string explain_model, explain_image;
  explain->add_option("--model", explain_model, "Model file")->required();
  explain->add_option("--image", explain_image, "PPM image")->required();

  // eval -------------------------------------------------------------------
  auto* eval =
      app.add_subcommand("eval", "Confusion and F-measures on a dataset");
  std::string eval_model, eval_index, eval_root;
  bool eval_fit = false, eval_binary = false;
  eval->add_option("--model", eval_model, "Model file")->required();
  eval->add_option("--index", eval_index, "Dataset index CSV")->required();
  eval->add_option("--root", eval_root,
                   "Image root (default: the index directory)");
  eval->add_flag("--fit", eval_fit, "Crop/letterbox images to 227x227");
  eval->add_flag("--binary", eval_binary,
                 "Two-class report: scores below 5 are low");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return PS_ERROR_CONFIG;
  }

  const int ts_flag = no_timestamp ? 1 : 0;

  if (synth->parsed()) {
    for (int i = 0; i < 8; ++i) sspec.proportions[i] = proportions[i];
    sspec.seed = seed;
    DatasetGuard ds;
    ps_status st = ps_dataset_synth(&sspec, &ds.ds);
    if (st != PS_OK) return report_failure(st);
    st = ps_dataset_write(ds.ds, out_dir.c_str());
    if (st != PS_OK) return report_failure(st);
    std::printf("wrote %d images under %s\n", ps_dataset_size(ds.ds),
                out_dir.c_str());
    return 0;
  }

  if (rsrl->parsed()) {
    if (majority.size() > 8) {
      std::fprintf(stderr, "error: at most 8 majority classes\n");
      return PS_ERROR_CONFIG;
    }
    rcfg.majority_count = static_cast<int32_t>(majority.size());
    for (size_t i = 0; i < majority.size(); ++i)
      rcfg.majority_classes[i] = majority[i];
    rcfg.drop_rule = drop_rule == "quantile" ? 1 : 0;
    rcfg.seed = seed;

    DatasetGuard ds;
    ps_status st = ps_dataset_load(rsrl_index.c_str(),
                                   rsrl_root.empty() ? nullptr
                                                     : rsrl_root.c_str(),
                                   rsrl_fit ? 1 : 0, &ds.ds);
    if (st != PS_OK) return report_failure(st);

    LedgerGuard ledger;
    st = ps_rsrl_run(ds.ds, &rcfg, out_dir.c_str(), ts_flag, &ledger.ledger);
    if (st != PS_OK) return report_failure(st);

    TextGuard text;
    st = ps_ledger_select_report(ledger.ledger, -1.0, ts_flag, &text.text);
    if (st != PS_OK) return report_failure(st);
    std::fputs(text.text, stdout);
    return 0;
  }

  if (measure->parsed()) {
    ModelGuard model;
    ps_status st = ps_model_load(measure_model.c_str(), &model.model);
    if (st != PS_OK) return report_failure(st);
    TextGuard text;
    st = ps_model_measure_report(model.model, measure_model.c_str(), ts_flag,
                                 &text.text);
    if (st != PS_OK) return report_failure(st);
    std::fputs(text.text, stdout);
    return 0;
  }

  if (select->parsed()) {
    LedgerGuard ledger;
    ps_status st = ps_ledger_load(select_ledger.c_str(), &ledger.ledger);
    if (st != PS_OK) return report_failure(st);
    TextGuard text;
    st = ps_ledger_select_report(ledger.ledger, select_threshold, ts_flag,
                                 &text.text);
    if (st != PS_OK) return report_failure(st);
    std::fputs(text.text, stdout);
    return 0;
  }

  if (predict->parsed()) {
    ModelGuard mf, md;
    ps_status st = ps_model_load(model_f_path.c_str(), &mf.model);
    if (st != PS_OK) return report_failure(st);
    st = ps_model_load(model_d_path.c_str(), &md.model);
    if (st != PS_OK) return report_failure(st);
    int32_t score = 0;
    double blended[8];
    st = ps_ensemble_predict(mf.model, md.model, predict_image.c_str(),
                             &score, blended);
    if (st != PS_OK) return report_failure(st);
    std::printf("score %d\n", score);
    std::printf("columns class probability\n");
    for (int j = 0; j < 8; ++j)
      std::printf("%d %s\n", j + 2, g17(blended[j]).c_str());
    return 0;
  }

  if (explain->parsed()) {
    ModelGuard model;
    ps_status st = ps_model_load(explain_model.c_str(), &model.model);
    if (st != PS_OK) return report_failure(st);
    st = ps_model_explain(model.model, explain_image.c_str(),
                          out_dir.c_str());
    if (st != PS_OK) return report_failure(st);
    std::printf("wrote fixation and interest images under %s\n",
                out_dir.c_str());
    return 0;
  }

  if (eval->parsed()) {
    ModelGuard model;
    ps_status st = ps_model_load(eval_model.c_str(), &model.model);
    if (st != PS_OK) return report_failure(st);
    DatasetGuard ds;
    st = ps_dataset_load(eval_index.c_str(),
                         eval_root.empty() ? nullptr : eval_root.c_str(),
                         eval_fit ? 1 : 0, &ds.ds);
    if (st != PS_OK) return report_failure(st);
    TextGuard text;
    st = ps_model_evaluate(model.model, ds.ds, eval_binary ? 1 : 0, ts_flag,
                           &text.text);
    if (st != PS_OK) return report_failure(st);
    std::fputs(text.text, stdout);
    return 0;
  }

  return PS_ERROR;
}
