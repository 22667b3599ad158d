/* photoscore — C API for the photo-score prediction library.
 *
 * A miniature CNN (stacked strided 1x1 convolutions) is trained on an
 * imbalanced score dataset by iterative self-revised retraining: after each
 * training round, low-likelihood samples of the majority score classes are
 * dropped and the model is warm-start retrained.  Each round is scored by
 * the total per-class F-measure and a weight-disentanglement measure; the
 * combined FD score ranks the model family and picks the final model.
 *
 * All objects are opaque handles.  Functions return ps_status; on failure
 * ps_last_error() holds a human-readable description for the calling thread.
 */
#ifndef PHOTOSCORE_H
#define PHOTOSCORE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum ps_status {
  PS_OK = 0,
  PS_ERROR = 1,          /* unexpected failure */
  PS_ERROR_CONFIG = 2,   /* invalid configuration or arguments */
  PS_ERROR_IO = 3,       /* file, format and dataset errors */
  PS_ERROR_NUMERIC = 4   /* numeric, shape and convergence errors */
} ps_status;

const char* ps_version(void);

/* Message for the last failing call on this thread; empty string if none. */
const char* ps_last_error(void);

/* Frees strings returned through char** out parameters. */
void ps_text_free(char* text);

/* ---------------------------------------------------------------- datasets */

typedef struct ps_dataset ps_dataset;

/* Class proportions are indexed by score - 2 (score classes 2..9). */
typedef struct ps_synth_spec {
  int32_t total;
  double proportions[8];
  uint64_t seed;
  int32_t image_size;
} ps_synth_spec;

void ps_synth_spec_default(ps_synth_spec* spec);

ps_status ps_dataset_synth(const ps_synth_spec* spec, ps_dataset** out);

/* Loads a CSV index ("id,relative_path,score" with a header line) of PPM
 * images.  resize_policy: 0 rejects images that are not 227x227, 1 center
 * crops/letterboxes them to 227x227. */
ps_status ps_dataset_load(const char* index_path, const char* image_root,
                          int resize_policy, ps_dataset** out);

/* Writes images/<id>.ppm plus index.csv under out_dir. */
ps_status ps_dataset_write(const ps_dataset* ds, const char* out_dir);

int32_t ps_dataset_size(const ps_dataset* ds);
int32_t ps_dataset_class_count(const ps_dataset* ds, int32_t score);
void ps_dataset_free(ps_dataset* ds);

/* ------------------------------------------------------------------ models */

typedef struct ps_model ps_model;

ps_status ps_model_init(uint64_t seed, ps_model** out);
ps_status ps_model_load(const char* path, ps_model** out);
ps_status ps_model_save(const ps_model* model, const char* path);
void ps_model_free(ps_model* model);

/* Class probabilities for a 227x227 PPM image; probs[j] is score j+2. */
ps_status ps_model_predict(const ps_model* model, const char* image_path,
                           double probs[8]);

/* Disentanglement of the final fully connected layer.  dis_min may be NULL;
 * otherwise it receives the per-node minimum factor-loading distance. */
ps_status ps_model_measure(const ps_model* model, double* d_measure,
                           double dis_min[8]);
ps_status ps_model_measure_report(const ps_model* model, const char* model_name,
                                  int no_timestamp, char** out_text);

/* Writes <image-stem>.ffp.ppm and <image-stem>.air.ppm under out_dir. */
ps_status ps_model_explain(const ps_model* model, const char* image_path,
                           const char* out_dir);

/* Confusion matrix and per-class F report on a dataset.  binary != 0 maps
 * scores below 5 to a low class and the rest to a high class. */
ps_status ps_model_evaluate(const ps_model* model, const ps_dataset* ds,
                            int binary, int no_timestamp, char** out_report);

/* D-measure of an arbitrary weight matrix (row-major, rows x cols), for
 * callers that bring their own network.  dis_min_out may be NULL; otherwise
 * it must hold cols entries. */
ps_status ps_d_measure(const double* weights, int32_t rows, int32_t cols,
                       double* d_out, double* dis_min_out);

/* -------------------------------------------------------------------- rsrl */

typedef struct ps_rsrl_config {
  int32_t max_iterations;
  int32_t majority_classes[8];
  int32_t majority_count;
  int32_t drop_rule;        /* 0: likelihood threshold, 1: bottom quantile */
  double drop_threshold;
  double drop_quantile;
  double fd_threshold;
  double split_ratio;
  uint64_t seed;
  double learning_rate;
  double momentum;
  double weight_decay;
  int32_t batch_size;
  int32_t epochs;           /* per retraining iteration */
} ps_rsrl_config;

void ps_rsrl_config_default(ps_rsrl_config* cfg);

typedef struct ps_ledger ps_ledger;

/* Runs the full retraining loop.  When out_dir is non-NULL, writes
 * model_<iter>.rsrl snapshots, ledger.txt and drop_log.txt there. */
ps_status ps_rsrl_run(const ps_dataset* ds, const ps_rsrl_config* cfg,
                      const char* out_dir, int no_timestamp, ps_ledger** out);

ps_status ps_ledger_load(const char* path, ps_ledger** out);
int32_t ps_ledger_size(const ps_ledger* ledger);
ps_status ps_ledger_record(const ps_ledger* ledger, int32_t index,
                           double* f_all_raw, double* d_measure,
                           double* f_hat, double* d_hat, double* fd);

typedef struct ps_selection {
  int32_t optimal;     /* -1 when not converged */
  int32_t by_f;
  int32_t by_d;
  int32_t converged;
} ps_selection;

/* threshold < 0 keeps the ledger's own threshold. */
ps_status ps_ledger_select(const ps_ledger* ledger, double threshold,
                           ps_selection* out);
ps_status ps_ledger_select_report(const ps_ledger* ledger, double threshold,
                                  int no_timestamp, char** out_text);
void ps_ledger_free(ps_ledger* ledger);

/* Two-model ensemble: argmax of the equally weighted class probabilities.
 * blended may be NULL. */
ps_status ps_ensemble_predict(const ps_model* model_f, const ps_model* model_d,
                              const char* image_path, int32_t* score,
                              double blended[8]);

#ifdef __cplusplus
}
#endif

#endif /* PHOTOSCORE_H */
