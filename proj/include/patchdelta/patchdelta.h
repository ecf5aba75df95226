/* Copyright 2026 The patchdelta Authors. Apache 2.0 License.
 *
 * C interface to the patchdelta engine: patched gated delta-rule
 * reconstruction models for multivariate time-series anomaly detection,
 * their attention and point-wise baselines, evaluation, and the scaling
 * benchmark.
 *
 * Conventions: every fallible call returns a pdn_status; on failure a
 * human-readable message is available from pdn_last_error() on the calling
 * thread until the next failing call there. Objects are opaque handles
 * created by *_create / *_load / *_run functions and released with the
 * matching *_free function (which accepts NULL). Handles are not
 * synchronized: share one across threads only for read-only calls.
 */

#ifndef PATCHDELTA_PATCHDELTA_H
#define PATCHDELTA_PATCHDELTA_H

#include <stddef.h>
#include <stdint.h>

#if defined(PDN_BUILDING_LIBRARY)
#define PDN_API __attribute__((visibility("default")))
#else
#define PDN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pdn_status {
  PDN_OK = 0,
  PDN_ERR_USAGE = 1,   /* invalid argument or configuration */
  PDN_ERR_DATA = 2,    /* malformed or inconsistent data */
  PDN_ERR_NUMERIC = 3, /* non-finite loss, gradient or state */
  PDN_ERR_IO = 4,      /* filesystem failure */
  PDN_ERR_INTERNAL = 5
} pdn_status;

PDN_API const char* pdn_last_error(void);
PDN_API const char* pdn_version(void);

/* ---- models ------------------------------------------------------------ */

typedef enum pdn_variant {
  PDN_VARIANT_PATCHED_DELTANET = 0,
  PDN_VARIANT_NO_GATE = 1,
  PDN_VARIANT_POINTWISE = 2,
  PDN_VARIANT_PATCHED_ATTENTION = 3
} pdn_variant;

PDN_API const char* pdn_variant_name(pdn_variant variant);
PDN_API pdn_status pdn_variant_from_name(const char* name, pdn_variant* out);

typedef struct pdn_model_config {
  pdn_variant variant;
  size_t window;   /* L */
  size_t patch;    /* P; must be 1 for the pointwise variant */
  size_t features; /* F */
  size_t d_model;
  size_t d_ff;     /* attention feed-forward width */
  uint64_t seed;   /* weight initialization */
} pdn_model_config;

/* L=100, P=10 (1 for pointwise), F=38, d_model=128, d_ff=1024, seed=0. */
PDN_API void pdn_model_config_default(pdn_variant variant, pdn_model_config* out);
PDN_API pdn_status pdn_model_config_validate(const pdn_model_config* config);
PDN_API pdn_status pdn_param_count(const pdn_model_config* config, size_t* out);

typedef struct pdn_model pdn_model;

PDN_API pdn_status pdn_model_create(const pdn_model_config* config, pdn_model** out);
PDN_API pdn_status pdn_model_load(const char* path, pdn_model** out);
PDN_API pdn_status pdn_model_save(const pdn_model* model, const char* path);
PDN_API pdn_status pdn_model_get_config(const pdn_model* model, pdn_model_config* out);
/* Sum of the sizes of every stored tensor. */
PDN_API size_t pdn_model_param_count(const pdn_model* model);
PDN_API void pdn_model_free(pdn_model* model);

/* ---- datasets ---------------------------------------------------------- */

typedef struct pdn_anomaly_spec {
  size_t count;
  size_t min_len, max_len;
  double min_magnitude, max_magnitude; /* multiples of noise_std */
} pdn_anomaly_spec;

typedef struct pdn_synth_config {
  size_t train_length, test_length, features;
  double period_min, period_max;
  size_t period_groups; /* distinct periods shared round-robin; 0 = one per channel */
  double amplitude_min, amplitude_max;
  double noise_std;
  pdn_anomaly_spec spikes, level_shifts, drifts;
  uint64_t seed;
} pdn_synth_config;

PDN_API void pdn_synth_config_default(pdn_synth_config* out);

typedef struct pdn_dataset pdn_dataset;

PDN_API pdn_status pdn_dataset_synthesize(const pdn_synth_config* config, pdn_dataset** out);
/* SMD text files. test_path and label_path may be NULL. */
PDN_API pdn_status pdn_dataset_load(const char* train_path, const char* test_path, const char* label_path,
                                    pdn_dataset** out);
/* z-scores both splits with train statistics (once). */
PDN_API pdn_status pdn_dataset_normalize(pdn_dataset* dataset);
/* train.txt, test.txt, test_label.txt and segments.json in dir. */
PDN_API pdn_status pdn_dataset_write(const pdn_dataset* dataset, const char* dir);
PDN_API size_t pdn_dataset_features(const pdn_dataset* dataset);
PDN_API size_t pdn_dataset_train_length(const pdn_dataset* dataset);
PDN_API size_t pdn_dataset_test_length(const pdn_dataset* dataset);
PDN_API size_t pdn_dataset_segment_count(const pdn_dataset* dataset);
PDN_API void pdn_dataset_free(pdn_dataset* dataset);

/* ---- training ---------------------------------------------------------- */

typedef struct pdn_train_config {
  double learning_rate;
  double adam_beta1, adam_beta2, adam_eps;
  size_t batch_size;
  size_t epochs;
  size_t window_stride; /* 0 means the window length */
  uint64_t seed;        /* window shuffling */
  size_t threads;
} pdn_train_config;

PDN_API void pdn_train_config_default(pdn_train_config* out);

typedef void (*pdn_epoch_callback)(size_t epoch, double mean_loss, double seconds, void* user);

/* Trains on the dataset's train split, which must be normalized; the
 * normalization statistics are stored with the model. */
PDN_API pdn_status pdn_model_train(pdn_model* model, const pdn_dataset* dataset, const pdn_train_config* config,
                                   pdn_epoch_callback on_epoch, void* user);

/* ---- evaluation -------------------------------------------------------- */

typedef enum pdn_threshold_mode { PDN_THRESHOLD_BEST_F1 = 0, PDN_THRESHOLD_PERCENTILE = 1 } pdn_threshold_mode;

typedef struct pdn_eval_config {
  pdn_threshold_mode mode;
  double percentile; /* used by PDN_THRESHOLD_PERCENTILE, in [0, 100] */
} pdn_eval_config;

typedef struct pdn_report_summary {
  double roc_auc;
  double f1, precision, recall, threshold; /* point-adjusted, at the chosen threshold */
  size_t tp, fp, fn, tn;
  size_t n_points, n_scored, n_anomalous;
} pdn_report_summary;

typedef struct pdn_report pdn_report;

PDN_API void pdn_eval_config_default(pdn_eval_config* out);
/* Scores the dataset's labeled test split. A raw dataset is normalized with
 * the statistics stored in the model. */
PDN_API pdn_status pdn_model_evaluate(const pdn_model* model, const pdn_dataset* dataset, const pdn_eval_config* config,
                                      pdn_report** out);
/* Evaluates externally computed per-point scores. */
PDN_API pdn_status pdn_evaluate_scores(const double* scores, const uint8_t* labels, size_t n,
                                       const pdn_eval_config* config, pdn_report** out);
PDN_API pdn_status pdn_report_get_summary(const pdn_report* report, pdn_report_summary* out);
/* Any path may be NULL to skip that file. */
PDN_API pdn_status pdn_report_write(const pdn_report* report, const char* kv_path, const char* sweep_csv_path,
                                    const char* scores_csv_path);
PDN_API void pdn_report_free(pdn_report* report);

/* ---- benchmark --------------------------------------------------------- */

typedef struct pdn_bench_config {
  const pdn_variant* variants;
  size_t n_variants;
  const size_t* lengths; /* strictly increasing */
  size_t n_lengths;
  size_t batch, repetitions, warmup;
  size_t patch, features, d_model, d_ff;
  uint64_t data_seed, model_seed;
  size_t threads;
  int track_allocations;
} pdn_bench_config;

typedef struct pdn_bench_record {
  pdn_variant variant;
  size_t length, tokens, batch;
  double median_ms, iqr_ms;
  size_t peak_bytes;
  int alloc_tracked;
  size_t steps;
  int skipped;
} pdn_bench_record;

/* All three comparison variants over 1000/4000/16000/64000; full_ladder
 * selects 8000..512000. The arrays point into static storage. */
PDN_API void pdn_bench_config_default(int full_ladder, pdn_bench_config* out);

typedef struct pdn_bench pdn_bench;
typedef void (*pdn_bench_callback)(const pdn_bench_record* record, void* user);

PDN_API pdn_status pdn_bench_run(const pdn_bench_config* config, pdn_bench_callback on_record, void* user,
                                 pdn_bench** out);
PDN_API pdn_status pdn_bench_load_csv(const char* path, pdn_bench** out);
PDN_API size_t pdn_bench_record_count(const pdn_bench* bench);
PDN_API pdn_status pdn_bench_get_record(const pdn_bench* bench, size_t index, pdn_bench_record* out);
PDN_API pdn_status pdn_bench_fit_exponent(const pdn_bench* bench, pdn_variant variant, double* slope);
PDN_API pdn_status pdn_bench_write_csv(const pdn_bench* bench, const char* path);
PDN_API pdn_status pdn_bench_write_svg(const pdn_bench* bench, const char* path);
PDN_API void pdn_bench_free(pdn_bench* bench);

/* ---- utilities --------------------------------------------------------- */

/* Writes 64 lowercase hex digits plus NUL into out_hex. */
PDN_API pdn_status pdn_file_sha256(const char* path, char out_hex[65]);

#ifdef __cplusplus
}
#endif

#endif /* PATCHDELTA_PATCHDELTA_H */
