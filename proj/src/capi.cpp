// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// extern "C" surface over the C++ core. Exceptions never cross this
// boundary: each entry point maps them onto a pdn_status and records the
// message for pdn_last_error().

#include "patchdelta/patchdelta.h"

#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "bench.hpp"
#include "checkpoint.hpp"
#include "data_io.hpp"
#include "digest.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "scoring.hpp"
#include "training.hpp"

struct pdn_model {
  patchdelta::Checkpoint ckpt;
};

struct pdn_dataset {
  patchdelta::DatasetBundle bundle;
};

struct pdn_report {
  patchdelta::EvalReport report;
  patchdelta::ScoreSeries scores;
  std::vector<std::uint8_t> labels;
};

struct pdn_bench {
  std::vector<patchdelta::BenchRecord> records;
};

namespace {

using namespace patchdelta;

thread_local std::string g_last_error;

pdn_status fail(pdn_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
pdn_status guarded(F&& f) noexcept {
  try {
    f();
    return PDN_OK;
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::usage: return fail(PDN_ERR_USAGE, e.what());
      case ErrorKind::data: return fail(PDN_ERR_DATA, e.what());
      case ErrorKind::numeric: return fail(PDN_ERR_NUMERIC, e.what());
      case ErrorKind::io: return fail(PDN_ERR_IO, e.what());
    }
    return fail(PDN_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PDN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PDN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PDN_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) usage_error(std::string(what) + " must not be NULL");
}

ModelConfig to_cpp(const pdn_model_config& c) {
  ModelConfig m;
  m.variant = static_cast<Variant>(c.variant);
  m.window = c.window;
  m.patch = c.patch;
  m.features = c.features;
  m.d_model = c.d_model;
  m.d_ff = c.d_ff;
  m.seed = c.seed;
  if (c.variant < PDN_VARIANT_PATCHED_DELTANET || c.variant > PDN_VARIANT_PATCHED_ATTENTION)
    usage_error("unknown variant code " + std::to_string(static_cast<int>(c.variant)));
  return m;
}

pdn_model_config to_c(const ModelConfig& m) {
  return {static_cast<pdn_variant>(m.variant), m.window, m.patch, m.features, m.d_model, m.d_ff, m.seed};
}

AnomalySpec to_cpp(const pdn_anomaly_spec& a) { return {a.count, a.min_len, a.max_len, a.min_magnitude, a.max_magnitude}; }
pdn_anomaly_spec to_c(const AnomalySpec& a) { return {a.count, a.min_len, a.max_len, a.min_magnitude, a.max_magnitude}; }

TrainConfig to_cpp(const pdn_train_config& c) {
  TrainConfig t;
  t.learning_rate = c.learning_rate;
  t.adam_beta1 = c.adam_beta1;
  t.adam_beta2 = c.adam_beta2;
  t.adam_eps = c.adam_eps;
  t.batch_size = c.batch_size;
  t.epochs = c.epochs;
  t.window_stride = c.window_stride;
  t.seed = c.seed;
  t.threads = c.threads;
  return t;
}

EvalOptions to_cpp(const pdn_eval_config* c) {
  EvalOptions o;
  if (c != nullptr) {
    if (c->mode != PDN_THRESHOLD_BEST_F1 && c->mode != PDN_THRESHOLD_PERCENTILE) usage_error("unknown threshold mode");
    o.mode = c->mode == PDN_THRESHOLD_BEST_F1 ? ThresholdMode::best_f1 : ThresholdMode::percentile;
    o.percentile = c->percentile;
  }
  return o;
}

pdn_bench_record to_c(const BenchRecord& r) {
  return {static_cast<pdn_variant>(r.variant), r.length, r.tokens, r.batch, r.median_ms, r.iqr_ms, r.peak_bytes,
          r.alloc_tracked ? 1 : 0, r.steps, r.skipped ? 1 : 0};
}

void write_text(const char* path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_error(std::string("cannot open '") + path + "' for writing");
  out << text;
  out.flush();
  if (!out) io_error(std::string("write failure on '") + path + "'");
}

std::string read_text(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error(std::string("cannot open '") + path + "' for reading");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const pdn_variant kDefaultVariants[] = {PDN_VARIANT_PATCHED_ATTENTION, PDN_VARIANT_POINTWISE,
                                         PDN_VARIANT_PATCHED_DELTANET};
const size_t kDeskLengths[] = {1000, 4000, 16000, 64000};
const size_t kFullLengths[] = {8000, 32000, 64000, 128000, 256000, 512000};

}  // namespace

extern "C" {

const char* pdn_last_error(void) { return g_last_error.c_str(); }
const char* pdn_version(void) { return "0.1.0"; }

const char* pdn_variant_name(pdn_variant variant) {
  switch (variant) {
    case PDN_VARIANT_PATCHED_DELTANET: return "patched-deltanet";
    case PDN_VARIANT_NO_GATE: return "no-gate";
    case PDN_VARIANT_POINTWISE: return "pointwise";
    case PDN_VARIANT_PATCHED_ATTENTION: return "patched-attention";
  }
  return "unknown";
}

pdn_status pdn_variant_from_name(const char* name, pdn_variant* out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = static_cast<pdn_variant>(parse_variant(name));
  });
}

void pdn_model_config_default(pdn_variant variant, pdn_model_config* out) {
  if (out == nullptr) return;
  *out = to_c(ModelConfig::defaults(static_cast<Variant>(variant)));
}

pdn_status pdn_model_config_validate(const pdn_model_config* config) {
  return guarded([&] {
    require(config, "config");
    to_cpp(*config).validate();
  });
}

pdn_status pdn_param_count(const pdn_model_config* config, size_t* out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = param_count(to_cpp(*config));
  });
}

pdn_status pdn_model_create(const pdn_model_config* config, pdn_model** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = nullptr;
    auto m = std::make_unique<pdn_model>();
    m->ckpt.config = to_cpp(*config);
    m->ckpt.params = init_params(m->ckpt.config);
    *out = m.release();
  });
}

pdn_status pdn_model_load(const char* path, pdn_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto m = std::make_unique<pdn_model>();
    m->ckpt = load_checkpoint(path);
    *out = m.release();
  });
}

pdn_status pdn_model_save(const pdn_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    save_checkpoint(path, model->ckpt);
  });
}

pdn_status pdn_model_get_config(const pdn_model* model, pdn_model_config* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = to_c(model->ckpt.config);
  });
}

size_t pdn_model_param_count(const pdn_model* model) {
  return model == nullptr ? 0 : stored_param_count(model->ckpt.params);
}

void pdn_model_free(pdn_model* model) { delete model; }

void pdn_synth_config_default(pdn_synth_config* out) {
  if (out == nullptr) return;
  const SynthConfig c;
  *out = {c.train_length,  c.test_length,   c.features,  c.period_min,     c.period_max,
          c.period_groups, c.amplitude_min, c.amplitude_max, c.noise_std, to_c(c.spikes),
          to_c(c.level_shifts), to_c(c.drifts), c.seed};
}

pdn_status pdn_dataset_synthesize(const pdn_synth_config* config, pdn_dataset** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = nullptr;
    SynthConfig c;
    c.train_length = config->train_length;
    c.test_length = config->test_length;
    c.features = config->features;
    c.period_min = config->period_min;
    c.period_max = config->period_max;
    c.period_groups = config->period_groups;
    c.amplitude_min = config->amplitude_min;
    c.amplitude_max = config->amplitude_max;
    c.noise_std = config->noise_std;
    c.spikes = to_cpp(config->spikes);
    c.level_shifts = to_cpp(config->level_shifts);
    c.drifts = to_cpp(config->drifts);
    c.seed = config->seed;
    auto d = std::make_unique<pdn_dataset>();
    d->bundle = synth_generate(c);
    *out = d.release();
  });
}

pdn_status pdn_dataset_load(const char* train_path, const char* test_path, const char* label_path, pdn_dataset** out) {
  return guarded([&] {
    require(train_path, "train_path");
    require(out, "out");
    *out = nullptr;
    auto d = std::make_unique<pdn_dataset>();
    d->bundle = load_smd(train_path, test_path ? test_path : "", label_path ? label_path : "");
    *out = d.release();
  });
}

pdn_status pdn_dataset_normalize(pdn_dataset* dataset) {
  return guarded([&] {
    require(dataset, "dataset");
    if (dataset->bundle.stats) usage_error("normalize: dataset is already normalized");
    dataset->bundle = normalize(std::move(dataset->bundle));
  });
}

pdn_status pdn_dataset_write(const pdn_dataset* dataset, const char* dir) {
  return guarded([&] {
    require(dataset, "dataset");
    require(dir, "dir");
    write_bundle(dir, dataset->bundle);
  });
}

size_t pdn_dataset_features(const pdn_dataset* d) { return d ? d->bundle.features() : 0; }
size_t pdn_dataset_train_length(const pdn_dataset* d) { return d ? d->bundle.train.length() : 0; }
size_t pdn_dataset_test_length(const pdn_dataset* d) { return d ? d->bundle.test.length() : 0; }
size_t pdn_dataset_segment_count(const pdn_dataset* d) { return d ? d->bundle.segments.size() : 0; }
void pdn_dataset_free(pdn_dataset* dataset) { delete dataset; }

void pdn_train_config_default(pdn_train_config* out) {
  if (out == nullptr) return;
  const TrainConfig c;
  *out = {c.learning_rate, c.adam_beta1, c.adam_beta2, c.adam_eps, c.batch_size,
          c.epochs,        c.window_stride, c.seed,    c.threads};
}

pdn_status pdn_model_train(pdn_model* model, const pdn_dataset* dataset, const pdn_train_config* config,
                           pdn_epoch_callback on_epoch, void* user) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(config, "config");
    if (!dataset->bundle.stats) usage_error("train: dataset must be normalized first");
    TrainResult r = train(model->ckpt.params, dataset->bundle.train, model->ckpt.config, to_cpp(*config),
                          [&](const EpochLog& log) {
                            if (on_epoch) on_epoch(log.epoch, log.mean_loss, log.seconds, user);
                          });
    model->ckpt.params = std::move(r.params);
    model->ckpt.norm = dataset->bundle.stats;
  });
}

void pdn_eval_config_default(pdn_eval_config* out) {
  if (out == nullptr) return;
  out->mode = PDN_THRESHOLD_BEST_F1;
  out->percentile = 99.0;
}

pdn_status pdn_model_evaluate(const pdn_model* model, const pdn_dataset* dataset, const pdn_eval_config* config,
                              pdn_report** out) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(out, "out");
    *out = nullptr;
    const TimeSeries& test = dataset->bundle.test;
    if (test.values.empty() || !test.labels) usage_error("evaluate: dataset has no labeled test split");
    if (test.features() != model->ckpt.config.features)
      data_error("evaluate: test data has " + std::to_string(test.features()) + " features, checkpoint expects " +
                 std::to_string(model->ckpt.config.features));
    Matrix values;
    if (dataset->bundle.stats) {
      values = test.values;
    } else if (model->ckpt.norm) {
      values = apply_norm(test.values, *model->ckpt.norm);
    } else {
      values = test.values;
    }
    auto r = std::make_unique<pdn_report>();
    r->scores = point_scores(model->ckpt.params, model->ckpt.config, values);
    r->labels = *test.labels;
    r->report = evaluate(r->scores, r->labels, to_cpp(config));
    *out = r.release();
  });
}

pdn_status pdn_evaluate_scores(const double* scores, const uint8_t* labels, size_t n, const pdn_eval_config* config,
                               pdn_report** out) {
  return guarded([&] {
    require(scores, "scores");
    require(labels, "labels");
    require(out, "out");
    *out = nullptr;
    auto r = std::make_unique<pdn_report>();
    r->scores.scores.assign(scores, scores + n);
    r->scores.covered.assign(n, 1);
    r->labels.assign(labels, labels + n);
    for (std::uint8_t l : r->labels)
      if (l > 1) data_error("labels must be 0 or 1");
    r->report = evaluate(r->scores, r->labels, to_cpp(config));
    *out = r.release();
  });
}

pdn_status pdn_report_get_summary(const pdn_report* report, pdn_report_summary* out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    const EvalReport& r = report->report;
    *out = {r.roc_auc,  r.chosen.f1, r.chosen.precision, r.chosen.recall, r.chosen.threshold, r.chosen.tp, r.chosen.fp,
            r.chosen.fn, r.tn,       r.n_points,         r.n_scored,      r.n_anomalous};
  });
}

pdn_status pdn_report_write(const pdn_report* report, const char* kv_path, const char* sweep_csv_path,
                            const char* scores_csv_path) {
  return guarded([&] {
    require(report, "report");
    if (kv_path) write_text(kv_path, report_kv(report->report));
    if (sweep_csv_path) write_text(sweep_csv_path, sweep_csv(report->report));
    if (scores_csv_path) write_text(scores_csv_path, scores_csv(report->scores, report->labels));
  });
}

void pdn_report_free(pdn_report* report) { delete report; }

void pdn_bench_config_default(int full_ladder, pdn_bench_config* out) {
  if (out == nullptr) return;
  const BenchConfig c;
  *out = {kDefaultVariants,
          3,
          full_ladder ? kFullLengths : kDeskLengths,
          full_ladder ? std::size(kFullLengths) : std::size(kDeskLengths),
          c.batch,
          c.repetitions,
          c.warmup,
          c.patch,
          c.features,
          c.d_model,
          c.d_ff,
          c.data_seed,
          c.model_seed,
          c.threads,
          c.track_allocations ? 1 : 0};
}

pdn_status pdn_bench_run(const pdn_bench_config* config, pdn_bench_callback on_record, void* user, pdn_bench** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = nullptr;
    if (config->n_variants > 0) require(config->variants, "config->variants");
    if (config->n_lengths > 0) require(config->lengths, "config->lengths");
    BenchConfig c;
    c.variants.clear();
    for (size_t i = 0; i < config->n_variants; ++i) {
      const int v = config->variants[i];
      if (v < PDN_VARIANT_PATCHED_DELTANET || v > PDN_VARIANT_PATCHED_ATTENTION) usage_error("unknown variant code");
      c.variants.push_back(static_cast<Variant>(v));
    }
    c.lengths.assign(config->lengths, config->lengths + config->n_lengths);
    c.batch = config->batch;
    c.repetitions = config->repetitions;
    c.warmup = config->warmup;
    c.patch = config->patch;
    c.features = config->features;
    c.d_model = config->d_model;
    c.d_ff = config->d_ff;
    c.data_seed = config->data_seed;
    c.model_seed = config->model_seed;
    c.threads = config->threads;
    c.track_allocations = config->track_allocations != 0;
    auto b = std::make_unique<pdn_bench>();
    b->records = measure(c, [&](const BenchRecord& r) {
      if (on_record) {
        const pdn_bench_record cr = to_c(r);
        on_record(&cr, user);
      }
    });
    *out = b.release();
  });
}

pdn_status pdn_bench_load_csv(const char* path, pdn_bench** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto b = std::make_unique<pdn_bench>();
    b->records = parse_bench_csv(read_text(path));
    *out = b.release();
  });
}

size_t pdn_bench_record_count(const pdn_bench* bench) { return bench ? bench->records.size() : 0; }

pdn_status pdn_bench_get_record(const pdn_bench* bench, size_t index, pdn_bench_record* out) {
  return guarded([&] {
    require(bench, "bench");
    require(out, "out");
    if (index >= bench->records.size()) usage_error("record index out of range");
    *out = to_c(bench->records[index]);
  });
}

pdn_status pdn_bench_fit_exponent(const pdn_bench* bench, pdn_variant variant, double* slope) {
  return guarded([&] {
    require(bench, "bench");
    require(slope, "slope");
    *slope = fit_scaling_exponent(bench->records, static_cast<Variant>(variant));
  });
}

pdn_status pdn_bench_write_csv(const pdn_bench* bench, const char* path) {
  return guarded([&] {
    require(bench, "bench");
    require(path, "path");
    write_text(path, bench_csv(bench->records));
  });
}

pdn_status pdn_bench_write_svg(const pdn_bench* bench, const char* path) {
  return guarded([&] {
    require(bench, "bench");
    require(path, "path");
    write_text(path, render_svg(bench->records));
  });
}

void pdn_bench_free(pdn_bench* bench) { delete bench; }

pdn_status pdn_file_sha256(const char* path, char out_hex[65]) {
  return guarded([&] {
    require(path, "path");
    require(out_hex, "out_hex");
    const std::string hex = sha256_file(path);
    std::copy(hex.begin(), hex.end(), out_hex);
    out_hex[64] = '\0';
  });
}

}  // extern "C"
