// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// patchdelta: synth / train / eval / bench / plot front end over the C API.
// Every run writes a JSON manifest holding the resolved configuration; passing
// that manifest back through --config reproduces the run. Flags given on the
// command line override values taken from the config file.

#include <patchdelta/patchdelta.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct Failure : std::runtime_error {
  int code;
  Failure(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

[[noreturn]] void usage(const std::string& msg) { throw Failure(kExitUsage, msg); }
[[noreturn]] void data(const std::string& msg) { throw Failure(kExitData, msg); }

void check(pdn_status status, const std::string& context) {
  if (status == PDN_OK) return;
  const std::string msg = context + ": " + pdn_last_error();
  switch (status) {
    case PDN_ERR_USAGE: throw Failure(kExitUsage, msg);
    case PDN_ERR_NUMERIC: throw Failure(kExitNumeric, msg);
    default: throw Failure(kExitData, msg);
  }
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Model = Handle<pdn_model, pdn_model_free>;
using Dataset = Handle<pdn_dataset, pdn_dataset_free>;
using Report = Handle<pdn_report, pdn_report_free>;
using Bench = Handle<pdn_bench, pdn_bench_free>;

std::string sha256(const fs::path& path) {
  char hex[65];
  check(pdn_file_sha256(path.c_str(), hex), "hashing " + path.string());
  return hex;
}

ordered_json file_entry(const fs::path& path, bool hashed = true) {
  ordered_json e;
  e["path"] = path.string();
  if (hashed)
    e["sha256"] = sha256(path);
  else
    e["sha256"] = nullptr;
  return e;
}

void write_manifest(const fs::path& path, const std::string& subcommand, const ordered_json& config,
                    const ordered_json& data_seed, const ordered_json& model_seed, const ordered_json& inputs,
                    const ordered_json& outputs) {
  ordered_json m;
  m["tool"] = "patchdelta";
  m["version"] = pdn_version();
  m["subcommand"] = subcommand;
  m["config"] = config;
  m["data_seed"] = data_seed;
  m["model_seed"] = model_seed;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) data("cannot write manifest '" + path.string() + "'");
  out << m.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) data("cannot create directory '" + dir.string() + "': " + ec.message());
}

fs::path sibling(const fs::path& path, const std::string& suffix) { return fs::path(path.string() + suffix); }

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) usage("empty element in list '" + text + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) usage("empty list");
  return out;
}

std::vector<size_t> parse_lengths(const std::string& text) {
  std::vector<size_t> out;
  for (const std::string& s : split_list(text)) {
    size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v == 0) usage("invalid length '" + s + "'");
    out.push_back(v);
  }
  return out;
}

pdn_variant variant_from(const std::string& name) {
  pdn_variant v;
  check(pdn_variant_from_name(name.c_str(), &v), "--variant");
  return v;
}

// Turns a JSON object into command-line tokens placed ahead of the user's
// flags; every option takes its last value, so explicit flags win.
std::vector<std::string> config_args(const fs::path& path) {
  std::ifstream in(path);
  if (!in) data("cannot open config '" + path.string() + "'");
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    data("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (j.is_object() && j.contains("config") && j["config"].is_object()) j = j["config"];
  if (!j.is_object()) data("config '" + path.string() + "' must be a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    if (value.is_null()) continue;
    if (value.is_boolean()) {
      args.push_back(flag + (value.get<bool>() ? "=true" : "=false"));
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      args.push_back(flag);
      args.push_back(joined);
    } else if (value.is_string()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag);
      args.push_back(value.dump());
    } else {
      data("config key '" + key + "' has an unsupported value");
    }
  }
  return args;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  pdn_synth_config cfg{};
  size_t length = 0;
  std::optional<size_t> train_length, test_length;
  double min_magnitude = 0, max_magnitude = 0;
  std::string out_dir;
};

void add_anomaly_options(CLI::App* cmd, const std::string& stem, pdn_anomaly_spec& spec, const std::string& what) {
  cmd->add_option("--" + stem + "s", spec.count, "Number of " + what)->capture_default_str();
  cmd->add_option("--" + stem + "-min-len", spec.min_len, "Shortest " + what.substr(0, what.size() - 1))
      ->capture_default_str();
  cmd->add_option("--" + stem + "-max-len", spec.max_len, "Longest " + what.substr(0, what.size() - 1))
      ->capture_default_str();
}

ordered_json synth_config_json(const SynthArgs& a) {
  const pdn_synth_config& c = a.cfg;
  ordered_json j;
  j["seed"] = c.seed;
  j["train-length"] = c.train_length;
  j["test-length"] = c.test_length;
  j["features"] = c.features;
  j["noise-std"] = c.noise_std;
  j["period-min"] = c.period_min;
  j["period-max"] = c.period_max;
  j["period-groups"] = c.period_groups;
  j["amplitude-min"] = c.amplitude_min;
  j["amplitude-max"] = c.amplitude_max;
  const auto spec = [&](const std::string& stem, const pdn_anomaly_spec& s) {
    j[stem + "s"] = s.count;
    j[stem + "-min-len"] = s.min_len;
    j[stem + "-max-len"] = s.max_len;
  };
  spec("spike", c.spikes);
  spec("level-shift", c.level_shifts);
  spec("drift", c.drifts);
  j["min-magnitude"] = a.min_magnitude;
  j["max-magnitude"] = a.max_magnitude;
  j["out-dir"] = a.out_dir;
  return j;
}

void run_synth(SynthArgs& a, CLI::App* cmd) {
  pdn_synth_config& c = a.cfg;
  if (cmd->count("--length") > 0) c.train_length = c.test_length = a.length;
  if (a.train_length) c.train_length = *a.train_length;
  if (a.test_length) c.test_length = *a.test_length;
  for (pdn_anomaly_spec* s : {&c.spikes, &c.level_shifts, &c.drifts}) {
    s->min_magnitude = a.min_magnitude;
    s->max_magnitude = a.max_magnitude;
  }
  Dataset ds;
  check(pdn_dataset_synthesize(&c, ds.out()), "synth");
  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  check(pdn_dataset_write(ds.get(), dir.c_str()), "synth");
  ordered_json outputs = ordered_json::array();
  for (const char* name : {"train.txt", "test.txt", "test_label.txt", "segments.json"})
    outputs.push_back(file_entry(dir / name));
  write_manifest(dir / "manifest.json", "synth", synth_config_json(a), c.seed, nullptr, ordered_json::array(),
                 outputs);
  std::cerr << "synth: " << pdn_dataset_segment_count(ds.get()) << " anomaly segments written to " << dir.string()
            << '\n';
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string train_path;
  std::string variant = "patched-deltanet";
  bool no_gate = false;
  size_t window = 0, patch = 0, d_model = 0, d_ff = 0;
  uint64_t seed = 0;
  pdn_train_config tc{};
  std::string out, log, manifest;
};

void epoch_logger(size_t epoch, double loss, double seconds, void* user) {
  auto* log = static_cast<std::ofstream*>(user);
  char line[96];
  std::snprintf(line, sizeof line, "%zu %.17g %.3f\n", epoch, loss, seconds);
  *log << line;
  log->flush();
  std::cerr << "epoch " << epoch << " loss " << loss << " (" << seconds << " s)\n";
}

void run_train(TrainArgs& a, CLI::App* cmd) {
  pdn_variant variant = variant_from(a.variant);
  if (a.no_gate) {
    if (variant != PDN_VARIANT_PATCHED_DELTANET && variant != PDN_VARIANT_NO_GATE)
      usage("--no-gate applies only to the patched-deltanet variant, not '" + a.variant + "'");
    variant = PDN_VARIANT_NO_GATE;
  }
  pdn_model_config mc;
  pdn_model_config_default(variant, &mc);
  if (cmd->count("--window") > 0) mc.window = a.window;
  if (cmd->count("--patch") > 0) {
    if (variant == PDN_VARIANT_POINTWISE && a.patch != 1)
      usage("--variant pointwise requires --patch 1 (got " + std::to_string(a.patch) + ")");
    mc.patch = a.patch;
  }
  if (cmd->count("--d-model") > 0) mc.d_model = a.d_model;
  if (cmd->count("--d-ff") > 0) mc.d_ff = a.d_ff;
  mc.seed = a.seed;
  a.tc.seed = a.seed;

  Dataset ds;
  check(pdn_dataset_load(a.train_path.c_str(), nullptr, nullptr, ds.out()), "train");
  mc.features = pdn_dataset_features(ds.get());
  check(pdn_model_config_validate(&mc), "train");
  check(pdn_dataset_normalize(ds.get()), "train");

  Model model;
  check(pdn_model_create(&mc, model.out()), "train");
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  const fs::path log_path = a.log.empty() ? sibling(out, ".log") : fs::path(a.log);
  const fs::path manifest_path = a.manifest.empty() ? sibling(out, ".manifest.json") : fs::path(a.manifest);
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  if (!log) data("cannot write epoch log '" + log_path.string() + "'");
  log << "epoch mean_loss seconds\n";
  check(pdn_model_train(model.get(), ds.get(), &a.tc, &epoch_logger, &log), "train");
  log.close();
  check(pdn_model_save(model.get(), out.c_str()), "train");

  ordered_json config;
  config["train"] = a.train_path;
  config["variant"] = pdn_variant_name(variant);
  config["window"] = mc.window;
  config["patch"] = mc.patch;
  config["d-model"] = mc.d_model;
  config["d-ff"] = mc.d_ff;
  config["epochs"] = a.tc.epochs;
  config["lr"] = a.tc.learning_rate;
  config["beta1"] = a.tc.adam_beta1;
  config["beta2"] = a.tc.adam_beta2;
  config["eps"] = a.tc.adam_eps;
  config["batch-size"] = a.tc.batch_size;
  config["stride"] = a.tc.window_stride;
  config["seed"] = a.seed;
  config["threads"] = a.tc.threads;
  config["out"] = a.out;
  if (!a.log.empty()) config["log"] = a.log;
  if (!a.manifest.empty()) config["manifest"] = a.manifest;
  ordered_json outputs = ordered_json::array();
  outputs.push_back(file_entry(out));
  outputs.push_back(file_entry(log_path, false));
  ordered_json inputs = ordered_json::array({file_entry(a.train_path)});
  write_manifest(manifest_path, "train", config, nullptr, a.seed, inputs, outputs);
  std::cerr << "train: " << pdn_model_param_count(model.get()) << " parameters, checkpoint " << out.string() << '\n';
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string model, scores, test, labels;
  std::string threshold = "best-f1";
  double percentile = 99.0;
  std::string out_dir;
};

std::vector<double> read_scores(const fs::path& path) {
  std::ifstream in(path);
  if (!in) data("cannot open scores '" + path.string() + "'");
  std::vector<double> out;
  std::string line;
  size_t lineno = 0;
  int column = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) data(path.string() + ":" + std::to_string(lineno) + ": empty line");
    if (lineno == 1 && line.find_first_of("abcdefghijklmnopqrstuvwxyz") != std::string::npos &&
        line.find("score") != std::string::npos) {
      std::istringstream header(line);
      std::string name;
      int idx = 0;
      column = -1;
      while (std::getline(header, name, ',')) {
        if (name == "score") column = idx;
        ++idx;
      }
      if (column < 0) data(path.string() + ": header has no 'score' column");
      continue;
    }
    std::istringstream fields(line);
    std::string field;
    for (int i = 0; i <= column; ++i)
      if (!std::getline(fields, field, ',')) data(path.string() + ":" + std::to_string(lineno) + ": missing column");
    double v = 0;
    const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size())
      data(path.string() + ":" + std::to_string(lineno) + ": invalid score '" + field + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<uint8_t> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) data("cannot open labels '" + path.string() + "'");
  std::vector<uint8_t> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    double v = -1;
    const auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || p != line.data() + line.size() || (v != 0.0 && v != 1.0))
      data(path.string() + ":" + std::to_string(lineno) + ": label must be 0 or 1");
    out.push_back(v == 1.0 ? 1 : 0);
  }
  return out;
}

void run_eval(EvalArgs& a) {
  if (a.model.empty() == a.scores.empty()) usage("eval needs exactly one of --model or --scores");
  if (a.labels.empty()) usage("eval needs --labels");
  if (!a.model.empty() && a.test.empty()) usage("eval --model needs --test");
  pdn_eval_config ec;
  pdn_eval_config_default(&ec);
  if (a.threshold == "best-f1") {
    ec.mode = PDN_THRESHOLD_BEST_F1;
  } else if (a.threshold == "percentile") {
    ec.mode = PDN_THRESHOLD_PERCENTILE;
    ec.percentile = a.percentile;
  } else {
    usage("--threshold must be best-f1 or percentile");
  }

  Report report;
  ordered_json inputs = ordered_json::array();
  if (!a.model.empty()) {
    Model model;
    check(pdn_model_load(a.model.c_str(), model.out()), "eval");
    Dataset ds;
    check(pdn_dataset_load(a.test.c_str(), a.test.c_str(), a.labels.c_str(), ds.out()), "eval");
    check(pdn_model_evaluate(model.get(), ds.get(), &ec, report.out()), "eval");
    inputs.push_back(file_entry(a.model));
    inputs.push_back(file_entry(a.test));
  } else {
    const std::vector<double> scores = read_scores(a.scores);
    const std::vector<uint8_t> labels = read_labels(a.labels);
    if (scores.size() != labels.size())
      data("scores '" + a.scores + "' has " + std::to_string(scores.size()) + " rows but labels '" + a.labels +
           "' has " + std::to_string(labels.size()));
    check(pdn_evaluate_scores(scores.data(), labels.data(), scores.size(), &ec, report.out()), "eval");
    inputs.push_back(file_entry(a.scores));
  }
  inputs.push_back(file_entry(a.labels));

  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  const fs::path kv = dir / "report.txt", sweep = dir / "sweep.csv", scores = dir / "scores.csv";
  check(pdn_report_write(report.get(), kv.c_str(), sweep.c_str(), scores.c_str()), "eval");

  pdn_report_summary s;
  check(pdn_report_get_summary(report.get(), &s), "eval");
  std::cout << "roc_auc " << s.roc_auc << "\npa_f1 " << s.f1 << "\nprecision " << s.precision << "\nrecall "
            << s.recall << "\nthreshold " << s.threshold << '\n';

  ordered_json config;
  config["model"] = a.model.empty() ? ordered_json(nullptr) : ordered_json(a.model);
  config["scores"] = a.scores.empty() ? ordered_json(nullptr) : ordered_json(a.scores);
  config["test"] = a.test.empty() ? ordered_json(nullptr) : ordered_json(a.test);
  config["labels"] = a.labels;
  config["threshold"] = a.threshold;
  config["percentile"] = a.percentile;
  config["out-dir"] = a.out_dir;
  ordered_json outputs = ordered_json::array({file_entry(kv), file_entry(sweep), file_entry(scores)});
  write_manifest(dir / "manifest.json", "eval", config, nullptr, nullptr, inputs, outputs);
}

// ---- bench / plot ------------------------------------------------------------

struct BenchArgs {
  std::string lengths, variants = "patched-attention,pointwise,patched-deltanet";
  bool full_ladder = false;
  size_t batch = 16, reps = 20, warmup = 3, patch = 10, features = 38, d_model = 128, d_ff = 1024;
  uint64_t data_seed = 0, seed = 0;
  size_t parallel = 1;
  bool no_track_alloc = false;
  std::string out, svg;
};

void bench_progress(const pdn_bench_record* r, void*) {
  if (r->skipped) {
    std::cerr << pdn_variant_name(r->variant) << " L=" << r->length << " skipped (memory limit)\n";
    return;
  }
  std::cerr << pdn_variant_name(r->variant) << " L=" << r->length << " median " << r->median_ms << " ms, peak "
            << r->peak_bytes << " B\n";
}

void run_bench(BenchArgs& a) {
  pdn_bench_config bc;
  pdn_bench_config_default(a.full_ladder ? 1 : 0, &bc);
  std::vector<size_t> lengths(bc.lengths, bc.lengths + bc.n_lengths);
  if (!a.lengths.empty()) {
    if (a.full_ladder) usage("--lengths and --full-ladder are mutually exclusive");
    lengths = parse_lengths(a.lengths);
  }
  std::vector<pdn_variant> variants;
  for (const std::string& name : split_list(a.variants)) variants.push_back(variant_from(name));
  if (a.parallel == 0) usage("--parallel must be at least 1");
  bc.variants = variants.data();
  bc.n_variants = variants.size();
  bc.lengths = lengths.data();
  bc.n_lengths = lengths.size();
  bc.batch = a.batch;
  bc.repetitions = a.reps;
  bc.warmup = a.warmup;
  bc.patch = a.patch;
  bc.features = a.features;
  bc.d_model = a.d_model;
  bc.d_ff = a.d_ff;
  bc.data_seed = a.data_seed;
  bc.model_seed = a.seed;
  bc.threads = a.parallel;
  bc.track_allocations = a.no_track_alloc ? 0 : 1;

  const fs::path out = a.out.empty() ? fs::path(a.parallel > 1 ? "bench_parallel.csv" : "bench.csv") : fs::path(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  Bench bench;
  check(pdn_bench_run(&bc, &bench_progress, nullptr, bench.out()), "bench");
  check(pdn_bench_write_csv(bench.get(), out.c_str()), "bench");
  if (!a.svg.empty()) check(pdn_bench_write_svg(bench.get(), a.svg.c_str()), "bench");

  ordered_json slopes = ordered_json::object();
  if (lengths.size() >= 3) {
    for (pdn_variant v : variants) {
      double slope = 0;
      if (pdn_bench_fit_exponent(bench.get(), v, &slope) == PDN_OK) {
        slopes[pdn_variant_name(v)] = slope;
        std::cout << "slope " << pdn_variant_name(v) << ' ' << slope << '\n';
      }
    }
  }

  ordered_json config;
  ordered_json lj = ordered_json::array();
  for (size_t l : lengths) lj.push_back(l);
  ordered_json vj = ordered_json::array();
  for (pdn_variant v : variants) vj.push_back(pdn_variant_name(v));
  config["lengths"] = lj;
  config["variants"] = vj;
  config["batch"] = a.batch;
  config["reps"] = a.reps;
  config["warmup"] = a.warmup;
  config["patch"] = a.patch;
  config["features"] = a.features;
  config["d-model"] = a.d_model;
  config["d-ff"] = a.d_ff;
  config["data-seed"] = a.data_seed;
  config["seed"] = a.seed;
  config["parallel"] = a.parallel;
  config["no-track-alloc"] = a.no_track_alloc;
  config["out"] = out.string();
  config["svg"] = a.svg.empty() ? ordered_json(nullptr) : ordered_json(a.svg);
  ordered_json outputs = ordered_json::array({file_entry(out, false)});
  if (!a.svg.empty()) outputs.push_back(file_entry(a.svg, false));
  write_manifest(sibling(out, ".manifest.json"), "bench", config, a.data_seed, a.seed, ordered_json::array(),
                 outputs);
  ordered_json fit;
  fit["slopes"] = slopes;
  std::ofstream(sibling(out, ".slopes.json"), std::ios::trunc) << fit.dump(2) << '\n';
}

void run_plot(const std::string& csv, const std::string& svg) {
  Bench bench;
  check(pdn_bench_load_csv(csv.c_str(), bench.out()), "plot");
  const fs::path out(svg);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  check(pdn_bench_write_svg(bench.get(), svg.c_str()), "plot");
  ordered_json config;
  config["csv"] = csv;
  config["out"] = svg;
  write_manifest(sibling(out, ".manifest.json"), "plot", config, nullptr, nullptr,
                 ordered_json::array({file_entry(csv)}), ordered_json::array({file_entry(out)}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patched delta-rule anomaly detection toolkit", "patchdelta"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", pdn_version());
  std::string config_path;

  const auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config or manifest; explicit flags win")->check(CLI::ExistingFile);
  };

  SynthArgs synth;
  pdn_synth_config_default(&synth.cfg);
  synth.min_magnitude = synth.cfg.spikes.min_magnitude;
  synth.max_magnitude = synth.cfg.spikes.max_magnitude;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic anomaly benchmark");
  add_config(synth_cmd);
  synth_cmd->add_option("--seed", synth.cfg.seed, "Data seed")->capture_default_str();
  synth_cmd->add_option("--length", synth.length, "Length of both the train and test splits");
  synth_cmd->add_option("--train-length", synth.train_length, "Train split length");
  synth_cmd->add_option("--test-length", synth.test_length, "Test split length");
  synth_cmd->add_option("--features", synth.cfg.features, "Number of channels")->capture_default_str();
  synth_cmd->add_option("--noise-std", synth.cfg.noise_std, "Gaussian noise level")->capture_default_str();
  synth_cmd->add_option("--period-min", synth.cfg.period_min)->capture_default_str();
  synth_cmd->add_option("--period-max", synth.cfg.period_max)->capture_default_str();
  synth_cmd->add_option("--period-groups", synth.cfg.period_groups, "Distinct shared periods, 0 for one per channel")
      ->capture_default_str();
  synth_cmd->add_option("--amplitude-min", synth.cfg.amplitude_min)->capture_default_str();
  synth_cmd->add_option("--amplitude-max", synth.cfg.amplitude_max)->capture_default_str();
  add_anomaly_options(synth_cmd, "spike", synth.cfg.spikes, "spikes");
  add_anomaly_options(synth_cmd, "level-shift", synth.cfg.level_shifts, "level shifts");
  add_anomaly_options(synth_cmd, "drift", synth.cfg.drifts, "drifts");
  synth_cmd->add_option("--min-magnitude", synth.min_magnitude, "Smallest anomaly size in noise_std units")
      ->capture_default_str();
  synth_cmd->add_option("--max-magnitude", synth.max_magnitude, "Largest anomaly size in noise_std units")
      ->capture_default_str();
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  TrainArgs train;
  pdn_train_config_default(&train.tc);
  auto* train_cmd = app.add_subcommand("train", "Train a reconstruction model on normal data");
  add_config(train_cmd);
  train_cmd->add_option("--train", train.train_path, "SMD-format training file")->required();
  train_cmd->add_option("--variant", train.variant, "patched-deltanet, no-gate, pointwise or patched-attention")
      ->capture_default_str();
  train_cmd->add_flag("--no-gate", train.no_gate, "Drop the forgetting gate (beta = 1)");
  train_cmd->add_option("--window", train.window, "Window length L (default 100)");
  train_cmd->add_option("--patch", train.patch, "Patch length P (default 10, pointwise 1)");
  train_cmd->add_option("--d-model", train.d_model, "Hidden width (default 128)");
  train_cmd->add_option("--d-ff", train.d_ff, "Attention feed-forward width (default 1024)");
  train_cmd->add_option("--epochs", train.tc.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train.tc.learning_rate)->capture_default_str();
  train_cmd->add_option("--beta1", train.tc.adam_beta1)->capture_default_str();
  train_cmd->add_option("--beta2", train.tc.adam_beta2)->capture_default_str();
  train_cmd->add_option("--eps", train.tc.adam_eps)->capture_default_str();
  train_cmd->add_option("--batch-size", train.tc.batch_size)->capture_default_str();
  train_cmd->add_option("--stride", train.tc.window_stride, "Window stride, 0 for non-overlapping")
      ->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Model seed (initialization and shuffling)")->capture_default_str();
  train_cmd->add_option("--threads", train.tc.threads, "Worker threads per batch")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Checkpoint path")->required();
  train_cmd->add_option("--log", train.log, "Epoch log path (default <out>.log)");
  train_cmd->add_option("--manifest", train.manifest, "Manifest path (default <out>.manifest.json)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a test split and report ROC-AUC and point-adjusted F1");
  add_config(eval_cmd);
  eval_cmd->add_option("--model", eval.model, "Checkpoint");
  eval_cmd->add_option("--scores", eval.scores, "Precomputed per-point scores instead of a model");
  eval_cmd->add_option("--test", eval.test, "SMD-format test file");
  eval_cmd->add_option("--labels", eval.labels, "Per-point 0/1 labels");
  eval_cmd->add_option("--threshold", eval.threshold, "best-f1 or percentile")->capture_default_str();
  eval_cmd->add_option("--percentile", eval.percentile, "Score percentile used by --threshold percentile")
      ->capture_default_str();
  eval_cmd->add_option("--out-dir", eval.out_dir, "Output directory")->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Measure forward latency and peak allocation against length");
  add_config(bench_cmd);
  bench_cmd->add_option("--lengths", bench.lengths, "Comma-separated sequence lengths");
  bench_cmd->add_flag("--full-ladder", bench.full_ladder, "Use 8000..512000");
  bench_cmd->add_option("--variants", bench.variants, "Comma-separated variants")->capture_default_str();
  bench_cmd->add_option("--batch", bench.batch)->capture_default_str();
  bench_cmd->add_option("--reps", bench.reps, "Timed repetitions")->capture_default_str();
  bench_cmd->add_option("--warmup", bench.warmup)->capture_default_str();
  bench_cmd->add_option("--patch", bench.patch)->capture_default_str();
  bench_cmd->add_option("--features", bench.features)->capture_default_str();
  bench_cmd->add_option("--d-model", bench.d_model)->capture_default_str();
  bench_cmd->add_option("--d-ff", bench.d_ff)->capture_default_str();
  bench_cmd->add_option("--data-seed", bench.data_seed, "Seed of the random inputs")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Model seed")->capture_default_str();
  bench_cmd->add_option("--parallel", bench.parallel, "Batch-parallel threads (separate CSV)")->capture_default_str();
  bench_cmd->add_flag("--no-track-alloc", bench.no_track_alloc, "Disable the counting allocator");
  bench_cmd->add_option("--out", bench.out, "CSV path (default bench.csv)");
  bench_cmd->add_option("--svg", bench.svg, "Also render a log-log SVG");

  std::string plot_csv, plot_svg;
  auto* plot_cmd = app.add_subcommand("plot", "Render a bench CSV as log-log SVG curves");
  add_config(plot_cmd);
  plot_cmd->add_option("--csv", plot_csv, "Bench CSV")->required();
  plot_cmd->add_option("--out", plot_svg, "SVG path")->required();

  try {
    // Config-file values go first so that later explicit flags override them.
    std::vector<std::string> args(argv + 1, argv + argc);
    for (size_t i = 1; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
      if (path.empty()) continue;
      std::vector<std::string> extra = config_args(path);
      args.insert(args.begin() + 1, extra.begin(), extra.end());
      break;
    }
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      const int rc = app.exit(e);
      return rc == 0 ? kExitOk : kExitUsage;
    }

    if (synth_cmd->parsed()) run_synth(synth, synth_cmd);
    if (train_cmd->parsed()) run_train(train, train_cmd);
    if (eval_cmd->parsed()) run_eval(eval);
    if (bench_cmd->parsed()) run_bench(bench);
    if (plot_cmd->parsed()) run_plot(plot_csv, plot_svg);
  } catch (const Failure& f) {
    std::cerr << "patchdelta: " << f.what() << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "patchdelta: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
