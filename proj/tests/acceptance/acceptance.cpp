// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails. Arguments select criteria by
// number; with none, all run.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bench.hpp"
#include "data_io.hpp"
#include "model.hpp"
#include "patching.hpp"
#include "scoring.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"
#include "training.hpp"

using namespace patchdelta;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

constexpr Variant kAllVariants[] = {Variant::patched_deltanet, Variant::no_gate, Variant::pointwise,
                                    Variant::patched_attention};

// ---- 1: finite-difference gradients ---------------------------------------

Outcome gradient_check() {
  double worst = 0.0;
  std::string where;
  std::size_t checks = 0;
  for (Variant v : kAllVariants) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      ModelConfig c = ModelConfig::defaults(v);
      c.window = 8;
      c.patch = v == Variant::pointwise ? 1 : 2;
      c.features = 3;
      c.d_model = 4;
      c.seed = seed;
      Rng rng(1000 + seed);
      const Matrix x = testing::random_matrix(8, 3, rng);
      const testing::GradCheck g = testing::check_gradients(x, init_params(c), c, 1e-5);
      ++checks;
      if (g.max_rel_error > worst) {
        worst = g.max_rel_error;
        where = std::string(variant_name(v)) + " seed " + std::to_string(seed) + " " + g.worst;
      }
    }
  }
  return {worst <= 1e-4, std::to_string(checks) + " variant-seed checks, max rel err " + fmt("%.3g", worst) + " at " + where};
}

// ---- 2: metric and patching oracles ----------------------------------------

Outcome oracle_equivalence() {
  Rng rng(77);
  std::size_t auc_ok = 0, pa_ok = 0, f1_ok = 0, patch_ok = 0;
  constexpr std::size_t kInstances = 100;
  for (std::size_t inst = 0; inst < kInstances; ++inst) {
    const std::size_t t = 20 + rng.below(281);
    std::vector<std::uint8_t> labels(t, 0);
    std::size_t pos = 0;
    while (pos < t) {
      const std::size_t run = 1 + rng.below(12);
      const bool anomalous = rng.uniform() < 0.3;
      for (std::size_t i = pos; i < std::min(t, pos + run); ++i) labels[i] = anomalous;
      pos += run;
    }
    labels[0] = 0;
    labels[t - 1] = 1;
    std::vector<double> scores(t);
    // Rounded scores force ties.
    for (std::size_t i = 0; i < t; ++i) scores[i] = std::round((rng.normal() + 1.5 * labels[i]) * 4.0) / 4.0;
    std::vector<std::uint8_t> pred(t);
    for (std::size_t i = 0; i < t; ++i) pred[i] = rng.uniform() < 0.2;

    auc_ok += roc_auc(scores, labels) == testing::auc_pair_count(scores, labels);
    pa_ok += point_adjust(pred, labels) == testing::adjust_by_segment_scan(pred, labels);
    const F1Sweep sweep = best_f1(scores, labels, true);
    const testing::OracleBest oracle = testing::exhaustive_best_f1(scores, labels, true);
    f1_ok += sweep.best.f1 == oracle.f1 && sweep.best.threshold == oracle.threshold;

    const std::size_t p = 1 + rng.below(10);
    const std::size_t f = 1 + rng.below(6);
    const std::size_t n = 1 + rng.below(30);
    const Matrix series = testing::random_matrix(n * p, f, rng);
    patch_ok += unpatchify(patchify(series, p)) == series;
  }
  std::ostringstream d;
  d << "auc " << auc_ok << "/" << kInstances << ", pa " << pa_ok << "/" << kInstances << ", best_f1 " << f1_ok << "/"
    << kInstances << ", patchify roundtrip " << patch_ok << "/" << kInstances;
  return {auc_ok == kInstances && pa_ok == kInstances && f1_ok == kInstances && patch_ok == kInstances, d.str()};
}

// ---- 3: parameter counts ----------------------------------------------------

Outcome param_counts() {
  struct Target {
    Variant v;
    double reference;
  };
  bool ok = true;
  std::ostringstream d;
  for (const Target& t : {Target{Variant::patched_deltanet, 165.4e3}, Target{Variant::pointwise, 77.5e3},
                          Target{Variant::patched_attention, 424.1e3}}) {
    const ModelConfig c = ModelConfig::defaults(t.v);
    const std::size_t n = param_count(c);
    const std::size_t stored = stored_param_count(init_params(c));
    const double rel = (static_cast<double>(n) - t.reference) / t.reference;
    ok = ok && std::abs(rel) <= 0.05 && stored == n;
    d << variant_name(t.v) << " " << n << " (" << fmt("%+.2f", 100 * rel) << "%) ";
  }
  return {ok, d.str()};
}

// ---- 4 and 5: synthetic detection and the gate ablation ---------------------

struct DetectionRun {
  double auc = 0.0;
  double pa_f1 = 0.0;
  double untrained_auc = 0.0;
};

DetectionRun detect(std::uint64_t seed, Variant v, bool with_untrained) {
  SynthConfig sc;
  sc.seed = seed;
  const DatasetBundle data = normalize(synth_generate(sc));
  ModelConfig mc = ModelConfig::defaults(v);
  mc.features = data.features();
  mc.seed = seed;
  TrainConfig tc;
  tc.epochs = 10;
  tc.seed = seed;
  const TrainResult trained = train(data.train, mc, tc);
  const std::vector<std::uint8_t>& labels = *data.test.labels;
  DetectionRun r;
  const EvalReport rep = evaluate(point_scores(trained.params, mc, data.test.values), labels);
  r.auc = rep.roc_auc;
  r.pa_f1 = rep.chosen.f1;
  if (with_untrained) r.untrained_auc = evaluate(point_scores(init_params(mc), mc, data.test.values), labels).roc_auc;
  return r;
}

std::vector<DetectionRun> g_gated;

Outcome synthetic_detection() {
  std::size_t good = 0;
  std::ostringstream d;
  g_gated.clear();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const DetectionRun r = detect(seed, Variant::patched_deltanet, true);
    g_gated.push_back(r);
    const bool ok = r.auc >= 0.90 && r.pa_f1 >= 0.80 && r.auc > r.untrained_auc;
    good += ok;
    d << "seed " << seed << " auc " << fmt("%.3f", r.auc) << " pa_f1 " << fmt("%.3f", r.pa_f1) << " untrained "
      << fmt("%.3f", r.untrained_auc) << (ok ? "; " : " (miss); ");
  }
  d << good << "/5 seeds";
  return {good >= 4, d.str()};
}

Outcome gate_ablation() {
  if (g_gated.empty())
    for (std::uint64_t seed = 1; seed <= 5; ++seed) g_gated.push_back(detect(seed, Variant::patched_deltanet, false));
  std::vector<double> gated, ungated;
  for (const DetectionRun& r : g_gated) gated.push_back(r.auc);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) ungated.push_back(detect(seed, Variant::no_gate, false).auc);
  const double mg = median(gated), mu = median(ungated);
  return {mg >= mu, "median auc gated " + fmt("%.4f", mg) + " vs no-gate " + fmt("%.4f", mu)};
}

// ---- 6: scaling -------------------------------------------------------------

Outcome scaling() {
  BenchConfig bc;
  bc.repetitions = 5;
  bc.warmup = 1;
  const std::vector<BenchRecord> recs = measure(bc);
  const double s_attn = fit_scaling_exponent(recs, Variant::patched_attention);
  const double s_delta = fit_scaling_exponent(recs, Variant::patched_deltanet);
  const double s_point = fit_scaling_exponent(recs, Variant::pointwise);
  bool memory_ok = true, steps_ok = true;
  for (std::size_t length : bc.lengths) {
    const BenchRecord *pw = nullptr, *pd = nullptr;
    for (const BenchRecord& r : recs) {
      if (r.length != length) continue;
      if (r.variant == Variant::pointwise) pw = &r;
      if (r.variant == Variant::patched_deltanet) pd = &r;
    }
    memory_ok = memory_ok && pw && pd && pw->peak_bytes > pd->peak_bytes;
    steps_ok = steps_ok && pd && pd->steps == length / bc.patch;
  }
  const bool slope_ok = s_attn - s_delta >= 0.5;
  std::ostringstream d;
  d << "slopes attention " << fmt("%.3f", s_attn) << " deltanet " << fmt("%.3f", s_delta) << " pointwise "
    << fmt("%.3f", s_point) << " (gap " << fmt("%.3f", s_attn - s_delta) << (slope_ok ? "" : " < 0.5") << "), "
    << "pointwise peak > patched peak " << (memory_ok ? "at every L" : "NOT at every L") << ", delta steps "
    << (steps_ok ? "= floor(L/P)" : "mismatch");
  return {slope_ok && memory_ok && steps_ok, d.str()};
}

// ---- 7: CLI determinism -----------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PDN_CLI_PATH) + " " + args + " >>'" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// synth, train and eval into dir; from the given manifests when replaying.
bool pipeline(const fs::path& dir, const fs::path& replay_from, const fs::path& log) {
  const bool replay = !replay_from.empty();
  fs::create_directories(dir);
  const std::string synth = replay ? "synth --config " + q(replay_from / "data" / "manifest.json")
                                   : std::string("synth --seed 21 --length 4000 --features 8");
  if (run_cli(synth + " --out-dir " + q(dir / "data"), log) != 0) return false;
  const std::string train = replay ? "train --config " + q(replay_from / "model.ckpt.manifest.json")
                                   : std::string("train --epochs 2 --seed 5 --threads 2");
  if (run_cli(train + " --train " + q(dir / "data" / "train.txt") + " --out " + q(dir / "model.ckpt"), log) != 0)
    return false;
  const std::string eval = replay ? "eval --config " + q(replay_from / "eval" / "manifest.json") : std::string("eval");
  return run_cli(eval + " --model " + q(dir / "model.ckpt") + " --test " + q(dir / "data" / "test.txt") +
                     " --labels " + q(dir / "data" / "test_label.txt") + " --out-dir " + q(dir / "eval"),
                 log) == 0;
}

Outcome cli_determinism() {
  testing::TempDir tmp;
  const fs::path log = tmp / "cli.log";
  if (!pipeline(tmp / "a", {}, log) || !pipeline(tmp / "b", {}, log) || !pipeline(tmp / "c", tmp / "a", log))
    return {false, "a CLI step failed: " + testing::slurp(log)};
  const std::vector<std::string> files = {"data/train.txt",    "data/test.txt",  "data/test_label.txt",
                                          "data/segments.json", "model.ckpt",     "eval/report.txt",
                                          "eval/sweep.csv",    "eval/scores.csv"};
  std::size_t same = 0;
  std::string differing;
  for (const std::string& f : files) {
    const std::string a = testing::slurp(tmp / "a" / f);
    const bool ok = !a.empty() && a == testing::slurp(tmp / "b" / f) && a == testing::slurp(tmp / "c" / f);
    same += ok;
    if (!ok) differing += " " + f;
  }
  return {same == files.size(), std::to_string(same) + "/" + std::to_string(files.size()) +
                                    " artifacts bit-identical across two runs and a manifest replay" +
                                    (differing.empty() ? "" : "; differing:" + differing)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient-check", gradient_check},   {2, "oracle-equivalence", oracle_equivalence},
      {3, "param-counts", param_counts},       {4, "synthetic-detection", synthetic_detection},
      {5, "gate-ablation", gate_ablation},     {6, "scaling", scaling},
      {7, "cli-determinism", cli_determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s criterion %d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
