// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include "scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "data_io.hpp"
#include "errors.hpp"

namespace patchdelta {

std::vector<double> reconstruction_point_scores(const Matrix& x, const Matrix& x_hat) {
  if (!x.same_shape(x_hat)) usage_error("reconstruction_point_scores: shape mismatch");
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double e = x_hat(r, c) - x(r, c);
      total += e * e;
    }
    out[r] = total / static_cast<double>(x.cols());
  }
  return out;
}

ScoreSeries point_scores(const ModelParams& params, const ModelConfig& config, const Matrix& test) {
  const std::size_t length = test.rows();
  const std::size_t window = config.window;
  if (length < window)
    data_error("point_scores: test series of length " + std::to_string(length) + " is shorter than the window " +
               std::to_string(window));
  if (test.cols() != config.features)
    data_error("point_scores: test series has " + std::to_string(test.cols()) + " features, model expects " +
               std::to_string(config.features));

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + window <= length; s += window) starts.push_back(s);
  if (starts.back() + window < length) starts.push_back(length - window);

  ScoreSeries out{std::vector<double>(length, 0.0), std::vector<std::uint8_t>(length, 0)};
  const std::size_t span = config.tokens() * config.patch;
  Matrix w(window, config.features);
  for (std::size_t s : starts) {
    std::copy_n(test.row(s).data(), window * config.features, w.data());
    const ModelForward fwd = model_forward(w, params, config, false);
    const std::vector<double> local =
        reconstruction_point_scores(unpatchify(fwd.input), unpatchify(fwd.reconstruction));
    for (std::size_t i = 0; i < span; ++i) {
      if (out.covered[s + i]) continue;
      out.scores[s + i] = local[i];
      out.covered[s + i] = 1;
    }
  }
  return out;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) usage_error("roc_auc: scores and labels differ in length");
  std::size_t n_pos = 0;
  for (std::uint8_t l : labels) n_pos += l != 0;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) data_error("roc_auc: labels must contain both classes");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of 1-based positive ranks with ties at their mean rank, doubled so
  // every quantity stays integral.
  double twice_rank_sum = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) pos_in_group += labels[idx[j++]] != 0;
    const double twice_mean_rank = static_cast<double>(i + 1 + j);  // (i+1) + j
    twice_rank_sum += twice_mean_rank * static_cast<double>(pos_in_group);
    i = j;
  }
  const double p = static_cast<double>(n_pos);
  const double u = (twice_rank_sum - p * (p + 1.0)) / 2.0;
  return u / (p * static_cast<double>(n_neg));
}

std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
  if (predictions.size() != labels.size()) usage_error("point_adjust: predictions and labels differ in length");
  std::vector<std::uint8_t> out(predictions.begin(), predictions.end());
  for (std::size_t i = 0; i < labels.size();) {
    if (!labels[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    bool hit = false;
    while (j < labels.size() && labels[j]) hit |= predictions[j++] != 0;
    if (hit) std::fill(out.begin() + static_cast<std::ptrdiff_t>(i), out.begin() + static_cast<std::ptrdiff_t>(j), 1);
    i = j;
  }
  return out;
}

namespace {

ThresholdRow make_row(double threshold, std::size_t tp, std::size_t fp, std::size_t n_pos) {
  ThresholdRow r;
  r.threshold = threshold;
  r.tp = tp;
  r.fp = fp;
  r.fn = n_pos - tp;
  r.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.recall = n_pos == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(n_pos);
  r.f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + r.fn);
  return r;
}

void check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels, std::size_t& n_pos) {
  if (scores.size() != labels.size()) usage_error("threshold sweep: scores and labels differ in length");
  n_pos = 0;
  for (std::uint8_t l : labels) n_pos += l != 0;
  if (n_pos == 0 || n_pos == labels.size()) data_error("threshold sweep: labels must contain both classes");
}

}  // namespace

ThresholdRow score_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold,
                             bool adjust) {
  std::size_t n_pos = 0;
  check_inputs(scores, labels, n_pos);
  std::vector<std::uint8_t> pred(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= threshold;
  if (adjust) pred = point_adjust(pred, labels);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    tp += pred[i] && labels[i];
    fp += pred[i] && !labels[i];
  }
  return make_row(threshold, tp, fp, n_pos);
}

F1Sweep best_f1(std::span<const double> scores, std::span<const std::uint8_t> labels, bool adjust) {
  std::size_t n_pos = 0;
  check_inputs(scores, labels, n_pos);

  // Each event switches on once the threshold drops to its key: a normal
  // point adds one false positive, and a true positive unit is a single
  // point (unadjusted) or a whole segment keyed by its maximum score.
  struct Event {
    double key;
    std::size_t tp, fp;
  };
  std::vector<Event> events;
  events.reserve(scores.size());
  for (std::size_t i = 0; i < labels.size();) {
    if (!labels[i]) {
      events.push_back({scores[i], 0, 1});
      ++i;
      continue;
    }
    std::size_t j = i;
    double seg_max = -std::numeric_limits<double>::infinity();
    while (j < labels.size() && labels[j]) {
      if (!adjust) events.push_back({scores[j], 1, 0});
      seg_max = std::max(seg_max, scores[j]);
      ++j;
    }
    if (adjust) events.push_back({seg_max, j - i, 0});
    i = j;
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.key > b.key; });

  std::vector<double> thresholds(scores.begin(), scores.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  constexpr double kInf = std::numeric_limits<double>::infinity();
  F1Sweep sweep;
  sweep.rows.reserve(thresholds.size() + 2);
  sweep.rows.push_back(make_row(kInf, 0, 0, n_pos));
  std::size_t tp = 0, fp = 0, e = 0;
  for (double t : thresholds) {
    while (e < events.size() && events[e].key >= t) {
      tp += events[e].tp;
      fp += events[e].fp;
      ++e;
    }
    sweep.rows.push_back(make_row(t, tp, fp, n_pos));
  }
  sweep.rows.push_back(make_row(-kInf, tp, fp, n_pos));

  sweep.best = sweep.rows.front();
  for (const ThresholdRow& r : sweep.rows)
    if (r.f1 > sweep.best.f1) sweep.best = r;
  return sweep;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) usage_error("percentile: empty input");
  if (!(q >= 0.0 && q <= 100.0)) usage_error("percentile: q must lie in [0, 100]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

EvalReport evaluate(const ScoreSeries& s, std::span<const std::uint8_t> labels, const EvalOptions& options) {
  if (s.scores.size() != labels.size() || s.covered.size() != labels.size())
    data_error("evaluate: " + std::to_string(s.scores.size()) + " scores for " + std::to_string(labels.size()) +
               " labels");
  std::vector<double> scores;
  std::vector<std::uint8_t> lab;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!s.covered[i]) continue;
    if (!std::isfinite(s.scores[i])) numeric_error("evaluate: non-finite score at point " + std::to_string(i));
    scores.push_back(s.scores[i]);
    lab.push_back(labels[i]);
  }
  EvalReport r;
  r.mode = options.mode;
  r.n_points = labels.size();
  r.n_scored = scores.size();
  r.roc_auc = roc_auc(scores, lab);
  F1Sweep sweep = best_f1(scores, lab, true);
  r.chosen = options.mode == ThresholdMode::best_f1 ? sweep.best
                                                     : score_threshold(scores, lab, percentile(scores, options.percentile), true);
  r.sweep = std::move(sweep.rows);
  for (std::uint8_t l : lab) r.n_anomalous += l;
  r.tn = r.n_scored - r.chosen.tp - r.chosen.fp - r.chosen.fn;
  return r;
}

std::string report_kv(const EvalReport& r) {
  std::string out;
  auto kv = [&](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
  kv("threshold_mode", r.mode == ThresholdMode::best_f1 ? "best_f1" : "percentile");
  kv("roc_auc", format_double(r.roc_auc));
  kv("pa_f1", format_double(r.chosen.f1));
  kv("precision", format_double(r.chosen.precision));
  kv("recall", format_double(r.chosen.recall));
  kv("threshold", format_double(r.chosen.threshold));
  kv("tp", std::to_string(r.chosen.tp));
  kv("fp", std::to_string(r.chosen.fp));
  kv("fn", std::to_string(r.chosen.fn));
  kv("tn", std::to_string(r.tn));
  kv("n_points", std::to_string(r.n_points));
  kv("n_scored", std::to_string(r.n_scored));
  kv("n_anomalous", std::to_string(r.n_anomalous));
  return out;
}

std::string sweep_csv(const EvalReport& r) {
  std::string out = "threshold,tp,fp,fn,precision,recall,f1\n";
  for (const ThresholdRow& row : r.sweep) {
    out += format_double(row.threshold) + "," + std::to_string(row.tp) + "," + std::to_string(row.fp) + "," +
           std::to_string(row.fn) + "," + format_double(row.precision) + "," + format_double(row.recall) + "," +
           format_double(row.f1) + "\n";
  }
  return out;
}

std::string scores_csv(const ScoreSeries& s, std::span<const std::uint8_t> labels) {
  std::string out = "index,score,covered,label\n";
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    out += std::to_string(i) + "," + format_double(s.scores[i]) + "," + std::to_string(s.covered[i]) + "," +
           (i < labels.size() ? std::to_string(labels[i]) : std::string()) + "\n";
  }
  return out;
}

}  // namespace patchdelta
