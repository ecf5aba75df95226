// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include "data_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "errors.hpp"

namespace patchdelta {

std::string_view anomaly_kind_name(AnomalyKind kind) noexcept {
  switch (kind) {
    case AnomalyKind::spike: return "spike";
    case AnomalyKind::level_shift: return "level_shift";
    case AnomalyKind::drift: return "drift";
  }
  return "unknown";
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream s;
  s << in.rdbuf();
  if (in.bad()) io_error("read failure on '" + path.string() + "'");
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) io_error("write failure on '" + path.string() + "'");
}

// Calls f(line_number, line) for each line, stripping CR before LF. A
// missing newline on the final line is accepted; a trailing empty line is
// not reported.
template <class F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    f(line_no, line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

double parse_field(std::string_view field, const std::filesystem::path& path, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size())
    data_error(where(path, line) + "non-numeric field '" + std::string(field) + "'");
  if (!std::isfinite(v)) data_error(where(path, line) + "non-finite field '" + std::string(field) + "'");
  return v;
}

}  // namespace

Matrix read_series(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::vector<double> values;
  std::size_t cols = 0, rows = 0;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty()) data_error(where(path, line_no) + "empty line");
    std::size_t n = 0;
    while (true) {
      const std::size_t comma = line.find(',');
      values.push_back(parse_field(line.substr(0, comma), path, line_no));
      ++n;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (rows == 0) cols = n;
    if (n != cols)
      data_error(where(path, line_no) + "ragged row: " + std::to_string(n) + " fields, expected " + std::to_string(cols));
    ++rows;
  });
  if (rows == 0) data_error(path.string() + ": no data rows");
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

std::vector<std::uint8_t> read_labels(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::vector<std::uint8_t> labels;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    line = trim(line);
    int v = -1;
    const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
    if (line.empty() || res.ec != std::errc() || res.ptr != line.data() + line.size() || (v != 0 && v != 1)) {
      // SMD label files occasionally store labels as "0.0"/"1.0".
      const double d = parse_field(line, path, line_no);
      if (d != 0.0 && d != 1.0) data_error(where(path, line_no) + "label '" + std::string(line) + "' is not 0 or 1");
      v = static_cast<int>(d);
    }
    labels.push_back(static_cast<std::uint8_t>(v));
  });
  return labels;
}

void write_series(const std::filesystem::path& path, const Matrix& series) {
  std::string out;
  out.reserve(series.size() * 12);
  for (std::size_t r = 0; r < series.rows(); ++r) {
    for (std::size_t c = 0; c < series.cols(); ++c) {
      if (c != 0) out += ',';
      out += format_double(series(r, c));
    }
    out += '\n';
  }
  write_text(path, out);
}

void write_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::string out;
  out.reserve(labels.size() * 2);
  for (std::uint8_t l : labels) {
    out += static_cast<char>('0' + l);
    out += '\n';
  }
  write_text(path, out);
}

DatasetBundle load_smd(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                       const std::filesystem::path& label_path) {
  DatasetBundle b;
  b.train.values = read_series(train_path);
  if (!test_path.empty()) {
    b.test.values = read_series(test_path);
    if (b.test.features() != b.train.features())
      data_error("feature count mismatch: train has " + std::to_string(b.train.features()) + ", test has " +
                 std::to_string(b.test.features()));
    if (!label_path.empty()) {
      auto labels = read_labels(label_path);
      if (labels.size() != b.test.length())
        data_error("label length " + std::to_string(labels.size()) + " does not match test length " +
                   std::to_string(b.test.length()));
      b.test.labels = std::move(labels);
    }
  } else if (!label_path.empty()) {
    usage_error("labels given without a test split");
  }
  b.train.validate();
  if (!test_path.empty()) b.test.validate();
  return b;
}

NormStats compute_stats(const Matrix& train) {
  if (train.rows() == 0) data_error("cannot compute statistics of an empty series");
  NormStats s;
  const std::size_t f = train.cols();
  const double n = static_cast<double>(train.rows());
  s.mean.assign(f, 0.0);
  s.stddev.assign(f, 0.0);
  for (std::size_t r = 0; r < train.rows(); ++r)
    for (std::size_t c = 0; c < f; ++c) s.mean[c] += train(r, c);
  for (double& m : s.mean) m /= n;
  for (std::size_t r = 0; r < train.rows(); ++r)
    for (std::size_t c = 0; c < f; ++c) {
      const double e = train(r, c) - s.mean[c];
      s.stddev[c] += e * e;
    }
  for (double& v : s.stddev) v = std::max(std::sqrt(v / n), NormStats::kStdFloor);
  return s;
}

Matrix apply_norm(const Matrix& series, const NormStats& stats) {
  if (stats.mean.size() != series.cols() || stats.stddev.size() != series.cols())
    data_error("normalization stats cover " + std::to_string(stats.mean.size()) + " features, series has " +
               std::to_string(series.cols()));
  Matrix out(series.rows(), series.cols());
  for (std::size_t r = 0; r < series.rows(); ++r)
    for (std::size_t c = 0; c < series.cols(); ++c) out(r, c) = (series(r, c) - stats.mean[c]) / stats.stddev[c];
  return out;
}

Matrix denormalize(const Matrix& series, const NormStats& stats) {
  if (stats.mean.size() != series.cols()) data_error("normalization stats do not match series width");
  Matrix out(series.rows(), series.cols());
  for (std::size_t r = 0; r < series.rows(); ++r)
    for (std::size_t c = 0; c < series.cols(); ++c) out(r, c) = series(r, c) * stats.stddev[c] + stats.mean[c];
  return out;
}

DatasetBundle normalize(DatasetBundle bundle) {
  if (bundle.stats) usage_error("normalize: bundle is already normalized");
  NormStats stats = compute_stats(bundle.train.values);
  bundle.train.values = apply_norm(bundle.train.values, stats);
  if (!bundle.test.values.empty()) bundle.test.values = apply_norm(bundle.test.values, stats);
  bundle.stats = std::move(stats);
  return bundle;
}

void SynthConfig::validate() const {
  if (train_length == 0 || test_length == 0 || features == 0) usage_error("synth: lengths and features must be positive");
  if (!(period_min > 0.0) || period_max < period_min) usage_error("synth: invalid period range");
  if (amplitude_min < 0.0 || amplitude_max < amplitude_min) usage_error("synth: invalid amplitude range");
  if (!(noise_std > 0.0)) usage_error("synth: noise_std must be positive");
  for (const auto* spec : {&spikes, &level_shifts, &drifts}) {
    if (spec->count == 0) continue;
    if (spec->min_len < 1 || spec->max_len < spec->min_len) usage_error("synth: invalid anomaly length range");
    if (spec->max_len > test_length)
      usage_error("synth: anomaly length " + std::to_string(spec->max_len) + " exceeds test length " +
                  std::to_string(test_length));
    if (spec->min_magnitude < 0.0 || spec->max_magnitude < spec->min_magnitude)
      usage_error("synth: invalid anomaly magnitude range");
  }
}

namespace {

struct Wave {
  double period, amplitude, phase;
};

void fill_signal(Matrix& m, std::size_t t0, const std::vector<Wave>& waves, double noise_std, Rng& rng) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double t = static_cast<double>(t0 + r);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const Wave& w = waves[c];
      m(r, c) = w.amplitude * std::sin(2.0 * std::numbers::pi * t / w.period + w.phase) + noise_std * rng.normal();
    }
  }
}

bool overlaps(const std::vector<Segment>& placed, std::size_t start, std::size_t end) {
  // One normal step between segments keeps their label runs distinct.
  for (const Segment& s : placed)
    if (start < s.end + 1 && s.start < end + 1) return true;
  return false;
}

}  // namespace

DatasetBundle synth_generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t f = config.features;
  const std::size_t groups = config.period_groups == 0 ? f : std::min(config.period_groups, f);
  std::vector<double> periods(groups);
  for (double& p : periods) p = rng.uniform(config.period_min, config.period_max);
  std::vector<Wave> waves(f);
  for (std::size_t c = 0; c < f; ++c)
    waves[c] = {periods[c % groups], rng.uniform(config.amplitude_min, config.amplitude_max),
                rng.uniform(0.0, 2.0 * std::numbers::pi)};

  DatasetBundle b;
  b.train.values = Matrix(config.train_length, f);
  fill_signal(b.train.values, 0, waves, config.noise_std, rng);
  b.test.values = Matrix(config.test_length, f);
  fill_signal(b.test.values, config.train_length, waves, config.noise_std, rng);
  std::vector<std::uint8_t> labels(config.test_length, 0);

  // Longest kinds first so placement by rejection rarely fails.
  const std::array<std::pair<AnomalyKind, const AnomalySpec*>, 3> kinds{
      {{AnomalyKind::drift, &config.drifts}, {AnomalyKind::level_shift, &config.level_shifts},
       {AnomalyKind::spike, &config.spikes}}};
  constexpr int kMaxAttempts = 10000;
  for (const auto& [kind, spec] : kinds) {
    for (std::size_t a = 0; a < spec->count; ++a) {
      const std::size_t len = spec->min_len + rng.below(spec->max_len - spec->min_len + 1);
      std::size_t start = 0;
      int attempt = 0;
      for (; attempt < kMaxAttempts; ++attempt) {
        start = rng.below(config.test_length - len + 1);
        if (!overlaps(b.segments, start, start + len)) break;
      }
      if (attempt == kMaxAttempts)
        usage_error("synth: cannot place " + std::string(anomaly_kind_name(kind)) + " of length " + std::to_string(len) +
                    " without overlap; the anomaly spec exceeds the test series");
      b.segments.push_back({start, start + len, kind});

      const std::size_t n_affected = 1 + rng.below(std::max<std::size_t>(1, f / 2));
      std::vector<std::size_t> channels(f);
      for (std::size_t c = 0; c < f; ++c) channels[c] = c;
      rng.shuffle(std::span(channels));
      for (std::size_t i = 0; i < n_affected; ++i) {
        const std::size_t c = channels[i];
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double magnitude = sign * config.noise_std * rng.uniform(spec->min_magnitude, spec->max_magnitude);
        for (std::size_t t = 0; t < len; ++t) {
          const double shape = kind == AnomalyKind::drift ? 1.0 + static_cast<double>(t) / static_cast<double>(len) : 1.0;
          b.test.values(start + t, c) += magnitude * shape;
        }
      }
      std::fill(labels.begin() + static_cast<std::ptrdiff_t>(start),
                labels.begin() + static_cast<std::ptrdiff_t>(start + len), std::uint8_t{1});
    }
  }
  std::sort(b.segments.begin(), b.segments.end(), [](const Segment& x, const Segment& y) { return x.start < y.start; });
  b.test.labels = std::move(labels);
  return b;
}

std::string segments_json(std::span<const Segment> segments) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const Segment& s : segments)
    arr.push_back({{"start", s.start}, {"end", s.end}, {"kind", std::string(anomaly_kind_name(s.kind))}});
  nlohmann::ordered_json doc;
  doc["segments"] = std::move(arr);
  return doc.dump(2) + "\n";
}

void write_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) io_error("cannot create directory '" + dir.string() + "': " + ec.message());
  write_series(dir / "train.txt", bundle.train.values);
  if (!bundle.test.values.empty()) {
    write_series(dir / "test.txt", bundle.test.values);
    if (bundle.test.labels) write_labels(dir / "test_label.txt", *bundle.test.labels);
  }
  write_text(dir / "segments.json", segments_json(bundle.segments));
}

}  // namespace patchdelta
