// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include <doctest.h>

#include <json.hpp>

#include <cmath>

#include "data_io.hpp"
#include "errors.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace patchdelta;
using patchdelta::testing::fixture;

namespace {

std::string error_of(const std::function<void()>& f, ErrorKind* kind = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (kind) *kind = e.kind();
    return e.what();
  }
  return {};
}

SynthConfig quiet(std::uint64_t seed) {
  SynthConfig c;
  c.train_length = 500;
  c.test_length = 500;
  c.features = 3;
  c.spikes.count = 0;
  c.level_shifts.count = 0;
  c.drifts.count = 0;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("data_io") {
  TEST_CASE("a three-line two-feature fixture parses") {
    const Matrix m = read_series(fixture("three_by_two.txt"));
    CHECK(m == Matrix::from_rows({{1.5, 2}, {-3, 4.25}, {0, 1e-3}}));
    CHECK(read_series(fixture("crlf.txt")) == Matrix::from_rows({{1, 2}, {3, 4}}));
  }

  TEST_CASE("parse errors carry line numbers") {
    ErrorKind kind{};
    std::string msg = error_of([] { read_series(fixture("ragged.txt")); }, &kind);
    CHECK(kind == ErrorKind::data);
    CHECK(msg.find(":2") != std::string::npos);
    msg = error_of([] { read_series(fixture("non_numeric.txt")); }, &kind);
    CHECK(kind == ErrorKind::data);
    CHECK(msg.find(":2") != std::string::npos);
    msg = error_of([] { read_series(fixture("does_not_exist.txt")); }, &kind);
    CHECK(kind == ErrorKind::io);
  }

  TEST_CASE("label length mismatch names both lengths") {
    const std::string msg = error_of(
        [] { load_smd(fixture("three_by_two.txt"), fixture("three_by_two.txt"), fixture("labels_two.txt")); });
    CHECK(msg.find('2') != std::string::npos);
    CHECK(msg.find('3') != std::string::npos);
    const DatasetBundle b =
        load_smd(fixture("three_by_two.txt"), fixture("three_by_two.txt"), fixture("labels_three.txt"));
    CHECK(*b.test.labels == std::vector<std::uint8_t>{0, 1, 0});
  }

  TEST_CASE("series text roundtrip is exact") {
    testing::TempDir dir;
    Rng rng(1);
    Matrix m = testing::random_matrix(50, 4, rng, 1e3);
    m(0, 0) = 0.1;
    m(1, 1) = -0.0;
    m(2, 2) = 1e-300;
    write_series(dir / "s.txt", m);
    CHECK(read_series(dir / "s.txt") == m);
    const std::vector<std::uint8_t> labels{0, 1, 1, 0};
    write_labels(dir / "l.txt", labels);
    CHECK(read_labels(dir / "l.txt") == labels);
  }

  TEST_CASE("z-score normalization uses train statistics") {
    DatasetBundle b;
    b.train.values = Matrix::from_rows({{3, 1}, {7, 1}});  // mean 5, std 2; constant
    b.test.values = Matrix::from_rows({{7, 1}, {5, 4}});
    b.test.labels = std::vector<std::uint8_t>{0, 1};
    const DatasetBundle n = normalize(b);
    CHECK(n.test.values(0, 0) == doctest::Approx(1.0));
    CHECK(n.test.values(1, 0) == doctest::Approx(0.0));
    CHECK(n.train.values(0, 1) == 0.0);
    CHECK(n.stats->stddev[1] == NormStats::kStdFloor);
    CHECK_THROWS_AS(normalize(n), Error);
  }

  TEST_CASE("normalized train split has zero mean and unit std, and inverts") {
    Rng rng(2);
    Matrix m = testing::random_matrix(1000, 5, rng, 3.0);
    for (std::size_t r = 0; r < m.rows(); ++r) m(r, 2) += 40.0;
    const NormStats s = compute_stats(m);
    const Matrix z = apply_norm(m, s);
    const NormStats zs = compute_stats(z);
    for (std::size_t f = 0; f < 5; ++f) {
      CHECK(std::abs(zs.mean[f]) <= 1e-10);
      CHECK(std::abs(zs.stddev[f] - 1.0) <= 1e-6);
    }
    const Matrix back = denormalize(z, s);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::abs(back.data()[i] - m.data()[i]) <= 1e-12 * std::max(1.0, std::abs(m.data()[i])));
  }

  TEST_CASE("zero anomalies give all-zero labels") {
    const DatasetBundle b = synth_generate(quiet(1));
    CHECK(b.segments.empty());
    for (std::uint8_t l : *b.test.labels) CHECK(l == 0);
    CHECK_FALSE(b.train.labels.has_value());
  }

  TEST_CASE("one spike of 8 noise_std produces a single labeled point") {
    SynthConfig c = quiet(2);
    c.spikes = {1, 1, 1, 8.0, 8.0};
    const DatasetBundle clean = synth_generate(quiet(2));
    const DatasetBundle b = synth_generate(c);
    REQUIRE(b.segments.size() == 1);
    const Segment s = b.segments[0];
    CHECK(s.end == s.start + 1);
    std::size_t ones = 0;
    for (std::uint8_t l : *b.test.labels) ones += l;
    CHECK(ones == 1);
    CHECK((*b.test.labels)[s.start] == 1);
    // The injected offset is exactly 8 noise_std on every channel it touches.
    CHECK(b.train.values == clean.train.values);
    for (std::size_t t = 0; t < c.test_length; ++t) {
      for (std::size_t f = 0; f < c.features; ++f) {
        const double d = b.test.values(t, f) - clean.test.values(t, f);
        if (t != s.start) CHECK(d == 0.0);
        else CHECK((d == 0.0 || std::abs(std::abs(d) - 0.8) < 1e-12));
      }
    }
  }

  TEST_CASE("labels exactly cover the injected segments") {
    SynthConfig c;
    c.seed = 3;
    const DatasetBundle b = synth_generate(c);
    CHECK(b.segments.size() == c.spikes.count + c.level_shifts.count + c.drifts.count);
    std::vector<std::uint8_t> expect(c.test_length, 0);
    for (std::size_t i = 0; i < b.segments.size(); ++i) {
      const Segment& s = b.segments[i];
      CHECK(s.end <= c.test_length);
      if (i > 0) CHECK(b.segments[i - 1].end <= s.start);
      for (std::size_t t = s.start; t < s.end; ++t) expect[t] = 1;
    }
    CHECK(*b.test.labels == expect);
  }

  TEST_CASE("every labeled point is displaced by at least the minimum magnitude") {
    SynthConfig c;
    c.seed = 4;
    SynthConfig clean_cfg = c;
    clean_cfg.spikes.count = clean_cfg.level_shifts.count = clean_cfg.drifts.count = 0;
    // Same seed and an identical draw order up to the anomaly stage.
    const DatasetBundle clean = synth_generate(clean_cfg);
    const DatasetBundle b = synth_generate(c);
    for (const Segment& s : b.segments) {
      for (std::size_t t = s.start; t < s.end; ++t) {
        double biggest = 0;
        for (std::size_t f = 0; f < c.features; ++f)
          biggest = std::max(biggest, std::abs(b.test.values(t, f) - clean.test.values(t, f)));
        CHECK(biggest >= c.noise_std * 6.0 - 1e-12);
      }
    }
  }

  TEST_CASE("same seed gives bit-identical bundles") {
    SynthConfig c;
    c.seed = 5;
    const DatasetBundle a = synth_generate(c), b = synth_generate(c);
    CHECK(a.train.values == b.train.values);
    CHECK(a.test.values == b.test.values);
    CHECK(a.segments == b.segments);
    c.seed = 6;
    CHECK_FALSE(synth_generate(c).test.values == a.test.values);
  }

  TEST_CASE("an anomaly spec exceeding the series is rejected") {
    SynthConfig c = quiet(7);
    c.level_shifts = {1, 600, 600, 6, 10};
    CHECK_THROWS_AS(synth_generate(c), Error);
    c.level_shifts = {50, 20, 20, 6, 10};
    CHECK_THROWS_AS(synth_generate(c), Error);
  }

  TEST_CASE("bundle export writes SMD files and a segment sidecar") {
    testing::TempDir dir;
    SynthConfig c = quiet(8);
    c.spikes = {3, 1, 1, 6, 10};
    const DatasetBundle b = synth_generate(c);
    write_bundle(dir.path(), b);
    const auto j = nlohmann::json::parse(testing::slurp(dir / "segments.json"));
    REQUIRE(j["segments"].size() == 3);
    CHECK(j["segments"][0]["kind"] == "spike");
    CHECK(j["segments"][0]["end"].get<std::size_t>() == j["segments"][0]["start"].get<std::size_t>() + 1);
    const DatasetBundle r = load_smd(dir / "train.txt", dir / "test.txt", dir / "test_label.txt");
    CHECK(r.train.values == b.train.values);
    CHECK(r.test.values == b.test.values);
    CHECK(*r.test.labels == *b.test.labels);
  }
}
