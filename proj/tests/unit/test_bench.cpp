// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include <doctest.h>

#include <cmath>

#include "bench.hpp"
#include "errors.hpp"

using namespace patchdelta;

namespace {

BenchConfig tiny() {
  BenchConfig c;
  c.lengths = {100, 200, 400};
  c.batch = 2;
  c.repetitions = 5;
  c.warmup = 0;
  c.features = 4;
  c.d_model = 8;
  c.d_ff = 16;
  return c;
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("scaling exponent recovers exact power laws") {
    const std::vector<double> ls{1000, 4000, 16000, 64000};
    std::vector<double> lin, quad, scaled;
    for (double l : ls) {
      lin.push_back(3.0 * l);
      quad.push_back(1e-6 * l * l);
      scaled.push_back(7.0 * std::pow(l, 1.37));
    }
    CHECK(std::abs(fit_scaling_exponent(ls, lin) - 1.0) < 1e-9);
    CHECK(std::abs(fit_scaling_exponent(ls, quad) - 2.0) < 1e-9);
    CHECK(std::abs(fit_scaling_exponent(ls, scaled) - 1.37) < 1e-9);
  }

  TEST_CASE("scaling exponent needs three positive points") {
    const std::vector<double> two{1, 2};
    CHECK_THROWS_AS(fit_scaling_exponent(two, two), Error);
    const std::vector<double> ls{1, 2, 4}, bad{1, 0, 3};
    CHECK_THROWS_AS(fit_scaling_exponent(ls, bad), Error);
  }

  TEST_CASE("config validation") {
    BenchConfig c = tiny();
    c.repetitions = 4;
    CHECK_THROWS_AS(c.validate(), Error);
    c = tiny();
    c.lengths = {200, 100, 400};
    CHECK_THROWS_AS(c.validate(), Error);
    c = tiny();
    c.batch = 0;
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("csv header, format and parse roundtrip") {
    std::vector<BenchRecord> recs{
        {Variant::patched_attention, 1000, 100, 16, 12.5, 0.25, 123456, true, 0, false},
        {Variant::patched_deltanet, 1000, 100, 16, 3.0, 0.125, 999, true, 100, false},
    };
    const std::string csv = bench_csv(recs);
    CHECK(csv.rfind("variant,L,N,batch,median_ms,iqr_ms,peak_bytes\n", 0) == 0);
    CHECK(csv.find("patched-attention,1000,100,16,12.5,0.25,123456\n") != std::string::npos);
    const std::vector<BenchRecord> back = parse_bench_csv(csv);
    REQUIRE(back.size() == 2);
    CHECK(back[1].variant == Variant::patched_deltanet);
    CHECK(back[1].tokens == 100);
    CHECK(back[1].median_ms == 3.0);
    CHECK(back[0].peak_bytes == 123456);
    CHECK_THROWS_AS(parse_bench_csv("a,b\n1,2\n"), Error);
  }

  TEST_CASE("measure reports token counts, recurrence steps and memory") {
    const std::vector<BenchRecord> recs = measure(tiny());
    REQUIRE(recs.size() == 9);
    for (const BenchRecord& r : recs) {
      CAPTURE(variant_name(r.variant));
      CAPTURE(r.length);
      CHECK_FALSE(r.skipped);
      CHECK(r.median_ms > 0.0);
      CHECK(r.peak_bytes > 0);
      const std::size_t p = r.variant == Variant::pointwise ? 1 : 10;
      CHECK(r.tokens == r.length / p);
      if (uses_delta_core(r.variant)) CHECK(r.steps == r.length / p);
    }
    // The pointwise core keeps L hidden states where the patched core keeps L/P.
    for (std::size_t i = 0; i < 3; ++i) {
      const BenchRecord& pw = recs[3 + i];
      const BenchRecord& pd = recs[6 + i];
      CHECK(pw.variant == Variant::pointwise);
      CHECK(pd.variant == Variant::patched_deltanet);
      CHECK(pw.peak_bytes > pd.peak_bytes);
    }
    // The attention weight matrix grows with N^2.
    CHECK(recs[2].peak_bytes > 3 * recs[1].peak_bytes / 2);
    const std::string svg = render_svg(recs);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
  }

  TEST_CASE("a pair over the memory limit is skipped, not run") {
    BenchConfig c = tiny();
    c.variants = {Variant::patched_attention};
    c.memory_limit_bytes = 1;
    const std::vector<BenchRecord> recs = measure(c);
    REQUIRE(recs.size() == 3);
    for (const BenchRecord& r : recs) CHECK(r.skipped);
  }
}
