// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// Log-log latency and memory curves for bench records.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "bench.hpp"

namespace patchdelta {
namespace {

constexpr double kPanelW = 420, kPanelH = 300, kMargin = 60, kGap = 40;
constexpr std::array<const char*, 4> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct Axis {
  double lo, hi;  // log10 range
  static Axis covering(double mn, double mx) {
    double lo = std::floor(std::log10(mn));
    double hi = std::ceil(std::log10(mx));
    if (hi <= lo) hi = lo + 1;
    return {lo, hi};
  }
  double map(double v, double px0, double px1) const { return px0 + (std::log10(v) - lo) / (hi - lo) * (px1 - px0); }
};

void panel(std::string& svg, double x0, const std::string& title, const std::string& ylabel,
           const std::map<Variant, std::vector<std::pair<double, double>>>& series) {
  double xmn = INFINITY, xmx = -INFINITY, ymn = INFINITY, ymx = -INFINITY;
  for (const auto& [v, pts] : series)
    for (auto [x, y] : pts) {
      xmn = std::min(xmn, x), xmx = std::max(xmx, x);
      ymn = std::min(ymn, y), ymx = std::max(ymx, y);
    }
  const double left = x0 + kMargin, right = x0 + kPanelW - 10, top = 40, bottom = kPanelH - 40;
  svg += "<text x=\"" + num((left + right) / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
  svg += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(right - left) + "\" height=\"" +
         num(bottom - top) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  if (series.empty() || !(ymn > 0) || !(xmn > 0)) {
    svg += "<text x=\"" + num((left + right) / 2) + "\" y=\"" + num((top + bottom) / 2) +
           "\" text-anchor=\"middle\" font-size=\"12\">no data</text>\n";
    return;
  }
  const Axis ax = Axis::covering(xmn, xmx), ay = Axis::covering(ymn, ymx);
  for (double e = ax.lo; e <= ax.hi; e += 1) {
    const double px = ax.map(std::pow(10.0, e), left, right);
    svg += "<line x1=\"" + num(px) + "\" y1=\"" + num(top) + "\" x2=\"" + num(px) + "\" y2=\"" + num(bottom) +
           "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + num(px) + "\" y=\"" + num(bottom + 16) + "\" text-anchor=\"middle\" font-size=\"10\">" +
           tick_label(std::pow(10.0, e)) + "</text>\n";
  }
  for (double e = ay.lo; e <= ay.hi; e += 1) {
    const double py = ay.map(std::pow(10.0, e), bottom, top);
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(py) + "\" x2=\"" + num(right) + "\" y2=\"" + num(py) +
           "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py + 4) + "\" text-anchor=\"end\" font-size=\"10\">" +
           tick_label(std::pow(10.0, e)) + "</text>\n";
  }
  svg += "<text x=\"" + num((left + right) / 2) + "\" y=\"" + num(kPanelH - 8) +
         "\" text-anchor=\"middle\" font-size=\"12\">sequence length L</text>\n";
  svg += "<text x=\"" + num(x0 + 14) + "\" y=\"" + num((top + bottom) / 2) + "\" text-anchor=\"middle\" font-size=\"12\" " +
         "transform=\"rotate(-90 " + num(x0 + 14) + " " + num((top + bottom) / 2) + ")\">" + ylabel + "</text>\n";
  for (const auto& [v, pts] : series) {
    const char* color = kColors[static_cast<std::size_t>(v) % kColors.size()];
    std::string path;
    for (auto [x, y] : pts) path += num(ax.map(x, left, right)) + "," + num(ay.map(y, bottom, top)) + " ";
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + path + "\"/>\n";
    for (auto [x, y] : pts)
      svg += "<circle cx=\"" + num(ax.map(x, left, right)) + "\" cy=\"" + num(ay.map(y, bottom, top)) + "\" r=\"3\" fill=\"" +
             color + "\"/>\n";
  }
}

}  // namespace

std::string render_svg(std::span<const BenchRecord> records) {
  std::map<Variant, std::vector<std::pair<double, double>>> latency, memory;
  for (const BenchRecord& r : records) {
    if (r.skipped) continue;
    if (r.median_ms > 0) latency[r.variant].emplace_back(static_cast<double>(r.length), r.median_ms);
    if (r.alloc_tracked && r.peak_bytes > 0)
      memory[r.variant].emplace_back(static_cast<double>(r.length), static_cast<double>(r.peak_bytes) / (1024.0 * 1024.0));
  }
  for (auto* m : {&latency, &memory})
    for (auto& [v, pts] : *m) std::sort(pts.begin(), pts.end());

  const double width = 2 * kPanelW + kGap, height = kPanelH + 30 + 20 * 4;
  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\" font-family=\"sans-serif\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  panel(svg, 0, "Forward latency (batch)", "median ms", latency);
  panel(svg, kPanelW + kGap, "Peak tracked allocation", "MiB", memory);
  double ly = kPanelH + 20;
  std::map<Variant, bool> seen;
  for (const BenchRecord& r : records) seen[r.variant] = true;
  for (const auto& [v, _] : seen) {
    const char* color = kColors[static_cast<std::size_t>(v) % kColors.size()];
    svg += "<rect x=\"" + num(kMargin) + "\" y=\"" + num(ly - 9) + "\" width=\"14\" height=\"4\" fill=\"" + color + "\"/>\n";
    svg += "<text x=\"" + num(kMargin + 20) + "\" y=\"" + num(ly - 4) + "\" font-size=\"12\">" +
           std::string(variant_name(v)) + "</text>\n";
    ly += 20;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace patchdelta
