#pragma once

// Minimal self-contained SVG plots of report files.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "torusq/error.hpp"
#include "torusq/format.hpp"

namespace torusq {

enum class PlotKind { loglog_scaling, deviation_vs_radius, spectrum_heatmap };

inline PlotKind parse_plot_kind(const std::string& name) {
  if (name == "loglog-scaling") return PlotKind::loglog_scaling;
  if (name == "deviation-vs-R") return PlotKind::deviation_vs_radius;
  if (name == "spectrum-heatmap") return PlotKind::spectrum_heatmap;
  throw ConfigError("kind", "unknown plot kind '" + name + "'");
}

namespace detail {

struct Frame {
  double x0, x1, y0, y1;
  static constexpr double width = 640, height = 480, margin = 60;

  double sx(double x) const { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); }
  double sy(double y) const { return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin); }
};

inline Frame fit_frame(const std::vector<double>& xs, const std::vector<double>& ys) {
  auto [xlo, xhi] = std::minmax_element(xs.begin(), xs.end());
  auto [ylo, yhi] = std::minmax_element(ys.begin(), ys.end());
  Frame f{*xlo, *xhi, *ylo, *yhi};
  if (f.x1 == f.x0) f.x1 = f.x0 + 1;
  if (f.y1 == f.y0) f.y1 = f.y0 + 1;
  const double px = 0.05 * (f.x1 - f.x0), py = 0.05 * (f.y1 - f.y0);
  f.x0 -= px;
  f.x1 += px;
  f.y0 -= py;
  f.y1 += py;
  return f;
}

inline void svg_open(std::ostringstream& s, const std::string& title) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
  s << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  s << "<text x=\"320\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" << title
    << "</text>\n";
}

inline void svg_axes(std::ostringstream& s, const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  const double left = Frame::margin, bottom = Frame::height - Frame::margin;
  s << "<g stroke=\"black\" stroke-width=\"1\">\n";
  s << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << Frame::width - Frame::margin << "\" y2=\""
    << bottom << "\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << left << "\" y2=\"" << Frame::margin << "\"/>\n";
  s << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 4.0, y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    char bx[32], by[32];
    std::snprintf(bx, sizeof bx, "%.3g", x);
    std::snprintf(by, sizeof by, "%.3g", y);
    s << "<text x=\"" << f.sx(x) << "\" y=\"" << bottom + 16 << "\" text-anchor=\"middle\">" << bx << "</text>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << f.sy(y) + 4 << "\" text-anchor=\"end\">" << by << "</text>\n";
  }
  s << "<text x=\"320\" y=\"" << Frame::height - 15 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  s << "<text x=\"15\" y=\"240\" text-anchor=\"middle\" transform=\"rotate(-90 15 240)\">" << ylabel << "</text>\n";
  s << "</g>\n";
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("input", "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("input", std::string("malformed JSON: ") + e.what());
  }
}

inline std::string plot_scaling(const nlohmann::json& report) {
  if (!report.is_object() || !report.contains("fit")) throw ConfigError("input", "not a scaling report");
  const auto& fit = report.at("fit");
  std::vector<double> xs, ys;
  for (const auto& pair : fit.at("pairs")) {
    xs.push_back(std::log10(pair.at("p").get<double>()));
    ys.push_back(std::log10(pair.at("value").get<double>()));
  }
  if (xs.empty()) throw ConfigError("input", "scaling report has no data");
  const double slope = fit.at("slope").get<double>(), intercept = fit.at("intercept").get<double>();
  const Frame f = fit_frame(xs, ys);
  std::ostringstream s;
  svg_open(s, "log-log scaling (slope " + format_double(slope) + ")");
  s << "<!-- slope=" << format_double(slope) << " intercept=" << format_double(intercept) << " -->\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    s << "<!-- point log10p=" << format_double(xs[i]) << " log10value=" << format_double(ys[i]) << " -->\n";
  }
  svg_axes(s, f, "log10 p", "log10 value");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    s << "<circle cx=\"" << f.sx(xs[i]) << "\" cy=\"" << f.sy(ys[i]) << "\" r=\"3\" fill=\"steelblue\"/>\n";
  }
  // Fitted line in natural logs: log v = intercept + slope log p.
  const auto line_y = [&](double lx) { return (intercept + slope * lx * std::log(10.0)) / std::log(10.0); };
  const double xa = *std::min_element(xs.begin(), xs.end()), xb = *std::max_element(xs.begin(), xs.end());
  s << "<line x1=\"" << f.sx(xa) << "\" y1=\"" << f.sy(line_y(xa)) << "\" x2=\"" << f.sx(xb) << "\" y2=\""
    << f.sy(line_y(xb)) << "\" stroke=\"firebrick\" stroke-width=\"1.5\"/>\n";
  s << "</svg>\n";
  return s.str();
}

inline std::string plot_deviation(const nlohmann::json& report) {
  if (!report.is_object() || !report.contains("radii")) throw ConfigError("input", "not a shrinking-target report");
  std::vector<double> xs, ys;
  for (const auto& row : report.at("radii")) {
    xs.push_back(row.at("radius").get<double>());
    ys.push_back(row.at("max_deviation").get<double>());
  }
  if (xs.empty()) throw ConfigError("input", "report has no radii");
  const Frame f = fit_frame(xs, ys);
  std::ostringstream s;
  svg_open(s, "max deviation vs R");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    s << "<!-- radius=" << format_double(xs[i]) << " deviation=" << format_double(ys[i]) << " -->\n";
  }
  svg_axes(s, f, "R", "max |mu_G(B) - vol(B)|");
  s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double next = i + 1 < xs.size() ? xs[i + 1] : xs[i];
    s << f.sx(xs[i]) << ',' << f.sy(ys[i]) << ' ' << f.sx(next) << ',' << f.sy(ys[i]) << ' ';
  }
  s << "\"/>\n</svg>\n";
  return s.str();
}

inline std::string plot_heatmap(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("input", "cannot open " + csv_path);
  std::string header;
  std::getline(in, header);
  if (header != "v_1,v_2,re,im,abs") throw ConfigError("input", "heatmap needs a two-dimensional spectrum CSV");
  std::vector<std::array<double, 3>> cells;
  double peak = 0, extent = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    std::array<double, 5> f{};
    std::stringstream ss(line);
    std::string item;
    for (std::size_t k = 0; k < 5; ++k) {
      if (!std::getline(ss, item, ',')) throw ConfigError("input", "short CSV row");
      f[k] = std::stod(item);
    }
    cells.push_back({f[0], f[1], f[4]});
    extent = std::max({extent, f[0] + 1, f[1] + 1});
  }
  if (cells.empty()) throw ConfigError("input", "spectrum CSV has no rows");
  // The v = 0 entry is p^m; scale colours by the largest nontrivial value.
  for (const auto& c : cells) {
    if (c[0] != 0 || c[1] != 0) peak = std::max(peak, c[2]);
  }
  if (peak == 0) peak = 1;
  const double cell = (Frame::width - 2 * Frame::margin) / extent;
  std::ostringstream s;
  svg_open(s, "|S(v)| heatmap");
  s << "<!-- size=" << format_double(extent) << " max_nontrivial=" << format_double(peak) << " -->\n";
  for (const auto& c : cells) {
    const double t = std::min(1.0, c[2] / peak);
    const int shade = static_cast<int>(std::lround(255 * (1 - t)));
    s << "<rect x=\"" << Frame::margin + c[0] * cell << "\" y=\"" << Frame::margin + c[1] * cell * 0.75
      << "\" width=\"" << cell << "\" height=\"" << cell * 0.75 << "\" fill=\"rgb(" << shade << ',' << shade
      << ",255)\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace detail

/// Renders `input` (JSON report or spectrum CSV) to SVG text.
inline std::string render_plot(const std::string& input, PlotKind kind) {
  switch (kind) {
    case PlotKind::loglog_scaling: return detail::plot_scaling(detail::read_json(input));
    case PlotKind::deviation_vs_radius: return detail::plot_deviation(detail::read_json(input));
    case PlotKind::spectrum_heatmap: return detail::plot_heatmap(input);
  }
  return {};
}

inline void emit_plot(const std::string& input, PlotKind kind, const std::string& output) {
  const auto svg = render_plot(input, kind);
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + output);
  out << svg;
}

}  // namespace torusq
