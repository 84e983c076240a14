#include "jumps/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "jumps/error.hpp"

namespace jumps {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

std::string fmt(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string px(double v) { return fmt("%.2f", v); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(w) + "\" height=\"" + px(h) +
         "\" viewBox=\"0 0 " + px(w) + " " + px(h) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string skeleton_svg(const std::vector<PlotLayer>& layers, const std::vector<std::size_t>& frames) {
  if (layers.empty()) throw ConfigError("nothing to plot");
  if (frames.empty()) throw ConfigError("empty frame list");
  const std::size_t length = layers.front().sequence.frames();
  for (const auto& l : layers) {
    if (l.sequence.frames() != length) throw DataError("plot layers differ in frame count");
    if (l.sequence.joints() != l.topology.joint_count()) throw DataError("layer '" + l.label + "' mismatches topology");
  }
  for (std::size_t f : frames) {
    if (f >= length) throw DataError("frame " + std::to_string(f) + " out of range");
  }

  // Shared scale from the first layer's extent over the chosen frames.
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin, xmax = -xmin, ymax = -xmin;
  for (std::size_t f : frames) {
    const auto& s = layers.front().sequence;
    for (std::size_t j = 0; j < s.joints(); ++j) {
      if (!s.available(f, j)) continue;
      xmin = std::min(xmin, s.at(f, j).x);
      xmax = std::max(xmax, s.at(f, j).x);
      ymin = std::min(ymin, s.at(f, j).y);
      ymax = std::max(ymax, s.at(f, j).y);
    }
  }
  if (!std::isfinite(xmin)) throw DataError("first layer has no available joints on the chosen frames");
  const double panel = 220, margin = 20, legend = 24;
  const double extent = std::max({xmax - xmin, ymax - ymin, 1e-9});
  const double scale = (panel - 2 * margin) / extent;
  const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);

  std::string svg = header(panel * static_cast<double>(frames.size()), panel + legend);
  for (std::size_t p = 0; p < frames.size(); ++p) {
    const std::size_t f = frames[p];
    const double ox = panel * static_cast<double>(p) + panel / 2, oy = panel / 2;
    svg += "<g id=\"frame-" + std::to_string(f) + "\">\n";
    svg += "<rect x=\"" + px(panel * static_cast<double>(p)) + "\" y=\"0\" width=\"" + px(panel) + "\" height=\"" +
           px(panel) + "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    svg += "<text x=\"" + px(panel * static_cast<double>(p) + 6) + "\" y=\"14\" font-size=\"11\">frame " +
           std::to_string(f) + "</text>\n";
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const auto& l = layers[li];
      const std::string color = kPalette[li % std::size(kPalette)];
      auto to_px = [&](Vec2 v) { return std::pair{ox + scale * (v.x - cx), oy + scale * (v.y - cy)}; };
      for (const auto& [a, b] : l.topology.bones) {
        if (!l.sequence.available(f, a) || !l.sequence.available(f, b)) continue;
        const auto [x1, y1] = to_px(l.sequence.at(f, a));
        const auto [x2, y2] = to_px(l.sequence.at(f, b));
        svg += "<line x1=\"" + px(x1) + "\" y1=\"" + px(y1) + "\" x2=\"" + px(x2) + "\" y2=\"" + px(y2) +
               "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
      }
      for (std::size_t j = 0; j < l.sequence.joints(); ++j) {
        if (!l.sequence.available(f, j)) continue;
        const auto [x, y] = to_px(l.sequence.at(f, j));
        svg += "<circle cx=\"" + px(x) + "\" cy=\"" + px(y) + "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
      }
    }
    svg += "</g>\n";
  }
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const double x = 10 + 140 * static_cast<double>(li);
    svg += "<rect x=\"" + px(x) + "\" y=\"" + px(panel + 8) + "\" width=\"10\" height=\"10\" fill=\"" +
           kPalette[li % std::size(kPalette)] + "\"/>\n";
    svg += "<text x=\"" + px(x + 14) + "\" y=\"" + px(panel + 17) + "\" font-size=\"11\">" +
           escape(layers[li].label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string pckh_svg(const nlohmann::json& report) {
  struct Curve {
    std::string label;
    std::vector<double> values;
    double auc;
  };
  std::vector<Curve> curves;
  try {
    if (report.at("format") != "jumps-report") throw DataError("not a jumps report");
    for (const auto& row : report.at("rows")) {
      Curve c{row.at("method").get<std::string>() + " (" + row.at("joints").get<std::string>() + ")",
              row.at("curve").get<std::vector<double>>(), row.at("auc").get<double>()};
      if (c.values.size() != 101) throw DataError("report curve must have 101 points");
      for (double v : c.values) {
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("report curve value outside [0, 1]");
      }
      curves.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  if (curves.empty()) throw DataError("report has no rows");

  const double w = 520, h = 360, left = 50, right = 190, top = 20, bottom = 40;
  const double pw = w - left - right, ph = h - top - bottom;
  auto X = [&](double a) { return left + pw * a; };
  auto Y = [&](double v) { return top + ph * (1.0 - v); };
  std::string svg = header(w, h);
  svg += "<rect x=\"" + px(left) + "\" y=\"" + px(top) + "\" width=\"" + px(pw) + "\" height=\"" + px(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 10; t += 2) {
    const double a = t / 10.0;
    svg += "<text x=\"" + px(X(a) - 8) + "\" y=\"" + px(h - bottom + 16) + "\" font-size=\"10\">" + fmt("%.1f", a) +
           "</text>\n";
    svg += "<text x=\"" + px(left - 30) + "\" y=\"" + px(Y(a) + 4) + "\" font-size=\"10\">" + fmt("%.1f", a) +
           "</text>\n";
  }
  svg += "<text x=\"" + px(left + pw / 2 - 40) + "\" y=\"" + px(h - 6) +
         "\" font-size=\"11\">threshold (head size)</text>\n";
  svg += "<text x=\"12\" y=\"" + px(top + ph / 2) + "\" font-size=\"11\" transform=\"rotate(-90 12 " +
         px(top + ph / 2) + ")\">PCKh</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const std::string color = kPalette[i % std::size(kPalette)];
    std::string pts;
    for (std::size_t k = 0; k < c.values.size(); ++k) {
      if (k) pts += ' ';
      pts += px(X(static_cast<double>(k) / 100.0)) + "," + px(Y(c.values[k]));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" data-label=\"" + escape(c.label) +
           "\" data-pckh0=\"" + fmt("%.17g", c.values.front()) + "\" data-pckh1=\"" + fmt("%.17g", c.values.back()) +
           "\" points=\"" + pts + "\"/>\n";
    const double ly = top + 14 + 16 * static_cast<double>(i);
    svg += "<line x1=\"" + px(w - right + 10) + "\" y1=\"" + px(ly - 4) + "\" x2=\"" + px(w - right + 24) +
           "\" y2=\"" + px(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + px(w - right + 28) + "\" y=\"" + px(ly) + "\" font-size=\"10\">" + escape(c.label) +
           " AUC " + fmt("%.4f", c.auc) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace jumps
