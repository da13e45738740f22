#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rehearsal/io.hpp"
#include "rehearsal/montecarlo.hpp"

namespace rehearsal {

// Static two-panel SVG (forgetting left, generalization right) with theory
// lines, empirical points with error bars, and a marker at the empirical
// crossover when one exists.  No external plotting dependencies.

namespace svg_detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline const char* series_color(std::size_t idx) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  return colors[idx % 5];
}

struct panel {
  double x0, y0, w, h;  // plot area in svg coordinates
  double xmin, xmax, ymin, ymax;

  double sx(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
  double sy(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

inline std::string nice_label(double v) {
  char buf[32];
  if (v == 0) return "0";
  const double av = std::abs(v);
  if (av >= 0.01 && av < 10000) {
    std::snprintf(buf, sizeof(buf), "%.3g", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.1e", v);
  }
  return buf;
}

inline void draw_axes(std::string& s, const panel& pn, const std::string& xlabel,
                      const std::string& ylabel, const std::string& title) {
  s += "<rect x='" + num(pn.x0) + "' y='" + num(pn.y0) + "' width='" + num(pn.w) +
       "' height='" + num(pn.h) + "' fill='none' stroke='#333'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = pn.xmin + (pn.xmax - pn.xmin) * i / 4.0;
    const double fy = pn.ymin + (pn.ymax - pn.ymin) * i / 4.0;
    const double px = pn.sx(fx), py = pn.sy(fy);
    s += "<line x1='" + num(px) + "' y1='" + num(pn.y0 + pn.h) + "' x2='" + num(px) + "' y2='" +
         num(pn.y0 + pn.h + 5) + "' stroke='#333'/>\n";
    s += "<text x='" + num(px) + "' y='" + num(pn.y0 + pn.h + 18) +
         "' font-size='11' text-anchor='middle'>" + nice_label(fx) + "</text>\n";
    s += "<line x1='" + num(pn.x0 - 5) + "' y1='" + num(py) + "' x2='" + num(pn.x0) + "' y2='" +
         num(py) + "' stroke='#333'/>\n";
    s += "<text x='" + num(pn.x0 - 8) + "' y='" + num(py + 4) +
         "' font-size='11' text-anchor='end'>" + nice_label(fy) + "</text>\n";
  }
  s += "<text x='" + num(pn.x0 + pn.w / 2) + "' y='" + num(pn.y0 + pn.h + 34) +
       "' font-size='13' text-anchor='middle'>" + xlabel + "</text>\n";
  s += "<text x='" + num(pn.x0 + pn.w / 2) + "' y='" + num(pn.y0 - 8) +
       "' font-size='14' text-anchor='middle'>" + title + "</text>\n";
  s += "<text x='" + num(pn.x0 - 52) + "' y='" + num(pn.y0 + pn.h / 2) +
       "' font-size='13' text-anchor='middle' transform='rotate(-90 " + num(pn.x0 - 52) + " " +
       num(pn.y0 + pn.h / 2) + ")'>" + ylabel + "</text>\n";
}

inline void draw_series(std::string& s, const panel& pn, const std::vector<double>& xs,
                        const std::vector<estimate_with_error>& est,
                        const std::vector<double>& theory, const std::vector<bool>& skipped,
                        const char* color) {
  std::string line;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (skipped[i] || !std::isfinite(theory[i])) continue;
    line += (line.empty() ? "M" : " L") + std::string(" ") + num(pn.sx(xs[i])) + " " +
            num(pn.sy(theory[i]));
  }
  if (!line.empty())
    s += "<path d='" + line + "' fill='none' stroke='" + color + "' stroke-width='1.5'/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (skipped[i]) continue;
    const double px = pn.sx(xs[i]);
    const double py = pn.sy(est[i].mean);
    const double e0 = pn.sy(est[i].mean - est[i].std_error);
    const double e1 = pn.sy(est[i].mean + est[i].std_error);
    s += "<line x1='" + num(px) + "' y1='" + num(e0) + "' x2='" + num(px) + "' y2='" + num(e1) +
         "' stroke='" + color + "' stroke-width='1'/>\n";
    s += "<circle cx='" + num(px) + "' cy='" + num(py) + "' r='2.6' fill='" + color + "'/>\n";
  }
}

}  // namespace svg_detail

inline std::string sweep_svg(const sweep_result& res, int width = 1200, int height = 500) {
  using namespace svg_detail;
  std::string s;
  s += "<svg xmlns='http://www.w3.org/2000/svg' width='" + std::to_string(width) + "' height='" +
       std::to_string(height) + "' viewBox='0 0 " + std::to_string(width) + " " +
       std::to_string(height) + "'>\n";
  s += "<rect width='100%' height='100%' fill='white'/>\n";

  const double margin = 70, gap_between = 60;
  const double pw = (width - 2 * margin - gap_between) / 2.0;
  const double ph = height - 2 * margin;

  // panel extents from both empirical (with error bars) and theory values
  auto extent = [&](bool use_G) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& ser : res.series)
      for (std::size_t i = 0; i < res.grid.size(); ++i) {
        if (res.skipped[i]) continue;
        const auto& e = use_G ? ser.G[i] : ser.F[i];
        const double th = use_G ? ser.theory_G[i] : ser.theory_F[i];
        lo = std::min({lo, e.mean - 2 * e.std_error, std::isfinite(th) ? th : lo});
        hi = std::max({hi, e.mean + 2 * e.std_error, std::isfinite(th) ? th : hi});
      }
    if (!std::isfinite(lo)) {
      lo = 0;
      hi = 1;
    }
    const double pad = (hi - lo) * 0.08 + 1e-12;
    return std::pair<double, double>(lo - pad, hi + pad);
  };
  double xmin = res.grid.empty() ? 0 : res.grid.front();
  double xmax = res.grid.empty() ? 1 : res.grid.back();
  if (xmin == xmax) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  const double xpad = (xmax - xmin) * 0.04;

  const auto [fl, fh] = extent(false);
  const auto [gl, gh] = extent(true);
  panel pf{margin, margin, pw, ph, xmin - xpad, xmax + xpad, fl, fh};
  panel pg{margin + pw + gap_between, margin, pw, ph, xmin - xpad, xmax + xpad, gl, gh};

  draw_axes(s, pf, res.axis, "forgetting", "Forgetting vs " + res.axis);
  draw_axes(s, pg, res.axis, "generalization error", "Generalization Error vs " + res.axis);

  for (std::size_t si = 0; si < res.series.size(); ++si) {
    const char* color = series_color(si);
    draw_series(s, pf, res.grid, res.series[si].F, res.series[si].theory_F, res.skipped, color);
    draw_series(s, pg, res.grid, res.series[si].G, res.series[si].theory_G, res.skipped, color);
    s += "<rect x='" + num(pf.x0 + 10) + "' y='" + num(pf.y0 + 10 + 18.0 * si) +
         "' width='14' height='4' fill='" + std::string(color) + "'/>\n";
    s += "<text x='" + num(pf.x0 + 30) + "' y='" + num(pf.y0 + 16 + 18.0 * si) +
         "' font-size='12'>" + res.series[si].strategy + " (line: theory, dot: empirical)</text>\n";
  }

  auto annotate_crossover = [&](const panel& pn, const std::optional<double>& x,
                                const char* label) {
    if (!x || *x < pn.xmin || *x > pn.xmax) return;
    const double px = pn.sx(*x);
    s += "<line x1='" + num(px) + "' y1='" + num(pn.y0) + "' x2='" + num(px) + "' y2='" +
         num(pn.y0 + pn.h) + "' stroke='#777' stroke-dasharray='4 3'/>\n";
    s += "<text x='" + num(px + 4) + "' y='" + num(pn.y0 + 14) + "' font-size='11' fill='#555'>" +
         std::string(label) + " = " + nice_label(*x) + "</text>\n";
  };
  annotate_crossover(pf, res.crossover_F, "crossover");
  annotate_crossover(pg, res.crossover_G, "crossover");

  s += "</svg>\n";
  return s;
}

// gnuplot-friendly companion: one block per series, blank-line separated
inline std::string sweep_dat(const sweep_result& res) {
  std::string s = "# axis strategy metric columns: axis_value empirical std_error theory\n";
  for (const auto& ser : res.series) {
    for (const char* metric : {"F", "G"}) {
      s += "# series: " + ser.strategy + " " + metric + "\n";
      for (std::size_t i = 0; i < res.grid.size(); ++i) {
        if (res.skipped[i]) continue;
        const auto& e = metric[0] == 'F' ? ser.F[i] : ser.G[i];
        const double th = metric[0] == 'F' ? ser.theory_F[i] : ser.theory_G[i];
        s += format_double(res.grid[i]) + " " + format_double(e.mean) + " " +
             format_double(e.std_error) + " " + format_double(th) + "\n";
      }
      s += "\n\n";
    }
  }
  return s;
}

}  // namespace rehearsal
