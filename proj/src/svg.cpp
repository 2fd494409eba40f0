#include "icl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "icl/errors.hpp"

namespace icl {

namespace {

constexpr double kWidth = 860.0, kHeight = 540.0;
constexpr double kLeft = 72.0, kRight = 24.0, kTop = 28.0, kBottom = 56.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Tick label without trailing zeros.
std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

double nice_step(double span, int target_ticks) {
  const double raw = span / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

}  // namespace

std::string plot_results_svg(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw ValidationError("plot: no rows to draw");
  // Group rows by model in first-appearance order.
  std::vector<std::string> models;
  std::map<std::string, std::vector<const ResultRow*>> series;
  for (const ResultRow& r : rows) {
    if (!series.count(r.model)) models.push_back(r.model);
    series[r.model].push_back(&r);
  }
  for (auto& [name, pts] : series)
    std::sort(pts.begin(), pts.end(),
              [](const ResultRow* a, const ResultRow* b) { return a->n_context < b->n_context; });

  double xmin = 1e300, xmax = -1e300, ymin = 0.0, ymax = -1e300;
  for (const ResultRow& r : rows) {
    xmin = std::min(xmin, static_cast<double>(r.n_context));
    xmax = std::max(xmax, static_cast<double>(r.n_context));
    ymax = std::max(ymax, r.mean_err + r.std_err);
    ymin = std::min(ymin, r.mean_err - r.std_err);
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double yspan = ymax - ymin;
  ymax += 0.05 * yspan;
  if (ymin > 0.0 && ymin < 0.25 * ymax) ymin = 0.0;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return kTop + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  // axes
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw
      << "\" y2=\"" << kTop + ph << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + ph << "\" stroke=\"black\"/>\n";
  // ticks
  const double xstep = nice_step(xmax - xmin, 8);
  for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-9; x += xstep) {
    svg << "<line x1=\"" << fmt2(sx(x)) << "\" y1=\"" << kTop + ph << "\" x2=\"" << fmt2(sx(x))
        << "\" y2=\"" << kTop + ph + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt2(sx(x)) << "\" y=\"" << kTop + ph + 20
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << fmt_tick(x)
        << "</text>\n";
  }
  const double ystep = nice_step(ymax - ymin, 6);
  for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + 1e-9; y += ystep) {
    svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt2(sy(y)) << "\" x2=\"" << kLeft
        << "\" y2=\"" << fmt2(sy(y)) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft - 9 << "\" y=\"" << fmt2(sy(y) + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" << fmt_tick(y)
        << "</text>\n";
  }
  // axis labels
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 14
      << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">context length N"
      << "</text>\n";
  svg << "<text x=\"18\" y=\"" << kTop + ph / 2
      << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << kTop + ph / 2 << ")\">mean error (" << rows.front().metric << ")</text>\n";

  int color_idx = 0;
  for (const std::string& name : models) {
    const char* color = kPalette[color_idx % 8];
    ++color_idx;
    const auto& pts = series[name];
    std::ostringstream poly;
    for (const ResultRow* r : pts) {
      poly << fmt2(sx(r->n_context)) << ',' << fmt2(sy(r->mean_err)) << ' ';
      // error bar with caps
      const double x = sx(r->n_context);
      const double ylo = sy(r->mean_err - r->std_err), yhi = sy(r->mean_err + r->std_err);
      svg << "<line x1=\"" << fmt2(x) << "\" y1=\"" << fmt2(ylo) << "\" x2=\"" << fmt2(x)
          << "\" y2=\"" << fmt2(yhi) << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
      svg << "<line x1=\"" << fmt2(x - 3) << "\" y1=\"" << fmt2(ylo) << "\" x2=\"" << fmt2(x + 3)
          << "\" y2=\"" << fmt2(ylo) << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
      svg << "<line x1=\"" << fmt2(x - 3) << "\" y1=\"" << fmt2(yhi) << "\" x2=\"" << fmt2(x + 3)
          << "\" y2=\"" << fmt2(yhi) << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
        << poly.str() << "\"/>\n";
  }
  // legend
  double ly = kTop + 10;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const char* color = kPalette[i % 8];
    const double lx = kLeft + pw - 150;
    svg << "<line x1=\"" << lx << "\" y1=\"" << fmt2(ly) << "\" x2=\"" << lx + 24 << "\" y2=\""
        << fmt2(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << lx + 30 << "\" y=\"" << fmt2(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << models[i] << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace icl
