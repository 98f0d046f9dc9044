#include "kanheat/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "kanheat/format.hpp"

namespace kanheat {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string px(double v) { return format_fixed(v, 2); }

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

class Canvas {
 public:
  Canvas(const PlotLabels& labels, Range xr, Range yr) : xr_(xr), yr_(yr) {
    os_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(kWidth) << "\" height=\"" << px(kHeight)
        << "\" viewBox=\"0 0 " << px(kWidth) << ' ' << px(kHeight) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << px(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << xml_escape(labels.title) << "</text>\n"
        << "<text x=\"" << px(kLeft + plot_w() / 2) << "\" y=\"" << px(kHeight - 10)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(labels.x) << "</text>\n"
        << "<text x=\"16\" y=\"" << px(kTop + plot_h() / 2) << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
        << px(kTop + plot_h() / 2) << ")\">" << xml_escape(labels.y) << "</text>\n"
        << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(plot_w()) << "\" height=\""
        << px(plot_h()) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double yv = yr_.lo + (yr_.hi - yr_.lo) * t / 4.0;
      os_ << "<text x=\"" << px(kLeft - 6) << "\" y=\"" << px(sy(yv) + 4) << "\" text-anchor=\"end\" font-size=\"10\">"
          << format_fixed(yv, 3) << "</text>\n";
    }
  }

  double plot_w() const { return kWidth - kLeft - kRight; }
  double plot_h() const { return kHeight - kTop - kBottom; }
  double sx(double v) const { return kLeft + (v - xr_.lo) / (xr_.hi - xr_.lo) * plot_w(); }
  double sy(double v) const { return kTop + plot_h() - (v - yr_.lo) / (yr_.hi - yr_.lo) * plot_h(); }

  void x_ticks() {
    for (int t = 0; t <= 4; ++t) {
      const double xv = xr_.lo + (xr_.hi - xr_.lo) * t / 4.0;
      os_ << "<text x=\"" << px(sx(xv)) << "\" y=\"" << px(kTop + plot_h() + 16)
          << "\" text-anchor=\"middle\" font-size=\"10\">" << format_fixed(xv, 3) << "</text>\n";
    }
  }

  void legend(std::size_t index, const std::string& label) {
    const double y = kTop + 14 + 16 * static_cast<double>(index);
    os_ << "<rect x=\"" << px(kLeft + 10) << "\" y=\"" << px(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[index % kPalette.size()] << "\"/>\n"
        << "<text x=\"" << px(kLeft + 26) << "\" y=\"" << px(y) << "\" font-size=\"11\">" << xml_escape(label) << "</text>\n";
  }

  std::ostringstream& out() { return os_; }
  std::string finish() {
    os_ << "</svg>\n";
    return os_.str();
  }

 private:
  Range xr_;
  Range yr_;
  std::ostringstream os_;
};

}  // namespace

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

std::string svg_line_chart(const PlotLabels& labels, const std::vector<PlotSeries>& series) {
  Range xr, yr;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  yr.finish();
  Canvas c(labels, xr, yr);
  c.x_ticks();
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    c.out() << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kPalette[k % kPalette.size()] << "\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      c.out() << (i ? " " : "") << px(c.sx(s.x[i])) << ',' << px(c.sy(s.y[i]));
    }
    c.out() << "\"/>\n";
    c.legend(k, s.label);
  }
  return c.finish();
}

std::string svg_scatter(const PlotLabels& labels, const std::vector<PlotSeries>& series, bool diagonal) {
  Range xr, yr;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  if (diagonal) {
    // Shared axes so the identity line is the 45-degree diagonal.
    xr.add(yr.lo);
    xr.add(yr.hi);
    yr = xr;
  }
  xr.finish();
  yr.finish();
  Canvas c(labels, xr, yr);
  c.x_ticks();
  if (diagonal) {
    const double lo = std::max(xr.lo, yr.lo), hi = std::min(xr.hi, yr.hi);
    c.out() << "<line x1=\"" << px(c.sx(lo)) << "\" y1=\"" << px(c.sy(lo)) << "\" x2=\"" << px(c.sx(hi)) << "\" y2=\""
            << px(c.sy(hi)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      c.out() << "<circle r=\"2\" fill-opacity=\"0.6\" fill=\"" << kPalette[k % kPalette.size()] << "\" cx=\""
              << px(c.sx(s.x[i])) << "\" cy=\"" << px(c.sy(s.y[i])) << "\"/>\n";
    }
    c.legend(k, s.label);
  }
  return c.finish();
}

std::string svg_bar_chart(const PlotLabels& labels, const std::vector<std::string>& categories,
                          const std::vector<BarGroup>& groups) {
  Range yr;
  yr.add(0.0);
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      const double e = i < g.errors.size() ? g.errors[i] : 0.0;
      yr.add(g.values[i] + e);
      yr.add(g.values[i] - e);
    }
  }
  yr.finish();
  Range xr;
  xr.lo = 0.0;
  xr.hi = static_cast<double>(std::max<std::size_t>(categories.size(), 1));
  Canvas c(labels, xr, yr);
  const double slot = c.plot_w() / xr.hi;
  const double bar = 0.8 * slot / static_cast<double>(std::max<std::size_t>(groups.size(), 1));
  for (std::size_t i = 0; i < categories.size(); ++i) {
    c.out() << "<text x=\"" << px(kLeft + slot * (static_cast<double>(i) + 0.5)) << "\" y=\"" << px(kTop + c.plot_h() + 16)
            << "\" text-anchor=\"middle\" font-size=\"10\">" << xml_escape(categories[i]) << "</text>\n";
  }
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const auto& g = groups[k];
    for (std::size_t i = 0; i < std::min(g.values.size(), categories.size()); ++i) {
      if (!std::isfinite(g.values[i])) continue;
      const double x0 = kLeft + slot * (static_cast<double>(i) + 0.1) + bar * static_cast<double>(k);
      const double y0 = c.sy(std::max(g.values[i], 0.0));
      const double y1 = c.sy(std::min(g.values[i], 0.0));
      c.out() << "<rect x=\"" << px(x0) << "\" y=\"" << px(y0) << "\" width=\"" << px(bar) << "\" height=\""
              << px(y1 - y0) << "\" fill=\"" << kPalette[k % kPalette.size()] << "\"/>\n";
      if (i < g.errors.size() && std::isfinite(g.errors[i]) && g.errors[i] > 0.0) {
        const double xm = x0 + bar / 2;
        c.out() << "<line x1=\"" << px(xm) << "\" x2=\"" << px(xm) << "\" y1=\"" << px(c.sy(g.values[i] - g.errors[i]))
                << "\" y2=\"" << px(c.sy(g.values[i] + g.errors[i])) << "\" stroke=\"black\"/>\n";
      }
    }
    c.legend(k, g.label);
  }
  return c.finish();
}

}  // namespace kanheat
