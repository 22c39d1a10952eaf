#include "drivepred/pipeline/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "drivepred/common/errors.hpp"

namespace drivepred::pipeline {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string color_of(int i) { return kPalette[static_cast<std::size_t>(std::abs(i)) % 10]; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(30 + 225 * t));
  const int b = static_cast<int>(std::lround(255 - 225 * t));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x40%02x", r, b);
  return buf;
}

void check_same(std::size_t a, std::size_t b) {
  if (a != b) throw ShapeError("plot series lengths differ");
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label, int width, int height)
    : title_(std::move(title)), xl_(std::move(x_label)), yl_(std::move(y_label)), w_(width), h_(height) {}

void SvgPlot::line(const std::vector<double>& x, const std::vector<double>& y, int color, const std::string& label) {
  check_same(x.size(), y.size());
  lines_.push_back({x, y, color, label});
}

void SvgPlot::band(const std::vector<double>& x, const std::vector<double>& lo, const std::vector<double>& hi,
                   int color, const std::string& label) {
  check_same(x.size(), lo.size());
  check_same(x.size(), hi.size());
  bands_.push_back({x, lo, hi, color, label});
}

void SvgPlot::points(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& c,
                     int color, double radius) {
  check_same(x.size(), y.size());
  if (!c.empty()) check_same(x.size(), c.size());
  points_.push_back({x, y, c, color, radius});
}

void SvgPlot::categories(const std::vector<std::string>& names) { cats_ = names; }

void SvgPlot::hbars(const std::vector<std::string>& names, const std::vector<double>& values, int color) {
  check_same(names.size(), values.size());
  cats_ = names;
  bars_ = values;
  bar_color_ = color;
}

std::string SvgPlot::render() const {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto grow_x = [&](double v) {
    if (std::isfinite(v)) x0 = std::min(x0, v), x1 = std::max(x1, v);
  };
  auto grow_y = [&](double v) {
    if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
  };
  for (const auto& l : lines_) {
    for (double v : l.x) grow_x(v);
    for (double v : l.y) grow_y(v);
  }
  for (const auto& b : bands_) {
    for (double v : b.x) grow_x(v);
    for (double v : b.lo) grow_y(v);
    for (double v : b.hi) grow_y(v);
  }
  for (const auto& p : points_) {
    for (double v : p.x) grow_x(v);
    for (double v : p.y) grow_y(v);
  }
  for (double v : bars_) grow_x(v), grow_x(0.0);
  const bool categorical = !cats_.empty();
  if (categorical) y0 = -0.5, y1 = static_cast<double>(cats_.size()) - 0.5;
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  if (!categorical) {
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }

  const double left = categorical ? 130 : 64, right = 20, top = 36, bottom = 48;
  const double pw = w_ - left - right, ph = h_ - top - bottom;
  auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
  // Categorical rows run top to bottom.
  auto sy = [&](double v) {
    return categorical ? top + (v - y0) / (y1 - y0) * ph : top + (y1 - v) / (y1 - y0) * ph;
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\" viewBox=\"0 0 " << w_
    << ' ' << h_ << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w_ / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title_) << "</text>\n";
  o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = x0 + (x1 - x0) * k / 4.0;
    o << "<text x=\"" << num(sx(v)) << "\" y=\"" << num(top + ph + 14) << "\" text-anchor=\"middle\">" << tick(v)
      << "</text>\n";
  }
  if (categorical) {
    for (std::size_t i = 0; i < cats_.size(); ++i) {
      o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(static_cast<double>(i)) + 4)
        << "\" text-anchor=\"end\">" << escape(cats_[i]) << "</text>\n";
    }
  } else {
    for (int k = 0; k <= 4; ++k) {
      const double v = y0 + (y1 - y0) * k / 4.0;
      o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(v) + 4) << "\" text-anchor=\"end\">" << tick(v)
        << "</text>\n";
    }
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << h_ - 10 << "\" text-anchor=\"middle\">" << escape(xl_)
    << "</text>\n";
  o << "<text x=\"14\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << num(top + ph / 2) << ")\">" << escape(yl_) << "</text>\n";

  for (std::size_t i = 0; i < bars_.size(); ++i) {
    const double yc = sy(static_cast<double>(i));
    const double bh = 0.7 * ph / static_cast<double>(bars_.size());
    const double a = sx(std::min(0.0, bars_[i])), b = sx(std::max(0.0, bars_[i]));
    o << "<rect x=\"" << num(a) << "\" y=\"" << num(yc - bh / 2) << "\" width=\"" << num(b - a) << "\" height=\""
      << num(bh) << "\" fill=\"" << color_of(bar_color_) << "\"/>\n";
  }
  for (const auto& b : bands_) {
    o << "<polygon fill=\"" << color_of(b.color) << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < b.x.size(); ++i) o << num(sx(b.x[i])) << ',' << num(sy(b.hi[i])) << ' ';
    for (std::size_t i = b.x.size(); i-- > 0;) o << num(sx(b.x[i])) << ',' << num(sy(b.lo[i])) << ' ';
    o << "\"/>\n";
  }
  for (const auto& l : lines_) {
    o << "<polyline fill=\"none\" stroke-width=\"1.8\" stroke=\"" << color_of(l.color) << "\" points=\"";
    for (std::size_t i = 0; i < l.x.size(); ++i) o << num(sx(l.x[i])) << ',' << num(sy(l.y[i])) << ' ';
    o << "\"/>\n";
  }
  for (const auto& p : points_) {
    for (std::size_t i = 0; i < p.x.size(); ++i) {
      const std::string fill = !p.c.empty() && p.c[i] >= 0.0 ? ramp(p.c[i]) : color_of(p.color);
      o << "<circle cx=\"" << num(sx(p.x[i])) << "\" cy=\"" << num(sy(p.y[i])) << "\" r=\"" << num(p.r)
        << "\" fill=\"" << fill << "\" fill-opacity=\"0.8\"/>\n";
    }
  }

  double ly = top + 12;
  auto legend = [&](int color, const std::string& label, double opacity) {
    if (label.empty()) return;
    o << "<rect x=\"" << num(left + pw - 150) << "\" y=\"" << num(ly - 8) << "\" width=\"12\" height=\"8\" fill=\""
      << color_of(color) << "\" fill-opacity=\"" << opacity << "\"/>";
    o << "<text x=\"" << num(left + pw - 134) << "\" y=\"" << num(ly) << "\">" << escape(label) << "</text>\n";
    ly += 14;
  };
  for (const auto& b : bands_) legend(b.color, b.label, 0.25);
  for (const auto& l : lines_) legend(l.color, l.label, 1.0);
  o << "</svg>\n";
  return o.str();
}

}  // namespace drivepred::pipeline
