#pragma once

#include <string>
#include <vector>

namespace drivepred::pipeline {

// Minimal deterministic SVG chart: lines, shaded bands, point clouds and
// horizontal bars on one pair of axes.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label, int width = 640, int height = 420);

  void line(const std::vector<double>& x, const std::vector<double>& y, int color, const std::string& label);
  void band(const std::vector<double>& x, const std::vector<double>& lo, const std::vector<double>& hi, int color,
            const std::string& label);
  // color_value in [0, 1] maps blue to red; a negative value uses palette color.
  void points(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& color_value,
              int color, double radius = 2.5);
  // Categorical rows from top to bottom; combine with points() for beeswarms.
  void categories(const std::vector<std::string>& names);
  void hbars(const std::vector<std::string>& names, const std::vector<double>& values, int color);

  std::string render() const;

 private:
  struct Line {
    std::vector<double> x, y;
    int color;
    std::string label;
  };
  struct Band {
    std::vector<double> x, lo, hi;
    int color;
    std::string label;
  };
  struct Points {
    std::vector<double> x, y, c;
    int color;
    double r;
  };
  std::string title_, xl_, yl_;
  int w_, h_;
  std::vector<Line> lines_;
  std::vector<Band> bands_;
  std::vector<Points> points_;
  std::vector<std::string> cats_;
  std::vector<double> bars_;
  int bar_color_ = 0;
};

}  // namespace drivepred::pipeline
