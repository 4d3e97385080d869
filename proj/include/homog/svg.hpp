#ifndef HOMOG_SVG_HPP
#define HOMOG_SVG_HPP

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "homog/common.hpp"

namespace homog {

struct SvgSeries {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;  // (x, y), positive
};

// Minimal deterministic log-log line chart; output depends only on the data.
inline void write_loglog_chart(const std::string& path, const std::string& title,
                               const std::string& x_label, const std::string& y_label,
                               const std::vector<SvgSeries>& series) {
  const int width = 640, height = 480;
  const int ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!(x > 0.0) || !(y > 0.0)) continue;
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  if (first) {
    xmin = ymin = 0.1;
    xmax = ymax = 1.0;
  }
  auto pad = [](double& lo, double& hi) {
    double llo = std::log10(lo), lhi = std::log10(hi);
    double d = std::max(lhi - llo, 1e-6) * 0.08;
    lo = std::pow(10.0, llo - d);
    hi = std::pow(10.0, lhi + d);
  };
  pad(xmin, xmax);
  pad(ymin, ymax);

  auto px = [&](double x) { return ml + pw * (std::log10(x) - std::log10(xmin)) /
                                       (std::log10(xmax) - std::log10(xmin)); };
  auto py = [&](double y) { return mt + ph * (1.0 - (std::log10(y) - std::log10(ymin)) /
                                                        (std::log10(ymax) - std::log10(ymin))); };

  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << (int)pw << "\" height=\""
      << (int)ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << title << "</text>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " << height / 2
      << ")\">" << y_label << "</text>\n";

  // decade ticks
  for (int d = static_cast<int>(std::ceil(std::log10(xmin)));
       d <= static_cast<int>(std::floor(std::log10(xmax))); ++d) {
    double x = std::pow(10.0, d);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%d\" x2=\"%.2f\" y2=\"%d\" stroke=\"#cccccc\"/>\n",
                  px(x), mt, px(x), mt + (int)ph);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%d\" text-anchor=\"middle\" font-size=\"11\">1e%d</text>\n",
                  px(x), mt + (int)ph + 16, d);
    out << buf;
  }
  for (int d = static_cast<int>(std::ceil(std::log10(ymin)));
       d <= static_cast<int>(std::floor(std::log10(ymax))); ++d) {
    double y = std::pow(10.0, d);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%d\" y1=\"%.2f\" x2=\"%d\" y2=\"%.2f\" stroke=\"#cccccc\"/>\n", ml,
                  py(y), ml + (int)pw, py(y));
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%d\" y=\"%.2f\" text-anchor=\"end\" font-size=\"11\">1e%d</text>\n",
                  ml - 6, py(y) + 4, d);
    out << buf;
  }

  int li = 0;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : s.points) {
      if (!(x > 0.0) || !(y > 0.0)) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
      out << buf;
    }
    out << "\"/>\n";
    for (const auto& [x, y] : s.points) {
      if (!(x > 0.0) || !(y > 0.0)) continue;
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n",
                    px(x), py(y), s.color.c_str());
      out << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%d\" y=\"%d\" width=\"12\" height=\"12\" fill=\"%s\"/>"
                  "<text x=\"%d\" y=\"%d\" font-size=\"12\">%s</text>\n",
                  ml + 10, mt + 10 + 18 * li, s.color.c_str(), ml + 28, mt + 20 + 18 * li,
                  s.label.c_str());
    out << buf;
    ++li;
  }
  out << "</svg>\n";
}

}  // namespace homog

#endif  // HOMOG_SVG_HPP
