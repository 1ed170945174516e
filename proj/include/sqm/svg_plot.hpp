#pragma once
// Static log-log plot of ratio vs h with the fitted line.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "sqm/verification_harness.hpp"

namespace sqm {

inline std::string decay_fit_svg(const DecayFit& fit, const std::string& title) {
  const double W = 560, H = 400, ml = 70, mr = 20, mt = 40, mb = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (auto& s : fit.samples) {
    double x = std::log2(s.h), y = std::log2(s.ratio);
    x0 = std::min(x0, x); x1 = std::max(x1, x);
    y0 = std::min(y0, y); y1 = std::max(y1, y);
  }
  if (x1 - x0 < 1e-9) { x0 -= 1; x1 += 1; }
  if (y1 - y0 < 1e-9) { y0 -= 1; y1 += 1; }
  x0 = std::floor(x0); x1 = std::ceil(x1);
  y0 = std::floor(y0); y1 = std::ceil(y1);
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
  auto num = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", v);
    return std::string(b);
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  o << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  int xstep = std::max(1, static_cast<int>((x1 - x0) / 8));
  for (double x = x0; x <= x1 + 1e-9; x += xstep)
    o << "<text x=\"" << num(px(x)) << "\" y=\"" << H - mb + 18 << "\" text-anchor=\"middle\">2^" << static_cast<int>(x) << "</text>\n";
  int ystep = std::max(1, static_cast<int>((y1 - y0) / 8));
  for (double y = y0; y <= y1 + 1e-9; y += ystep) {
    o << "<text x=\"" << ml - 6 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">2^" << static_cast<int>(y) << "</text>\n";
    o << "<line x1=\"" << ml << "\" y1=\"" << num(py(y)) << "\" x2=\"" << W - mr << "\" y2=\"" << num(py(y)) << "\" stroke=\"#ddd\"/>\n";
  }
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">h</text>\n";
  o << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2 << ")\">||Pu|| / ||u||</text>\n";

  // fitted line: log ratio = slope log h + intercept
  auto fy = [&](double x) { return (fit.slope * x * std::log(2.0) + fit.intercept) / std::log(2.0); };
  o << "<line x1=\"" << num(px(x0)) << "\" y1=\"" << num(py(fy(x0))) << "\" x2=\"" << num(px(x1)) << "\" y2=\""
    << num(py(fy(x1))) << "\" stroke=\"#c33\" stroke-dasharray=\"6 4\"/>\n";
  for (auto& s : fit.samples)
    o << "<circle cx=\"" << num(px(std::log2(s.h))) << "\" cy=\"" << num(py(std::log2(s.ratio))) << "\" r=\"4\" fill=\"#246\"/>\n";
  o << "<text x=\"" << W - mr - 4 << "\" y=\"" << mt + 14 << "\" text-anchor=\"end\">slope " << num(fit.slope)
    << ", max residual " << num(fit.max_residual) << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace sqm
