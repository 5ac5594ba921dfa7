#include "berrylab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace berrylab::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 20, kTop = 36, kBottom = 50;
const char* const kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-300) {
      const double d = std::max(std::abs(lo) * 0.05, 1e-12);
      lo -= d, hi += d;
    }
  }
};

void header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(title) << "</text>\n";
}

}  // namespace

std::string render(const LinePlot& plot) {
  auto ty = [&](double v) { return plot.log_y ? (v > 0 ? std::log10(v) : std::nan("")) : v; };
  Range xr, yr;
  for (const auto& s : plot.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(ty(v));
  }
  xr.pad();
  yr.pad();
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double v) { return kTop + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream os;
  header(os, plot.title);
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    os << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(px(xv))
       << "\" y2=\"" << kTop + ph + 5 << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << num(px(xv)) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
       << num(xv) << "</text>\n"
       << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << kLeft << "\" y2=\""
       << num(py(yv)) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
       << (plot.log_y ? "1e" + num(yv) : num(yv)) << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
     << escape(plot.x_label) << "</text>\n"
     << "<text transform=\"translate(16," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(plot.y_label) << "</text>\n";

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* colour = kColours[k % std::size(kColours)];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      const double v = ty(s.y[i]);
      if (!std::isfinite(v) || !std::isfinite(s.x[i])) continue;
      os << num(px(s.x[i])) << ',' << num(py(v)) << ' ';
    }
    os << "\"/>\n";
    if (s.markers)
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        const double v = ty(s.y[i]);
        if (!std::isfinite(v)) continue;
        os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(v)) << "\" r=\"3\" fill=\""
           << colour << "\"/>\n";
      }
    os << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 16 + 14 * k << "\" fill=\"" << colour
       << "\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_heat_strip(const Eigen::MatrixXd& values, const std::string& title) {
  Range r;
  for (Eigen::Index i = 0; i < values.size(); ++i) r.add(values.data()[i]);
  r.pad();
  const double pw = kWidth - kLeft - kRight - 80, ph = kHeight - kTop - kBottom;
  const double cw = pw / std::max<Eigen::Index>(1, values.cols());
  const double ch = ph / std::max<Eigen::Index>(1, values.rows());
  std::ostringstream os;
  header(os, title);
  for (Eigen::Index iy = 0; iy < values.rows(); ++iy)
    for (Eigen::Index ix = 0; ix < values.cols(); ++ix) {
      const double t = (values(iy, ix) - r.lo) / (r.hi - r.lo);
      const int red = static_cast<int>(std::lround(255 * std::clamp(t, 0.0, 1.0)));
      const int blue = 255 - red;
      os << "<rect x=\"" << num(kLeft + ix * cw) << "\" y=\"" << num(kTop + ph - (iy + 1) * ch)
         << "\" width=\"" << num(cw) << "\" height=\"" << num(ch) << "\" fill=\"rgb(" << red << ",80,"
         << blue << ")\"><title>" << num(values(iy, ix)) << "</title></rect>\n";
    }
  const double lx = kLeft + pw + 20;
  os << "<text x=\"" << lx << "\" y=\"" << kTop + 12 << "\">max " << num(r.hi) << "</text>\n"
     << "<text x=\"" << lx << "\" y=\"" << kTop + ph << "\">min " << num(r.lo) << "</text>\n"
     << "</svg>\n";
  return os.str();
}

}  // namespace berrylab::svg
