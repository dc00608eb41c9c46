#include "magspec/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace magspec::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 30.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

// Comments must not contain "--".
std::string comment_safe(std::string text) {
  for (std::size_t p = text.find("--"); p != std::string::npos; p = text.find("--")) text.replace(p, 2, "- -");
  return text;
}

struct Frame {
  double x_lo, x_hi, y_lo, y_hi;
  double px(double x) const { return kLeft + (x - x_lo) / (x_hi - x_lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y_lo) / (y_hi - y_lo) * (kHeight - kTop - kBottom); }
};

void open(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << escape(title) << "</text>\n";
}

void axes(std::ostringstream& out, const Frame& f, const std::string& x_label, const std::string& y_label) {
  out << "<g stroke=\"black\" fill=\"none\"><rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
      << kWidth - kLeft - kRight << "\" height=\"" << kHeight - kTop - kBottom << "\"/></g>\n";
  out << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x_lo + (f.x_hi - f.x_lo) * i / 4.0;
    const double y = f.y_lo + (f.y_hi - f.y_lo) * i / 4.0;
    out << "<text x=\"" << fmt(f.px(x)) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">" << fmt(x)
        << "</text>\n";
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt(f.py(y) + 4) << "\" text-anchor=\"end\">" << fmt(y)
        << "</text>\n";
  }
  out << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (kTop + kHeight - kBottom) / 2 << ")\">" << escape(y_label) << "</text>\n";
  out << "</g>\n";
}

// Blue to yellow ramp for t in [0,1].
std::string color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(40 + 215 * t));
  const int g = static_cast<int>(std::lround(40 + 180 * t));
  const int b = static_cast<int>(std::lround(160 - 130 * t));
  std::ostringstream s;
  s << "rgb(" << r << ',' << g << ',' << b << ')';
  return s.str();
}

std::string field_comment(const Field& f) {
  std::ostringstream s;
  s.precision(10);
  s << "<!-- data nx=" << f.nx << " ny=" << f.ny << " x=[" << f.x_lo << "," << f.x_hi << "] y=[" << f.y_lo << ","
    << f.y_hi << "] values row-major:\n";
  for (std::size_t iy = 0; iy < f.ny; ++iy) {
    for (std::size_t ix = 0; ix < f.nx; ++ix) s << (ix ? "," : "") << f.values[iy * f.nx + ix];
    s << '\n';
  }
  s << "-->\n";
  return comment_safe(s.str().substr(0, s.str().size() - 4)) + "-->\n";
}

} // namespace

std::string heatmap(const Field& f, const std::string& title, bool log_scale) {
  std::ostringstream out;
  open(out, title);
  out << field_comment(f);
  auto map = [&](double v) { return log_scale ? std::log10(std::max(v, 1e-300)) : v; };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : f.values) {
    lo = std::min(lo, map(v));
    hi = std::max(hi, map(v));
  }
  const double span = hi > lo ? hi - lo : 1.0;
  const bool flat = f.ny <= 1;
  const Frame fr{f.x_lo, f.x_hi, flat ? 0.0 : f.y_lo, flat ? 1.0 : f.y_hi};
  const double cw = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(f.nx, 1));
  const double ch = (kHeight - kTop - kBottom) / static_cast<double>(std::max<std::size_t>(f.ny, 1));
  out << "<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t iy = 0; iy < f.ny; ++iy)
    for (std::size_t ix = 0; ix < f.nx; ++ix) {
      const double t = (map(f.values[iy * f.nx + ix]) - lo) / span;
      out << "<rect x=\"" << fmt(kLeft + ix * cw) << "\" y=\"" << fmt(kHeight - kBottom - (iy + 1) * ch) << "\" width=\""
          << fmt(cw + 0.5) << "\" height=\"" << fmt(ch + 0.5) << "\" fill=\"" << color(t) << "\"/>\n";
    }
  out << "</g>\n";
  axes(out, fr, "x1", flat ? "" : "x2");
  out << "<text x=\"" << kWidth - kRight << "\" y=\"" << kTop - 6
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << (log_scale ? "log10 " : "")
      << "range [" << fmt(lo) << ", " << fmt(hi) << "]</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label, bool log_y) {
  std::ostringstream out;
  open(out, title);
  auto map = [&](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo, y_lo = x_lo, y_hi = -x_lo;
  std::ostringstream data;
  data.precision(10);
  for (const auto& s : series) {
    data << s.name << ":";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, map(s.y[i]));
      y_hi = std::max(y_hi, map(s.y[i]));
      data << ' ' << s.x[i] << ',' << s.y[i];
    }
    data << '\n';
  }
  out << "<!-- data" << (log_y ? " (y plotted as log10)" : "") << ":\n" << comment_safe(data.str()) << "-->\n";
  if (!(x_hi > x_lo)) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (!(y_hi > y_lo)) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  const double pad = 0.05 * (y_hi - y_lo);
  const Frame fr{x_lo, x_hi, y_lo - pad, y_hi + pad};
  axes(out, fr, x_label, log_y ? "log10 " + y_label : y_label);
  static const char* palette[] = {"#1f4e9c", "#c23b22", "#2e8b57", "#8a2be2", "#d2691e", "#333333"};
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = palette[k % 6];
    out << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) out << fmt(fr.px(s.x[i])) << ',' << fmt(fr.py(map(s.y[i]))) << ' ';
    out << "\"/>\n";
    if (s.markers)
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out << "<circle cx=\"" << fmt(fr.px(s.x[i])) << "\" cy=\"" << fmt(fr.py(map(s.y[i]))) << "\" r=\"3\" fill=\"" << c
            << "\"/>\n";
    out << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 16 + 14 * k << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
        << c << "\">" << escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string contour(const Field& f, const std::vector<double>& levels, const std::string& title,
                    const std::vector<Marker>& markers) {
  std::ostringstream out;
  open(out, title);
  out << field_comment(f);
  const Frame fr{f.x_lo, f.x_hi, f.y_lo, f.y_hi};
  axes(out, fr, "Re z", "Im z");
  const double dx = f.nx > 1 ? (f.x_hi - f.x_lo) / static_cast<double>(f.nx - 1) : 0.0;
  const double dy = f.ny > 1 ? (f.y_hi - f.y_lo) / static_cast<double>(f.ny - 1) : 0.0;
  auto value = [&](std::size_t ix, std::size_t iy) { return std::log10(std::max(f.values[iy * f.nx + ix], 1e-300)); };
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const double level = levels[li];
    const double t = levels.size() > 1 ? static_cast<double>(li) / static_cast<double>(levels.size() - 1) : 0.5;
    out << "<g stroke=\"" << color(t) << "\" stroke-width=\"1.2\" fill=\"none\"><!-- log10 smin = " << fmt(level)
        << " -->\n";
    for (std::size_t iy = 0; iy + 1 < f.ny; ++iy)
      for (std::size_t ix = 0; ix + 1 < f.nx; ++ix) {
        // corners counter-clockwise from bottom-left
        const double v[4] = {value(ix, iy), value(ix + 1, iy), value(ix + 1, iy + 1), value(ix, iy + 1)};
        const double cx[4] = {0, 1, 1, 0};
        const double cy[4] = {0, 0, 1, 1};
        std::vector<std::pair<double, double>> pts;
        for (int e = 0; e < 4; ++e) {
          const int a = e;
          const int b = (e + 1) % 4;
          if ((v[a] < level) == (v[b] < level)) continue;
          const double s = (level - v[a]) / (v[b] - v[a]);
          pts.emplace_back(f.x_lo + (ix + cx[a] + s * (cx[b] - cx[a])) * dx,
                           f.y_lo + (iy + cy[a] + s * (cy[b] - cy[a])) * dy);
        }
        for (std::size_t p = 0; p + 1 < pts.size(); p += 2)
          out << "<line x1=\"" << fmt(fr.px(pts[p].first)) << "\" y1=\"" << fmt(fr.py(pts[p].second)) << "\" x2=\""
              << fmt(fr.px(pts[p + 1].first)) << "\" y2=\"" << fmt(fr.py(pts[p + 1].second)) << "\"/>\n";
      }
    out << "</g>\n";
  }
  for (const auto& m : markers)
    if (m.x >= f.x_lo && m.x <= f.x_hi && m.y >= f.y_lo && m.y <= f.y_hi)
      out << "<circle cx=\"" << fmt(fr.px(m.x)) << "\" cy=\"" << fmt(fr.py(m.y)) << "\" r=\"3\" fill=\"black\"/>\n";
  out << "</svg>\n";
  return out.str();
}

std::string circles(const std::vector<Circle>& circles, double x_lo, double x_hi, double y_lo, double y_hi,
                    const std::string& title) {
  std::ostringstream out;
  open(out, title);
  std::ostringstream data;
  data.precision(10);
  for (const auto& c : circles) data << c.x << ',' << c.y << ',' << c.r << '\n';
  out << "<!-- data x,y,r:\n" << comment_safe(data.str()) << "-->\n";
  const Frame fr{x_lo, x_hi, y_lo, y_hi};
  axes(out, fr, "x1", "x2");
  const double sx = (kWidth - kLeft - kRight) / (x_hi - x_lo);
  const double sy = (kHeight - kTop - kBottom) / (y_hi - y_lo);
  out << "<g fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"0.6\">\n";
  for (const auto& c : circles)
    out << "<ellipse cx=\"" << fmt(fr.px(c.x)) << "\" cy=\"" << fmt(fr.py(c.y)) << "\" rx=\"" << fmt(c.r * sx)
        << "\" ry=\"" << fmt(c.r * sy) << "\"/>\n";
  out << "</g>\n</svg>\n";
  return out.str();
}

} // namespace magspec::svg
