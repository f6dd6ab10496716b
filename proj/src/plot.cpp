#include "cagerl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cagerl::plot {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
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

// Round tick spacing covering [lo, hi] with about `target` intervals.
double tick_step(double lo, double hi, int target) {
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string render_svg(const Figure& fig) {
  const double left = 70, right = 20, top = 40, bottom = 55;
  const double pw = fig.width - left - right;
  const double ph = fig.height - top - bottom;

  std::size_t n = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : fig.series) {
    n = std::max(n, s.y.size());
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double d = s.spread.empty() ? 0.0 : s.spread[i];
      if (!std::isfinite(s.y[i])) continue;
      lo = std::min(lo, s.y[i] - d);
      hi = std::max(hi, s.y[i] + d);
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double xmax = std::max<double>(1.0, static_cast<double>(n) - 1.0);
  auto px = [&](double x) { return left + pw * x / xmax; };
  auto py = [&](double y) { return top + ph * (1.0 - (y - lo) / (hi - lo)); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fig.width << "\" height=\""
      << fig.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << fig.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(fig.title) << "</text>\n";

  const double ys = tick_step(lo, hi, 6);
  for (double y = std::ceil(lo / ys) * ys; y <= hi; y += ys) {
    out << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + pw) << "\" y1=\"" << num(py(y))
        << "\" y2=\"" << num(py(y)) << "\" stroke=\"#e0e0e0\"/>\n";
    out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(y) + 4)
        << "\" text-anchor=\"end\">" << num(y) << "</text>\n";
  }
  const double xs = tick_step(0.0, xmax, 8);
  for (double x = 0.0; x <= xmax + 1e-9; x += xs) {
    out << "<text x=\"" << num(px(x)) << "\" y=\"" << num(top + ph + 18)
        << "\" text-anchor=\"middle\">" << static_cast<long long>(std::llround(x)) << "</text>\n";
  }
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << fig.height - 12
      << "\" text-anchor=\"middle\">" << escape(fig.x_label) << "</text>\n";
  out << "<text transform=\"translate(16," << num(top + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(fig.y_label) << "</text>\n";

  for (const auto& s : fig.series) {
    if (s.y.empty()) continue;
    if (!s.spread.empty()) {
      if (s.spread.size() != s.y.size()) throw std::invalid_argument("plot: spread size mismatch");
      out << "<polygon fill=\"" << s.color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.y.size(); ++i) {
        out << num(px(i)) << ',' << num(py(s.y[i] + s.spread[i])) << ' ';
      }
      for (std::size_t i = s.y.size(); i-- > 0;) {
        out << num(px(i)) << ',' << num(py(s.y[i] - s.spread[i])) << ' ';
      }
      out << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-opacity=\"" << s.opacity
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (std::isfinite(s.y[i])) out << num(px(i)) << ',' << num(py(s.y[i])) << ' ';
    }
    out << "\"/>\n";
  }

  double ly = top + 16;
  for (const auto& s : fig.series) {
    if (s.label.empty()) continue;
    out << "<line x1=\"" << num(left + 12) << "\" x2=\"" << num(left + 36) << "\" y1=\""
        << num(ly - 4) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(left + 42) << "\" y=\"" << num(ly) << "\">" << escape(s.label)
        << "</text>\n";
    ly += 16;
  }
  out << "</svg>\n";
  return out.str();
}

void write_svg(const Figure& figure, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write plot " + path.string());
  out << render_svg(figure);
}

Figure reward_figure(const std::vector<ddpg::EpisodeRecord>& log, int window,
                     const std::string& title) {
  std::vector<double> returns;
  returns.reserve(log.size());
  for (const auto& e : log) returns.push_back(e.ret);
  Figure fig;
  fig.title = title;
  fig.y_label = "episode return";
  fig.series.push_back({"raw", returns, {}, "#9ecae1", 1.0});
  fig.series.push_back({"moving average (" + std::to_string(window) + ")",
                        harness::moving_average(returns, window), {}, "#08519c", 1.0});
  return fig;
}

Figure min_th_figure(const harness::AdversarialCurves& curves, const std::string& title) {
  Figure fig;
  fig.title = title;
  fig.y_label = "min. TH [s]";
  fig.series.push_back({"mean over runs", curves.smoothed_mean, curves.smoothed_std, "#d62728", 1.0});
  return fig;
}

Figure adversary_log_figure(const std::vector<adversary::AdversaryEpisode>& log, int window,
                            const std::string& title) {
  std::vector<double> th;
  th.reserve(log.size());
  for (const auto& e : log) th.push_back(e.min_th);
  Figure fig;
  fig.title = title;
  fig.y_label = "min. TH [s]";
  fig.series.push_back({"raw", th, {}, "#fcbba1", 1.0});
  fig.series.push_back({"moving average (" + std::to_string(window) + ")",
                        harness::moving_average(th, window), {}, "#a50f15", 1.0});
  return fig;
}

}  // namespace cagerl::plot
