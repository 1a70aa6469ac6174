#include "adalista/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace adalista {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

} // namespace

std::string plot_svg(const ResultTable& table) {
  if (table.rows.empty()) throw std::invalid_argument("emit_plot: empty table");

  // Series in first-appearance order; points sorted by K.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<int, double>>> series;
  double min_pos = std::numeric_limits<double>::infinity();
  for (const auto& r : table.rows) {
    if (!series.count(r.solver)) order.push_back(r.solver);
    series[r.solver].emplace_back(r.K, r.value);
    if (r.value > 0.0 && std::isfinite(r.value)) min_pos = std::min(min_pos, r.value);
  }
  if (!std::isfinite(min_pos)) min_pos = 1e-300;
  for (auto& [name, pts] : series) std::stable_sort(pts.begin(), pts.end());

  auto ylog = [&](double v) { return std::log10(v > 0.0 && std::isfinite(v) ? v : min_pos); };
  int kmin = table.rows.front().K, kmax = kmin;
  double lo = ylog(table.rows.front().value), hi = lo;
  for (const auto& r : table.rows) {
    kmin = std::min(kmin, r.K);
    kmax = std::max(kmax, r.K);
    lo = std::min(lo, ylog(r.value));
    hi = std::max(hi, ylog(r.value));
  }
  double ylo = std::floor(lo), yhi = std::ceil(hi);
  if (yhi <= ylo) yhi = ylo + 1.0;
  const double xspan = kmax > kmin ? static_cast<double>(kmax - kmin) : 1.0;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto X = [&](int k) { return kLeft + (kmax > kmin ? (k - kmin) / xspan * pw : pw / 2.0); };
  auto Y = [&](double v) { return kTop + (yhi - ylog(v)) / (yhi - ylo) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth, 0) << "\" height=\"" << fmt(kHeight, 0)
     << "\" viewBox=\"0 0 " << fmt(kWidth, 0) << ' ' << fmt(kHeight, 0) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  // y ticks at integer decades, thinned to at most ~8 labels.
  const int decades = static_cast<int>(yhi - ylo);
  const int ystep = std::max(1, (decades + 7) / 8);
  for (int d = static_cast<int>(ylo); d <= static_cast<int>(yhi); d += ystep) {
    const double y = kTop + (yhi - d) / (yhi - ylo) * ph;
    os << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(kLeft + pw) << "\" y2=\"" << fmt(y)
       << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << fmt(kLeft - 6) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">1e" << d << "</text>\n";
  }
  // x ticks at every distinct K, thinned to at most ~12 labels.
  std::vector<int> ks;
  for (const auto& r : table.rows) ks.push_back(r.K);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  const std::size_t xstep = std::max<std::size_t>(1, (ks.size() + 11) / 12);
  for (std::size_t i = 0; i < ks.size(); i += xstep) {
    const double x = X(ks[i]);
    os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kTop + ph) << "\" x2=\"" << fmt(x) << "\" y2=\""
       << fmt(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kTop + ph + 18) << "\" text-anchor=\"middle\">" << ks[i]
       << "</text>\n";
  }
  os << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"" << fmt(kHeight - 10)
     << "\" text-anchor=\"middle\">K (iterations / unfoldings)</text>\n";
  os << "<text x=\"16\" y=\"" << fmt(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << fmt(kTop + ph / 2) << ")\">" << escape(table.metric) << " (log10)</text>\n";

  for (std::size_t s = 0; s < order.size(); ++s) {
    const auto& pts = series[order[s]];
    const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
    if (pts.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) os << (i ? " " : "") << fmt(X(pts[i].first)) << ',' << fmt(Y(pts[i].second));
      os << "\"/>\n";
    }
    for (const auto& [k, v] : pts)
      os << "<circle cx=\"" << fmt(X(k)) << "\" cy=\"" << fmt(Y(v)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = kTop + 14.0 + 20.0 * static_cast<double>(s);
    const double lx = kLeft + pw + 14.0;
    os << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << fmt(lx + 24) << "\" y2=\""
       << fmt(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fmt(lx + 30) << "\" y=\"" << fmt(ly) << "\">" << escape(order[s]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_plot(const ResultTable& table, const std::filesystem::path& out) {
  write_text_atomic(out, plot_svg(table));
}

} // namespace adalista
