#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace spiderweb::svg {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f4e9c";
  std::optional<std::vector<double>> spread;  // +-band around y
};

struct Panel {
  std::string title;
  std::vector<Series> series;
  std::string note;
};

struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Panel> panels;  // laid out 2 rows x 4 columns
  std::optional<std::pair<double, double>> x_range;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace detail

inline std::string render(const Figure& fig) {
  using detail::num;
  constexpr double pw = 260, ph = 190, margin_l = 48, margin_t = 28, gap_x = 24, gap_y = 46, top = 40;
  const int cols = 4;
  const int rows = static_cast<int>((fig.panels.size() + cols - 1) / cols);
  const double width = margin_l + cols * (pw + gap_x) + 10;
  const double height = top + rows * (ph + gap_y + margin_t) + 10;
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
       "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       detail::escape(fig.title) + "</text>\n";

  for (std::size_t p = 0; p < fig.panels.size(); ++p) {
    const Panel& panel = fig.panels[p];
    const double ox = margin_l + static_cast<double>(p % cols) * (pw + gap_x);
    const double oy = top + margin_t + static_cast<double>(p / cols) * (ph + gap_y + margin_t);

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    if (fig.x_range) {
      x0 = fig.x_range->first;
      x1 = fig.x_range->second;
    }
    for (const auto& se : panel.series)
      for (std::size_t i = 0; i < se.x.size(); ++i) {
        if (!fig.x_range) {
          x0 = std::min(x0, se.x[i]);
          x1 = std::max(x1, se.x[i]);
        } else if (se.x[i] < x0 || se.x[i] > x1) {
          continue;
        }
        const double sp = se.spread ? (*se.spread)[i] : 0.0;
        y0 = std::min(y0, se.y[i] - sp);
        y1 = std::max(y1, se.y[i] + sp);
      }
    if (!(x1 > x0)) { x0 = 0; x1 = 1; }
    if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto X = [&](double v) { return ox + (v - x0) / (x1 - x0) * pw; };
    auto Y = [&](double v) { return oy + ph - (v - y0) / (y1 - y0) * ph; };

    s += "<g>\n<text x=\"" + num(ox + pw / 2) + "\" y=\"" + num(oy - 8) + "\" text-anchor=\"middle\">" +
         detail::escape(panel.title) + "</text>\n";
    s += "<rect x=\"" + num(ox) + "\" y=\"" + num(oy) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double xv = x0 + (x1 - x0) * t / 4.0;
      const double yv = y0 + (y1 - y0) * t / 4.0;
      s += "<text x=\"" + num(X(xv)) + "\" y=\"" + num(oy + ph + 13) + "\" text-anchor=\"middle\">" +
           num(xv) + "</text>\n";
      s += "<text x=\"" + num(ox - 4) + "\" y=\"" + num(Y(yv) + 4) + "\" text-anchor=\"end\">" + num(yv) +
           "</text>\n";
    }
    s += "<text x=\"" + num(ox + pw / 2) + "\" y=\"" + num(oy + ph + 28) + "\" text-anchor=\"middle\">" +
         detail::escape(fig.x_label) + "</text>\n";
    s += "<text x=\"" + num(ox + 4) + "\" y=\"" + num(oy + 12) + "\">" + detail::escape(fig.y_label) + "</text>\n";

    for (const auto& se : panel.series) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < se.x.size(); ++i)
        if (se.x[i] >= x0 && se.x[i] <= x1) idx.push_back(i);
      if (idx.empty()) continue;
      if (se.spread) {
        std::string band;
        for (std::size_t i : idx) band += num(X(se.x[i])) + "," + num(Y(se.y[i] + (*se.spread)[i])) + " ";
        for (auto it = idx.rbegin(); it != idx.rend(); ++it)
          band += num(X(se.x[*it])) + "," + num(Y(se.y[*it] - (*se.spread)[*it])) + " ";
        s += "<polygon points=\"" + band + "\" fill=\"" + se.color + "\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
      }
      std::string line;
      for (std::size_t i : idx) line += num(X(se.x[i])) + "," + num(Y(se.y[i])) + " ";
      s += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + se.color + "\" stroke-width=\"1\"/>\n";
    }
    if (!panel.note.empty())
      s += "<text x=\"" + num(ox + pw - 4) + "\" y=\"" + num(oy + 12) + "\" text-anchor=\"end\" fill=\"#555\">" +
           detail::escape(panel.note) + "</text>\n";
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace spiderweb::svg
