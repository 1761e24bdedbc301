#include "dagnet/plot.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "dagnet/error.hpp"
#include "dagnet/format.hpp"

namespace dagnet {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == ',') {
      out.emplace_back();
    } else if (c != '\r' && c != ' ' && c != '\t') {
      out.back() += c;
    }
  }
  return out;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

PlotData load_plot_data(const std::string& csv_text, const std::string& x_column,
                        const std::string& y_column) {
  std::istringstream in(csv_text);
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::size_t> xi, yi;
  std::size_t ncols = 0;
  std::map<double, std::pair<double, std::size_t>> acc;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const auto cells = split_csv(line);
    if (!xi) {
      ncols = cells.size();
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == x_column) xi = i;
        if (cells[i] == y_column) yi = i;
      }
      if (!xi) throw Error(fmt::format("missing column '{}'", x_column));
      if (!yi) throw Error(fmt::format("missing column '{}'", y_column));
      continue;
    }
    if (cells.size() != ncols) {
      throw ParseError(lineno, fmt::format("expected {} fields, got {}", ncols, cells.size()));
    }
    auto value = [&](std::size_t col) {
      const std::string& s = cells[col];
      double v = 0.0;
      std::size_t pos = 0;
      try {
        v = std::stod(s, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != s.size() || s.empty()) {
        throw ParseError(lineno, fmt::format("column '{}' is not a number: '{}'",
                                             col == *xi ? x_column : y_column, s));
      }
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ParseError(lineno, fmt::format("column '{}' value {} is not positive; "
                                             "log axes need positive values",
                                             col == *xi ? x_column : y_column, s));
      }
      return v;
    };
    const double x = value(*xi);
    const double y = value(*yi);
    auto& a = acc[x];
    a.first += y;
    a.second += 1;
  }
  if (!xi) throw Error("CSV has no header row");
  if (acc.empty()) throw Error("CSV has no data rows");
  PlotData data;
  for (const auto& [x, a] : acc) {
    data.x.push_back(x);
    data.mean.push_back(a.first / static_cast<double>(a.second));
  }
  if (data.x.size() >= 2) data.fit = fit_loglog_slope(data.x, data.mean);
  return data;
}

std::string render_svg(const PlotData& data, const std::string& x_label,
                       const std::string& y_label) {
  constexpr double W = 640, H = 480, L = 80, R = 30, T = 40, B = 60;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    lx.push_back(std::log2(data.x[i]));
    ly.push_back(std::log2(data.mean[i]));
  }
  // Reference line y = y0 - 0.5 (x - x0).
  auto reference = [&](double x) { return ly.front() - 0.5 * (x - lx.front()); };
  double x0 = *std::min_element(lx.begin(), lx.end());
  double x1 = *std::max_element(lx.begin(), lx.end());
  double y0 = *std::min_element(ly.begin(), ly.end());
  double y1 = *std::max_element(ly.begin(), ly.end());
  if (data.fit) {
    for (double x : {x0, x1}) {
      y0 = std::min({y0, reference(x), data.fit->intercept + data.fit->slope * x});
      y1 = std::max({y1, reference(x), data.fit->intercept + data.fit->slope * x});
    }
  }
  x0 = std::floor(x0 - 0.25);
  x1 = std::ceil(x1 + 0.25);
  y0 = std::floor(y0 - 0.25);
  y1 = std::ceil(y1 + 0.25);
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::string s;
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      W, H, W, H);
  s += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
  s += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", L,
      T, W - L - R, H - T - B);
  const int xstep = std::max(1, static_cast<int>((x1 - x0) / 10));
  for (int k = static_cast<int>(x0); k <= static_cast<int>(x1); k += xstep) {
    s += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#ddd\"/>"
        "<text x=\"{0:.2f}\" y=\"{3}\" text-anchor=\"middle\">2^{4}</text>\n",
        px(k), T, H - B, H - B + 18, k);
  }
  const int ystep = std::max(1, static_cast<int>((y1 - y0) / 10));
  for (int k = static_cast<int>(y0); k <= static_cast<int>(y1); k += ystep) {
    s += fmt::format(
        "<line x1=\"{1}\" y1=\"{0:.2f}\" x2=\"{2}\" y2=\"{0:.2f}\" stroke=\"#ddd\"/>"
        "<text x=\"{3}\" y=\"{0:.2f}\" text-anchor=\"end\" dominant-baseline=\"middle\">2^{4}"
        "</text>\n",
        py(k), L, W - R, L - 6, k);
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{} (log2)</text>\n",
                   L + (W - L - R) / 2, H - 15, escape(x_label));
  s += fmt::format(
      "<text x=\"20\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {0})\">"
      "{1} (log2)</text>\n",
      T + (H - T - B) / 2, escape(y_label));
  if (data.fit) {
    const auto& f = *data.fit;
    s += fmt::format(
        "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#1f77b4\" "
        "stroke-width=\"1.5\"/>\n",
        px(x0), py(f.intercept + f.slope * x0), px(x1), py(f.intercept + f.slope * x1));
    s += fmt::format(
        "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#d62728\" "
        "stroke-dasharray=\"6 4\"/>\n",
        px(x0), py(reference(x0)), px(x1), py(reference(x1)));
    s += fmt::format(
        "<text x=\"{}\" y=\"{}\" fill=\"#1f77b4\">fit slope {:.3f}</text>"
        "<text x=\"{}\" y=\"{}\" fill=\"#d62728\">reference slope -1/2</text>\n",
        L + 10, T + 18, f.slope, L + 10, T + 34);
    s += "<polyline fill=\"none\" stroke=\"black\" points=\"";
    for (std::size_t i = 0; i < lx.size(); ++i) {
      s += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", px(lx[i]), py(ly[i]));
    }
    s += "\"/>\n";
  }
  for (std::size_t i = 0; i < lx.size(); ++i) {
    s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"black\"/>\n", px(lx[i]),
                     py(ly[i]));
  }
  s += "</svg>\n";
  return s;
}

void emit_plot(const std::string& csv_path, const std::string& x_column,
               const std::string& y_column, const std::string& out_path) {
  const PlotData data = load_plot_data(load_text_file(csv_path), x_column, y_column);
  save_text_file(out_path, render_svg(data, x_column, y_column));
}

}  // namespace dagnet
