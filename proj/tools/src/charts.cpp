#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "vabo/experiment.hpp"

namespace vabo::experiment {

namespace {

struct Series {
  std::string label;
  std::vector<double> y;  // indexed by iteration
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string field;
  while (std::getline(in, field, ',')) out.push_back(field);
  return out;
}

/// Per-iteration incumbent value and total spent cost read from a trace CSV,
/// carried forward to `iterations` when the run stopped early.
bool read_trace(const std::filesystem::path& path, std::size_t iterations, std::vector<double>& incumbent,
                std::vector<double>& spent) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) return false;
  const auto header = split(line);
  std::optional<std::size_t> it_col;
  std::optional<std::size_t> inc_col;
  std::vector<std::size_t> spent_cols;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == "iteration") it_col = k;
    if (header[k] == "incumbent_value") inc_col = k;
    if (header[k].rfind("spent_", 0) == 0) spent_cols.push_back(k);
  }
  if (!it_col || !inc_col) return false;
  incumbent.assign(iterations + 1, std::nan(""));
  spent.assign(iterations + 1, std::nan(""));
  std::size_t last = 0;
  bool any = false;
  while (std::getline(in, line)) {
    const auto row = split(line);
    if (row.size() != header.size()) continue;
    const std::size_t t = std::strtoull(row[*it_col].c_str(), nullptr, 10);
    if (t > iterations) continue;
    incumbent[t] = std::strtod(row[*inc_col].c_str(), nullptr);
    double total = 0.0;
    for (auto c : spent_cols) total += std::strtod(row[c].c_str(), nullptr);
    spent[t] = total;
    last = std::max(last, t);
    any = true;
  }
  if (!any) return false;
  for (std::size_t t = 1; t <= iterations; ++t) {
    if (std::isnan(incumbent[t])) incumbent[t] = incumbent[t - 1];
    if (std::isnan(spent[t])) spent[t] = spent[t - 1];
  }
  return true;
}

constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string tick_label(double v) { return fmt::format("{:.4g}", v); }

void write_chart(const std::filesystem::path& path, const std::string& title, const std::string& y_label,
                 const std::vector<Series>& series, std::size_t iterations) {
  constexpr double width = 760.0;
  constexpr double height = 440.0;
  constexpr double left = 80.0;
  constexpr double right = 190.0;
  constexpr double top = 40.0;
  constexpr double bottom = 50.0;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    for (double v : s.y) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    lo -= 0.5 * std::max(1.0, std::abs(lo) * 0.01);
    hi += 0.5 * std::max(1.0, std::abs(hi) * 0.01);
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double x_span = std::max<double>(1.0, static_cast<double>(iterations));
  auto px = [&](double t) { return left + plot_w * t / x_span; };
  auto py = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

  std::ofstream out(path, std::ios::binary);
  fmt::print(out,
             "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
             "font-family=\"sans-serif\" font-size=\"12\">\n",
             width, height);
  fmt::print(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
  fmt::print(out, "<text x=\"{:.1f}\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
             left + plot_w / 2, title);
  fmt::print(out, "<rect x=\"{}\" y=\"{}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"#333\"/>\n", left,
             top, plot_w, plot_h);
  for (int k = 0; k <= 5; ++k) {
    const double v = lo + (hi - lo) * k / 5.0;
    const double y = py(v);
    fmt::print(out, "<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#ddd\"/>\n", left, y,
               left + plot_w, y);
    fmt::print(out, "<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", left - 6, y + 4, tick_label(v));
  }
  const std::size_t x_step = std::max<std::size_t>(1, (iterations + 9) / 10);
  for (std::size_t t = 0; t <= iterations; t += x_step) {
    fmt::print(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", px(static_cast<double>(t)),
               top + plot_h + 18, t);
  }
  fmt::print(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">iteration</text>\n", left + plot_w / 2,
             height - 10);
  fmt::print(out,
             "<text x=\"18\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0:.1f})\">{1}</text>\n",
             top + plot_h / 2, y_label);

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % kPalette.size()];
    std::string points;
    for (std::size_t t = 0; t < series[k].y.size(); ++t) {
      if (!std::isfinite(series[k].y[t])) continue;
      points += fmt::format("{:.1f},{:.1f} ", px(static_cast<double>(t)), py(series[k].y[t]));
    }
    fmt::print(out, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", color, points);
    const double ly = top + 10 + 18.0 * static_cast<double>(k);
    fmt::print(out, "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
               left + plot_w + 12, ly, left + plot_w + 36, color);
    fmt::print(out, "<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", left + plot_w + 42, ly + 4, series[k].label);
  }
  fmt::print(out, "</svg>\n");
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

void render_charts(const std::filesystem::path& out_dir, const std::vector<CellResult>& cells,
                   std::size_t iterations) {
  std::vector<std::pair<Algorithm, double>> groups;
  for (const auto& c : cells) {
    const std::pair key{c.algorithm, c.budget};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  std::vector<Series> convergence;
  std::vector<Series> violation;
  for (const auto& [algorithm, budget] : groups) {
    std::vector<double> inc_sum(iterations + 1, 0.0);
    std::vector<double> spent_sum(iterations + 1, 0.0);
    std::size_t runs = 0;
    for (const auto& c : cells) {
      if (c.algorithm != algorithm || c.budget != budget) continue;
      std::vector<double> inc;
      std::vector<double> spent;
      if (!read_trace(out_dir / trace_file_name(c.algorithm, c.budget, c.seed), iterations, inc, spent)) continue;
      for (std::size_t t = 0; t <= iterations; ++t) {
        inc_sum[t] += inc[t];
        spent_sum[t] += spent[t];
      }
      ++runs;
    }
    if (runs == 0) continue;
    const std::string label = fmt::format("{} B={} (n={})", to_string(algorithm), format_budget(budget), runs);
    Series a{label, {}};
    Series b{label, {}};
    for (std::size_t t = 0; t <= iterations; ++t) {
      a.y.push_back(inc_sum[t] / static_cast<double>(runs));
      b.y.push_back(spent_sum[t] / static_cast<double>(runs));
    }
    convergence.push_back(std::move(a));
    violation.push_back(std::move(b));
  }
  write_chart(out_dir / "convergence.svg", "Best feasible objective (mean over seeds)", "incumbent value",
              convergence, iterations);
  write_chart(out_dir / "violation.svg", "Cumulative violation cost (mean over seeds)", "total spent", violation,
              iterations);
}

}  // namespace vabo::experiment
