#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "slrlab/errors.hpp"
#include "slrlab/harness.hpp"
#include "slrlab/optimizer.hpp"
#include "slrlab/stats.hpp"

namespace slrlab {

/// File-system failure; the message always carries the path.
class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(what + ": " + path.string()) {}
};

inline constexpr std::string_view kTrajectoryCsvHeader =
    "k,loss,grad_norm_sq,min_grad_sq,g_k,eta_k,u_k,sum_eta,envelope_det,envelope_case";

namespace detail {

inline std::string csv_real(double v) { return fmt17(v); }

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ValidationError("malformed number '" + s + "'");
  return v;
}

// Finds the envelope value at iteration k, if the envelope covers it.
inline std::optional<double> envelope_at(const RateEnvelope* env, std::size_t k) {
  if (env == nullptr) return std::nullopt;
  const auto it = std::lower_bound(env->ks.begin(), env->ks.end(), k);
  if (it == env->ks.end() || *it != k) return std::nullopt;
  return env->values[static_cast<std::size_t>(it - env->ks.begin())];
}

}  // namespace detail

/// Writes `content` to `path`, creating parent directories.
inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError(path, "write failed");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// One row per eval point. eta_k / u_k are empty at the final row (no step
/// is taken there); envelope columns are empty where the envelope is not
/// defined (k = 0) or not supplied.
inline std::string format_trajectory_csv(const Trajectory& tr, const RateEnvelope* det = nullptr,
                                         const RateEnvelope* case_env = nullptr) {
  std::string s(kTrajectoryCsvHeader);
  s += '\n';
  for (std::size_t i = 0; i < tr.eval_k.size(); ++i) {
    const std::size_t k = tr.eval_k[i];
    auto opt = [](std::optional<double> v) { return v ? detail::csv_real(*v) : std::string(); };
    s += std::to_string(k);
    s += ',' + detail::csv_real(tr.loss[i]);
    s += ',' + detail::csv_real(tr.grad_norm_sq[i]);
    s += ',' + detail::csv_real(tr.min_grad_sq[i]);
    s += ',' + (i < tr.g_series.size() ? detail::csv_real(tr.g_series[i]) : std::string());
    s += ',' + (k < tr.eta_series.size() ? detail::csv_real(tr.eta_series[k]) : std::string());
    s += ',' + (k < tr.u_series.size() ? detail::csv_real(tr.u_series[k]) : std::string());
    s += ',' + detail::csv_real(tr.sum_eta[i]);
    s += ',' + opt(detail::envelope_at(det, k));
    s += ',' + opt(detail::envelope_at(case_env, k));
    s += '\n';
  }
  return s;
}

inline void write_trajectory_csv(const Trajectory& tr, const std::filesystem::path& path,
                                 const RateEnvelope* det = nullptr, const RateEnvelope* case_env = nullptr) {
  write_text_file(path, format_trajectory_csv(tr, det, case_env));
}

/// Column-wise view of a trajectory CSV; empty cells read as NaN.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError("csv: no column '" + name + "'");
    return columns[static_cast<std::size_t>(it - header.begin())];
  }
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

inline CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      t.columns.resize(t.header.size());
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ValidationError("csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(t.header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::string cell = cells[c];
      if (cell == "true") cell = "1";
      if (cell == "false") cell = "0";
      t.columns[c].push_back(detail::parse_double(cell));
    }
  }
  return t;
}

// ---- comparison reports ----------------------------------------------------

inline constexpr std::string_view kReportCsvHeader = "k,mean_a,mean_b,t,df,p,significant,wins_a,wins_b,n_a,n_b";

inline std::string format_report_csv(const ComparisonReport& r) {
  std::string s(kReportCsvHeader);
  s += '\n';
  for (const auto& row : r.rows) {
    s += std::to_string(row.k) + ',' + fmt17(row.mean_a) + ',' + fmt17(row.mean_b) + ',' + fmt17(row.t) + ',' +
         fmt17(row.df) + ',' + fmt17(row.p) + ',' + (row.significant ? "true" : "false") + ',' +
         std::to_string(row.wins_a) + ',' + std::to_string(row.wins_b) + ',' + std::to_string(row.n_a) + ',' +
         std::to_string(row.n_b) + '\n';
  }
  return s;
}

/// Line-oriented form: `key = value` header lines followed by one
/// `row = ...` line per checkpoint in the CSV column order. Lossless.
inline std::string format_report_text(const ComparisonReport& r) {
  std::string s;
  s += "method = " + r.method + "\n";
  s += "correction = " + r.correction + "\n";
  s += "fwer = " + fmt17(r.fwer) + "\n";
  s += "metric = " + r.metric + "\n";
  s += std::string("paired = ") + (r.paired ? "true" : "false") + "\n";
  s += "excluded_a = " + std::to_string(r.excluded_a) + "\n";
  s += "excluded_b = " + std::to_string(r.excluded_b) + "\n";
  s += "checkpoints = " + std::to_string(r.rows.size()) + "\n";
  const std::string csv = format_report_csv(r);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) s += "row = " + line + "\n";
  return s;
}

inline ComparisonReport parse_report_text(std::string_view text) {
  ComparisonReport r;
  r.rows.clear();
  std::optional<std::size_t> expected_rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto to_size = [](const std::string& v) { return static_cast<std::size_t>(std::stoull(v)); };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw ValidationError("report: malformed line " + std::to_string(line_no));
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    if (key == "method") {
      r.method = value;
    } else if (key == "correction") {
      r.correction = value;
    } else if (key == "fwer") {
      r.fwer = detail::parse_double(value);
    } else if (key == "metric") {
      r.metric = value;
    } else if (key == "paired") {
      r.paired = value == "true";
    } else if (key == "excluded_a") {
      r.excluded_a = to_size(value);
    } else if (key == "excluded_b") {
      r.excluded_b = to_size(value);
    } else if (key == "checkpoints") {
      expected_rows = to_size(value);
    } else if (key == "row") {
      const auto cells = detail::split_csv_line(value);
      if (cells.size() != 11) throw ValidationError("report: row on line " + std::to_string(line_no) + " malformed");
      CheckpointRow row;
      row.k = to_size(cells[0]);
      row.mean_a = detail::parse_double(cells[1]);
      row.mean_b = detail::parse_double(cells[2]);
      row.t = detail::parse_double(cells[3]);
      row.df = detail::parse_double(cells[4]);
      row.p = detail::parse_double(cells[5]);
      row.significant = cells[6] == "true";
      row.wins_a = to_size(cells[7]);
      row.wins_b = to_size(cells[8]);
      row.n_a = to_size(cells[9]);
      row.n_b = to_size(cells[10]);
      r.rows.push_back(row);
    } else {
      throw ValidationError("report: unknown key '" + key + "' on line " + std::to_string(line_no));
    }
  }
  if (expected_rows && *expected_rows != r.rows.size()) throw ValidationError("report: row count mismatch");
  return r;
}

/// Human-readable table.
inline std::string format_report_summary(const ComparisonReport& r, const std::string& label_a = "a",
                                         const std::string& label_b = "b") {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s t-test, %s correction, fwer %.3g over %zu checkpoints (threshold %.3g)\n",
                r.method.c_str(), r.correction.c_str(), r.fwer, r.rows.size(),
                r.rows.empty() ? r.fwer : r.fwer / static_cast<double>(r.rows.size()));
  s += buf;
  s += "metric " + r.metric + ", " + (r.paired ? "paired seeds" : "unpaired") + "; a = " + label_a +
       ", b = " + label_b + "\n";
  s += "truncated runs excluded: a " + std::to_string(r.excluded_a) + ", b " + std::to_string(r.excluded_b) + "\n";
  std::snprintf(buf, sizeof buf, "%10s %14s %14s %10s %8s %11s %4s %7s %7s\n", "k", "mean_a", "mean_b", "t", "df", "p",
                "sig", "wins_a", "wins_b");
  s += buf;
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%10zu %14.6g %14.6g %10.4g %8.3g %11.4g %4s %7zu %7zu\n", row.k, row.mean_a,
                  row.mean_b, row.t, row.df, row.p, row.significant ? "*" : "", row.wins_a, row.wins_b);
    s += buf;
  }
  return s;
}

inline void write_report(const ComparisonReport& r, const std::filesystem::path& dir) {
  write_text_file(dir / "report.csv", format_report_csv(r));
  write_text_file(dir / "report.txt", format_report_text(r));
}

// ---- metadata ----------------------------------------------------------------

/// Ordered `key = value` pairs.
using Metadata = std::vector<std::pair<std::string, std::string>>;

inline std::string format_metadata(const Metadata& m) {
  std::string s;
  for (const auto& [k, v] : m) s += k + " = " + v + "\n";
  return s;
}

// ---- SVG -------------------------------------------------------------------

struct PlotSeries {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "iteration k";
  std::string y_label = "value";
  bool log_x = true;
  bool log_y = true;
  int width = 800;
  int height = 500;
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
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

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

/// Line chart with one <polyline> per series, axis labels and a legend.
/// On log axes, non-positive or non-finite points are dropped.
inline std::string render_svg_string(const std::vector<PlotSeries>& series, const PlotOptions& opt = {}) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const double left = 80, right = 180, top = 40, bottom = 60;
  const double pw = opt.width - left - right;
  const double ph = opt.height - top - bottom;

  auto tx = [&](double v) { return opt.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return opt.log_y ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!opt.log_x || x > 0) && (!opt.log_y || y > 0);
  };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.xs.size(), s.ys.size()); ++i) {
      if (!usable(s.xs[i], s.ys[i])) continue;
      x0 = std::min(x0, tx(s.xs[i]));
      x1 = std::max(x1, tx(s.xs[i]));
      y0 = std::min(y0, ty(s.ys[i]));
      y1 = std::max(y1, ty(s.ys[i]));
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + (1.0 - (ty(v) - y0) / (y1 - y0)) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) + "\" height=\"" +
       std::to_string(opt.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty()) {
    s += "<text x=\"" + detail::svg_num(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         detail::xml_escape(opt.title) + "</text>\n";
  }
  s += "<rect x=\"" + detail::svg_num(left) + "\" y=\"" + detail::svg_num(top) + "\" width=\"" + detail::svg_num(pw) +
       "\" height=\"" + detail::svg_num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  // ticks at the range ends and middle, in data units
  for (int i = 0; i <= 2; ++i) {
    const double fx = x0 + (x1 - x0) * i / 2.0;
    const double fy = y0 + (y1 - y0) * i / 2.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", opt.log_x ? std::pow(10.0, fx) : fx);
    s += "<text x=\"" + detail::svg_num(left + pw * i / 2.0) + "\" y=\"" + detail::svg_num(top + ph + 18) +
         "\" text-anchor=\"middle\">" + buf + "</text>\n";
    std::snprintf(buf, sizeof buf, "%.3g", opt.log_y ? std::pow(10.0, fy) : fy);
    s += "<text x=\"" + detail::svg_num(left - 6) + "\" y=\"" + detail::svg_num(top + ph - ph * i / 2.0 + 4) +
         "\" text-anchor=\"end\">" + buf + "</text>\n";
  }
  s += "<text class=\"x-label\" x=\"" + detail::svg_num(left + pw / 2) + "\" y=\"" +
       detail::svg_num(opt.height - 15.0) + "\" text-anchor=\"middle\">" +
       detail::xml_escape(opt.x_label + (opt.log_x ? " (log)" : "")) + "</text>\n";
  s += "<text class=\"y-label\" x=\"18\" y=\"" + detail::svg_num(top + ph / 2) +
       "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + detail::svg_num(top + ph / 2) + ")\">" +
       detail::xml_escape(opt.y_label + (opt.log_y ? " (log)" : "")) + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& ser = series[si];
    const char* color = palette[si % std::size(palette)];
    std::string pts;
    for (std::size_t i = 0; i < std::min(ser.xs.size(), ser.ys.size()); ++i) {
      if (!usable(ser.xs[i], ser.ys[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += detail::svg_num(px(ser.xs[i])) + "," + detail::svg_num(py(ser.ys[i]));
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
         "\"/>\n";
  }

  s += "<g class=\"legend\">\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const double ly = top + 10 + 18.0 * static_cast<double>(si);
    const double lx = left + pw + 12;
    s += "<rect x=\"" + detail::svg_num(lx) + "\" y=\"" + detail::svg_num(ly - 8) +
         "\" width=\"14\" height=\"4\" fill=\"" + palette[si % std::size(palette)] + "\"/>\n";
    s += "<text x=\"" + detail::svg_num(lx + 20) + "\" y=\"" + detail::svg_num(ly - 2) + "\">" +
         detail::xml_escape(series[si].name) + "</text>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

inline void render_svg(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
                       const PlotOptions& opt = {}) {
  write_text_file(path, render_svg_string(series, opt));
}

}  // namespace slrlab
