#include "gpmvc/report.hpp"

#include "gpmvc/run_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace gpmvc {

namespace fs = std::filesystem;

std::vector<RunRecord> collect_runs(const fs::path& root) {
  if (!fs::exists(root)) throw ValidationError("run path does not exist: " + root.string());
  std::vector<RunRecord> out;
  auto visit = [&](const fs::path& dir) {
    const fs::path m = dir / "metrics.json";
    if (fs::is_regular_file(m)) out.push_back({dir, read_metrics(m)});
  };
  visit(root);
  if (fs::is_directory(root)) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_directory()) visit(entry.path());
    }
  }
  if (out.empty()) throw ValidationError("no run directories (metrics.json) under " + root.string());
  std::sort(out.begin(), out.end(), [](const RunRecord& a, const RunRecord& b) { return a.dir < b.dir; });
  return out;
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::Acc: return "ACC";
    case Metric::Nmi: return "NMI";
    case Metric::Purity: return "Purity";
  }
  return "ACC";
}

double metric_value(const ClusterResult& r, Metric m) {
  switch (m) {
    case Metric::Acc: return r.acc;
    case Metric::Nmi: return r.nmi;
    case Metric::Purity: return r.purity;
  }
  return r.acc;
}

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

const MeanStd& AggregateRow::get(Metric m) const {
  switch (m) {
    case Metric::Acc: return acc;
    case Metric::Nmi: return nmi;
    case Metric::Purity: return purity;
  }
  return acc;
}

std::vector<AggregateRow> aggregate(const std::vector<ClusterResult>& results) {
  std::map<std::pair<std::string, double>, std::vector<const ClusterResult*>> cells;
  for (const auto& r : results) cells[{r.mode, r.ratio}].push_back(&r);
  std::vector<AggregateRow> rows;
  for (const auto& [key, members] : cells) {
    AggregateRow row;
    row.mode = key.first;
    row.ratio = key.second;
    row.runs = members.size();
    std::vector<double> a, n, p;
    for (const auto* r : members) {
      a.push_back(r->acc);
      n.push_back(r->nmi);
      p.push_back(r->purity);
    }
    row.acc = mean_std(a);
    row.nmi = mean_std(n);
    row.purity = mean_std(p);
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string num(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

std::string ratio_label(double r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", r);
  return buf;
}

std::vector<std::string> modes_of(const std::vector<AggregateRow>& rows) {
  std::vector<std::string> modes;
  for (const auto& r : rows) {
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
  }
  return modes;
}

std::vector<double> ratios_of(const std::vector<AggregateRow>& rows) {
  std::set<double> s;
  for (const auto& r : rows) s.insert(r.ratio);
  return {s.begin(), s.end()};
}

const AggregateRow* find_cell(const std::vector<AggregateRow>& rows, const std::string& mode, double ratio) {
  for (const auto& r : rows) {
    if (r.mode == mode && r.ratio == ratio) return &r;
  }
  return nullptr;
}

std::string xml_escape(const std::string& s) {
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

}  // namespace

std::string format_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os << "mode,ratio,runs,acc_mean,acc_std,nmi_mean,nmi_std,purity_mean,purity_std\n";
  for (const auto& r : rows) {
    os << r.mode << ',' << ratio_label(r.ratio) << ',' << r.runs << ',' << num(r.acc.mean, 6) << ','
       << num(r.acc.std, 6) << ',' << num(r.nmi.mean, 6) << ',' << num(r.nmi.std, 6) << ','
       << num(r.purity.mean, 6) << ',' << num(r.purity.std, 6) << '\n';
  }
  return os.str();
}

std::string format_metric_table(const std::vector<AggregateRow>& rows, Metric metric, TableStyle style) {
  const auto modes = modes_of(rows);
  const auto ratios = ratios_of(rows);
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"mode"};
  for (double r : ratios) {
    if (style == TableStyle::Csv) {
      header.push_back(to_string(metric) + "_mean@" + ratio_label(r));
      header.push_back(to_string(metric) + "_std@" + ratio_label(r));
    } else {
      header.push_back(ratio_label(r));
    }
  }
  cells.push_back(header);
  for (const auto& mode : modes) {
    std::vector<std::string> line{mode};
    for (double r : ratios) {
      const AggregateRow* cell = find_cell(rows, mode, r);
      if (style == TableStyle::Csv) {
        line.push_back(cell ? num(cell->get(metric).mean) : "");
        line.push_back(cell ? num(cell->get(metric).std) : "");
      } else {
        line.push_back(cell ? num(cell->get(metric).mean) + "±" + num(cell->get(metric).std) : "-");
      }
    }
    cells.push_back(line);
  }

  std::ostringstream os;
  if (style == TableStyle::Csv) {
    for (const auto& line : cells) {
      for (std::size_t c = 0; c < line.size(); ++c) os << (c ? "," : "") << line[c];
      os << '\n';
    }
    return os.str();
  }
  // display width counts "±" as one column
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], width(line[c]));
  }
  auto emit = [&](const std::vector<std::string>& line) {
    if (style == TableStyle::Markdown) os << "| ";
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c) os << (style == TableStyle::Markdown ? " | " : "  ");
      os << line[c] << std::string(widths[c] - width(line[c]), ' ');
    }
    if (style == TableStyle::Markdown) os << " |";
    os << '\n';
  };
  if (style == TableStyle::Text) os << to_string(metric) << '\n';
  emit(cells[0]);
  if (style == TableStyle::Markdown) {
    os << "|";
    for (std::size_t c = 0; c < widths.size(); ++c) os << std::string(widths[c] + 2, '-') << "|";
    os << '\n';
  }
  for (std::size_t i = 1; i < cells.size(); ++i) emit(cells[i]);
  return os.str();
}

void write_svg_plot(const std::vector<AggregateRow>& rows, Metric metric, const fs::path& path) {
  if (rows.empty()) throw ValidationError("nothing to plot");
  const double W = 640, H = 420, left = 70, right = 150, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  const auto modes = modes_of(rows);
  const auto ratios = ratios_of(rows);
  double xmin = ratios.front(), xmax = ratios.back();
  if (xmax - xmin < 1e-9) {
    xmin -= 0.1;
    xmax += 0.1;
  }
  double ymin = 1.0, ymax = 0.0;
  for (const auto& r : rows) {
    ymin = std::min(ymin, r.get(metric).mean - r.get(metric).std);
    ymax = std::max(ymax, r.get(metric).mean + r.get(metric).std);
  }
  ymin = std::max(0.0, std::floor(ymin * 10.0) / 10.0);
  ymax = std::min(1.0, std::ceil(ymax * 10.0) / 10.0);
  if (ymax - ymin < 0.1) {
    ymax = std::min(1.0, ymin + 0.1);
    ymin = ymax - 0.1;
  }
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << to_string(metric)
     << " vs impartial ratio</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double x : ratios) {
    os << "<line x1=\"" << sx(x) << "\" y1=\"" << top + ph << "\" x2=\"" << sx(x) << "\" y2=\"" << top + ph + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << sx(x) << "\" y=\"" << top + ph + 20 << "\" text-anchor=\"middle\">" << ratio_label(x)
       << "</text>\n";
  }
  const int yticks = static_cast<int>(std::lround((ymax - ymin) / 0.1));
  for (int t = 0; t <= yticks; ++t) {
    const double y = ymin + 0.1 * t;
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << sy(y) << "\" x2=\"" << left + pw << "\" y2=\"" << sy(y)
       << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << num(y, 1) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">impartial ratio</text>\n";
  os << "<text transform=\"translate(20," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << to_string(metric) << "</text>\n";

  for (std::size_t m = 0; m < modes.size(); ++m) {
    const char* color = palette[m % (sizeof(palette) / sizeof(palette[0]))];
    std::ostringstream pts;
    for (double x : ratios) {
      const AggregateRow* cell = find_cell(rows, modes[m], x);
      if (!cell) continue;
      const auto& s = cell->get(metric);
      pts << sx(x) << ',' << sy(s.mean) << ' ';
      os << "<line x1=\"" << sx(x) << "\" y1=\"" << sy(s.mean - s.std) << "\" x2=\"" << sx(x) << "\" y2=\""
         << sy(s.mean + s.std) << "\" stroke=\"" << color << "\"/>\n";
      os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(s.mean) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    os << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    const double ly = top + 15 + 20.0 * static_cast<double>(m);
    os << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 46 << "\" y=\"" << ly + 4 << "\">" << xml_escape(modes[m]) << "</text>\n";
  }
  os << "</svg>\n";

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << os.str();
}

}  // namespace gpmvc
