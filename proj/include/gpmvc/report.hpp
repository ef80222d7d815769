#pragma once

#include "gpmvc/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gpmvc {

struct RunRecord {
  std::filesystem::path dir;
  ClusterResult metrics;
};

/// Every directory below `root` (root included) holding a metrics.json.
/// Sorted by path. Throws ValidationError when none is found.
std::vector<RunRecord> collect_runs(const std::filesystem::path& root);

enum class Metric { Acc, Nmi, Purity };
std::string to_string(Metric m);
double metric_value(const ClusterResult& r, Metric m);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation; 0 for a single run
};

MeanStd mean_std(const std::vector<double>& xs);

/// One (mode, ratio) cell of a sweep.
struct AggregateRow {
  std::string mode;
  double ratio = 0.0;
  std::size_t runs = 0;
  MeanStd acc;
  MeanStd nmi;
  MeanStd purity;

  const MeanStd& get(Metric m) const;
};

/// Groups by (mode, ratio); rows ordered by mode name, then ratio.
std::vector<AggregateRow> aggregate(const std::vector<ClusterResult>& results);

/// Long format: mode,ratio,runs,acc_mean,acc_std,nmi_mean,nmi_std,purity_mean,purity_std
std::string format_csv(const std::vector<AggregateRow>& rows);

enum class TableStyle { Text, Markdown, Csv };

/// Wide table for one metric: a row per mode, a column per ratio, cells
/// "mean±std" (Csv style puts mean and std in separate columns).
std::string format_metric_table(const std::vector<AggregateRow>& rows, Metric metric, TableStyle style);

/// Line plot of the metric's mean against the ratio, one curve per mode with
/// std error bars, as a standalone SVG file.
void write_svg_plot(const std::vector<AggregateRow>& rows, Metric metric, const std::filesystem::path& path);

}  // namespace gpmvc
