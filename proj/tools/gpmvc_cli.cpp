// gpmvc: masking, training, sweeps, reports and generated-sample dumps.
//
// Exit codes: 0 success, 2 invalid input, 3 runtime failure.

#include "gpmvc/dataio.hpp"
#include "gpmvc/report.hpp"
#include "gpmvc/run_io.hpp"
#include "gpmvc/trainer.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <spawn.h>
#include <sys/wait.h>
#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

extern char** environ;

namespace fs = std::filesystem;
using namespace gpmvc;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

void warn_overwrite(const fs::path& p) {
  if (fs::exists(p)) std::cerr << "warning: overwriting " << p.string() << '\n';
}

std::string ratio_tag(double r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", r);
  return buf;
}

TrainConfig load_train_config(const std::string& path) {
  if (path.empty()) return TrainConfig{};
  return train_config_from_json(read_json_file(path));
}

// ---- mask ------------------------------------------------------------------

struct MaskArgs {
  std::string data, out;
  double ratio = 0.5;
  std::uint64_t seed = 0;
};

int cmd_mask(const MaskArgs& a) {
  if (!(a.ratio >= 0.0 && a.ratio <= 1.0)) throw ValidationError("ratio must be in [0,1]");
  const MultiViewDataset ds = load_dataset(a.data);
  const PartialSplit split = make_partial_split(ds, a.ratio, a.seed);
  warn_overwrite(a.out);
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  save_split(split, a.out);
  std::cout << "mask: " << split.paired_idx.size() << " paired, " << split.unpaired.size() << " unpaired -> "
            << a.out << '\n';
  return 0;
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
  std::string data, mask, config, out;
  bool baseline = false;
  std::optional<std::uint64_t> seed;
};

int cmd_run(const RunArgs& a) {
  const MultiViewDataset ds = load_dataset(a.data);
  const PartialSplit split = load_split(a.mask);
  TrainConfig config = load_train_config(a.config);
  config.seed = a.seed.value_or(split.seed);
  const fs::path out(a.out);
  ClusterResult result;
  if (a.baseline) {
    result = run_mean_impute_baseline(ds, split, config);
    if (fs::exists(out / "metrics.json")) std::cerr << "warning: overwriting run directory " << out.string() << '\n';
    fs::create_directories(out);
    write_json_file(to_json(RunConfig{.train = config, .data = fs::path(a.data), .baseline = true}), out / "config.json");
    save_split(split, out / "mask.json");
    write_metrics(result, out / "metrics.json");
  } else {
    PipelineOptions opts;
    opts.run_dir = out;
    opts.data_path = fs::path(a.data);
    result = run_pipeline(ds, split, config, opts);
  }
  std::cout << result.mode << " ratio=" << result.ratio << " seed=" << result.seed << " acc=" << result.acc
            << " nmi=" << result.nmi << " purity=" << result.purity << '\n';
  return 0;
}

// ---- sweep -----------------------------------------------------------------

struct SweepSpec {
  fs::path data;
  std::vector<double> ratios{0.1, 0.3, 0.5, 0.7, 0.9};
  int repeats = 10;
  std::uint64_t seed = 0;
  std::vector<std::string> modes{"ALL"};
  json config = json::object();
  fs::path out = "sweep";
  int jobs = 1;
};

SweepSpec load_sweep_spec(const fs::path& path) {
  const json j = read_json_file(path);
  SweepSpec s;
  try {
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    s.data = resolve(j.at("data").get<std::string>());
    s.ratios = j.value("ratios", s.ratios);
    s.repeats = j.value("repeats", s.repeats);
    s.seed = j.value("seed", s.seed);
    s.modes = j.value("modes", s.modes);
    s.jobs = j.value("jobs", s.jobs);
    if (j.contains("out")) s.out = resolve(j.at("out").get<std::string>());
    if (j.contains("config")) {
      s.config = j.at("config").is_string() ? read_json_file(resolve(j.at("config").get<std::string>())) : j.at("config");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad sweep spec: ") + e.what());
  }
  if (s.ratios.empty()) throw ValidationError("sweep needs at least one ratio");
  for (double r : s.ratios) {
    if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("ratio must be in [0,1]");
  }
  if (s.repeats < 1) throw ValidationError("repeats must be at least 1");
  if (s.jobs < 1) throw ValidationError("jobs must be at least 1");
  for (const auto& m : s.modes) {
    if (m != "mean_impute") parse_ablation_mode(m);
  }
  return s;
}

struct SweepJob {
  std::string mode;
  double ratio;
  std::uint64_t seed;
  fs::path dir;
  std::vector<std::string> argv;
};

pid_t spawn_job(const SweepJob& job) {
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  const std::string log = (job.dir / "run.log").string();
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  std::vector<char*> argv;
  for (const auto& s : job.argv) argv.push_back(const_cast<char*>(s.c_str()));
  argv.push_back(nullptr);
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw RuntimeFailure(std::string("cannot start run: ") + std::strerror(rc));
  return pid;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_override, int jobs_override) {
  SweepSpec spec = load_sweep_spec(spec_path);
  if (!out_override.empty()) spec.out = out_override;
  if (jobs_override > 0) spec.jobs = jobs_override;
  const MultiViewDataset ds = load_dataset(spec.data);
  const std::string self = fs::read_symlink("/proc/self/exe").string();
  fs::create_directories(spec.out);

  std::deque<SweepJob> pending;
  for (const auto& mode : spec.modes) {
    json cfg = spec.config;
    if (mode != "mean_impute") cfg["ablation_mode"] = mode;
    train_config_from_json(cfg);  // validate before launching anything
    const fs::path cfg_path = spec.out / ("config_" + mode + ".json");
    write_json_file(cfg, cfg_path);
    for (double ratio : spec.ratios) {
      for (int rep = 0; rep < spec.repeats; ++rep) {
        SweepJob job;
        job.mode = mode;
        job.ratio = ratio;
        job.seed = spec.seed + static_cast<std::uint64_t>(rep);
        job.dir = spec.out / mode / ("ratio_" + ratio_tag(ratio)) / ("seed_" + std::to_string(job.seed));
        fs::create_directories(job.dir);
        const fs::path mask = job.dir / "mask.json";
        save_split(make_partial_split(ds, ratio, job.seed), mask);
        job.argv = {self, "run", "--data", spec.data.string(), "--mask", mask.string(), "--config", cfg_path.string(),
                    "--out", job.dir.string()};
        if (mode == "mean_impute") job.argv.push_back("--baseline");
        pending.push_back(std::move(job));
      }
    }
  }

  const std::size_t total = pending.size();
  std::map<pid_t, SweepJob> running;
  std::vector<ClusterResult> results;
  std::vector<std::string> failures;
  std::size_t done = 0;
  while (!pending.empty() || !running.empty()) {
    while (!pending.empty() && static_cast<int>(running.size()) < spec.jobs) {
      SweepJob job = std::move(pending.front());
      pending.pop_front();
      const pid_t pid = spawn_job(job);
      running.emplace(pid, std::move(job));
    }
    int status = 0;
    const pid_t pid = waitpid(-1, &status, 0);
    if (pid < 0) throw RuntimeFailure("waitpid failed");
    auto it = running.find(pid);
    if (it == running.end()) continue;
    const SweepJob job = std::move(it->second);
    running.erase(it);
    ++done;
    const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
    if (ok) {
      results.push_back(read_metrics(job.dir / "metrics.json"));
      std::cerr << "[" << done << "/" << total << "] " << job.mode << " ratio=" << ratio_tag(job.ratio)
                << " seed=" << job.seed << " acc=" << results.back().acc << '\n';
    } else {
      failures.push_back(job.dir.string());
      std::cerr << "[" << done << "/" << total << "] FAILED " << job.dir.string() << " (see run.log)\n";
    }
  }

  if (!failures.empty()) {
    std::ofstream f(spec.out / "failures.txt");
    for (const auto& d : failures) f << d << '\n';
  }
  if (results.empty()) throw RuntimeFailure("every run of the sweep failed");
  const auto rows = aggregate(results);
  {
    std::ofstream f(spec.out / "summary.csv");
    f << format_csv(rows);
  }
  std::string tables;
  for (Metric m : {Metric::Acc, Metric::Nmi, Metric::Purity}) tables += format_metric_table(rows, m, TableStyle::Text) + "\n";
  {
    std::ofstream f(spec.out / "summary.txt");
    f << tables;
  }
  std::cout << tables;
  std::cout << results.size() << " runs aggregated";
  if (!failures.empty()) std::cout << ", " << failures.size() << " failed (failures.txt)";
  std::cout << '\n';
  return 0;
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> runs;
  std::string format = "text";
  std::string plots;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  std::vector<ClusterResult> results;
  for (const auto& root : a.runs) {
    for (auto& rec : collect_runs(root)) results.push_back(std::move(rec.metrics));
  }
  const auto rows = aggregate(results);
  TableStyle style = TableStyle::Text;
  if (a.format == "csv") style = TableStyle::Csv;
  if (a.format == "md") style = TableStyle::Markdown;
  const std::string table = format_metric_table(rows, Metric::Acc, style);
  if (a.out.empty()) {
    std::cout << table;
  } else {
    warn_overwrite(a.out);
    std::ofstream f(a.out);
    if (!f) throw RuntimeFailure("cannot write " + a.out);
    f << table;
  }
  if (!a.plots.empty()) {
    const fs::path dir(a.plots);
    for (auto [metric, name] : {std::pair{Metric::Nmi, "nmi.svg"}, std::pair{Metric::Purity, "purity.svg"}}) {
      warn_overwrite(dir / name);
      write_svg_plot(rows, metric, dir / name);
    }
    std::cerr << "plots written to " << dir.string() << '\n';
  }
  return 0;
}

// ---- dump-generated --------------------------------------------------------

struct DumpArgs {
  std::string run, out;
  int view = 0;
  int count = 8;
  std::optional<int> source;
};

int cmd_dump_generated(const DumpArgs& a) {
  if (a.count < 1) throw ValidationError("count must be positive: nothing to dump");
  const fs::path run(a.run);
  const RunConfig rc = run_config_from_json(read_json_file(run / "config.json"));
  if (!rc.data) throw ValidationError("config.json does not record the dataset location");
  const MultiViewDataset ds = load_dataset(*rc.data);
  const PartialSplit split = load_split(run / "mask.json");
  ModelState model;
  Matrix centroids;
  load_checkpoint(run / "checkpoint.bin", model, centroids);
  if (a.view < 0 || a.view >= static_cast<int>(ds.num_views())) throw ValidationError("view index out of range");
  if (ds.image_shapes.size() <= static_cast<std::size_t>(a.view) || !ds.image_shapes[static_cast<std::size_t>(a.view)]) {
    throw ValidationError("view " + std::to_string(a.view) +
                          " is not image-valued: image_shapes metadata in the manifest is required");
  }
  const auto source = a.source ? a.source : default_source_view(ds, a.view);
  if (!source) throw ValidationError("no other image-valued view to generate from");
  const fs::path dir = a.out.empty() ? run / "generated_samples" : fs::path(a.out);
  const fs::path file = write_generated_grid(model, ds, split, a.view, *source, a.count, dir);
  std::cout << file.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* det = std::getenv("GPMVC_DETERMINISTIC"); det && std::string(det) == "1") Eigen::setNbThreads(1);

  CLI::App app{"Generative partial multi-view clustering"};
  app.require_subcommand(1);

  MaskArgs mask;
  auto* sub_mask = app.add_subcommand("mask", "Draw a missing-view pattern");
  sub_mask->add_option("--data", mask.data, "Dataset directory or manifest")->required();
  sub_mask->add_option("--ratio", mask.ratio, "Fraction of paired samples")->required();
  sub_mask->add_option("--seed", mask.seed, "Mask seed");
  sub_mask->add_option("--out", mask.out, "Output mask file")->required();

  RunArgs run;
  std::uint64_t run_seed = 0;
  auto* sub_run = app.add_subcommand("run", "Train and evaluate on one mask");
  sub_run->add_option("--data", run.data, "Dataset directory or manifest")->required();
  sub_run->add_option("--mask", run.mask, "Mask file from `mask`")->required();
  sub_run->add_option("--config", run.config, "Training config JSON");
  sub_run->add_option("--out", run.out, "Run directory")->required();
  auto* seed_opt = sub_run->add_option("--seed", run_seed, "Training seed (default: the mask seed)");
  sub_run->add_flag("--baseline", run.baseline, "Mean-impute baseline instead of the full model");

  std::string spec_path, sweep_out;
  int sweep_jobs = 0;
  auto* sub_sweep = app.add_subcommand("sweep", "Runs over ratios x repeats x modes, aggregated");
  sub_sweep->add_option("--spec", spec_path, "Sweep spec JSON")->required();
  sub_sweep->add_option("--out", sweep_out, "Output directory (overrides the spec)");
  sub_sweep->add_option("--jobs", sweep_jobs, "Concurrent run processes (overrides the spec)");

  ReportArgs report;
  auto* sub_report = app.add_subcommand("report", "Tables and plots from run directories");
  sub_report->add_option("--runs", report.runs, "Run directories or roots to search")->required();
  sub_report->add_option("--format", report.format, "Table format")->check(CLI::IsMember({"csv", "md", "text"}));
  sub_report->add_option("--plots", report.plots, "Directory for nmi.svg and purity.svg");
  sub_report->add_option("--out", report.out, "Write the table here instead of stdout");

  DumpArgs dump;
  int dump_source = -1;
  auto* sub_dump = app.add_subcommand("dump-generated", "Real / generated / target image grid");
  sub_dump->add_option("--run", dump.run, "Run directory")->required();
  sub_dump->add_option("--view", dump.view, "Target view")->required();
  sub_dump->add_option("--count", dump.count, "Number of samples");
  auto* source_opt = sub_dump->add_option("--source", dump_source, "Source view (default: another image view)");
  sub_dump->add_option("--out", dump.out, "Output directory (default: <run>/generated_samples)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*sub_mask) return cmd_mask(mask);
    if (*sub_run) {
      if (*seed_opt) run.seed = run_seed;
      return cmd_run(run);
    }
    if (*sub_sweep) return cmd_sweep(spec_path, sweep_out, sweep_jobs);
    if (*sub_report) return cmd_report(report);
    if (*sub_dump) {
      if (*source_opt) dump.source = dump_source;
      return cmd_dump_generated(dump);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
