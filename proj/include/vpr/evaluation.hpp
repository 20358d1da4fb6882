#pragma once

#include <iosfwd>

#include "vpr/retrieval.hpp"

namespace vpr {

// Correctness tolerance: +/- tol frames, or +/- tol degrees of Manhattan
// GPS distance. Both boundaries are inclusive.
struct ToleranceRule {
  enum class Mode { frame, gps };

  Mode mode = Mode::frame;
  double tol = 2.0;

  static ToleranceRule frames(unsigned tol);
  static ToleranceRule gps(double tol_deg);
};

// Frame mode: |pred - truth| <= tol. GPS mode: Manhattan degree distance
// between the predicted frame's geotag and the true location <= tol; a
// frame-mode ground truth is resolved to coordinates through the database
// geotags. GPS mode without geotags is a data_error.
bool is_correct(std::size_t pred, std::size_t query_index, const GroundTruth& gt,
                const ToleranceRule& rule, const FrameDatabase& db);

enum class Task { im2im, seq2seq };

const char* to_string(Task t);
Task task_from_string(const std::string& name);

struct BenchmarkRecord {
  std::string strategy;  // strategy name, or "baseline" for exhaustive rows
  Task task = Task::im2im;
  double ratio = 1.0;    // requested grid ratio; 1.0 on baseline rows
  double accuracy = 0.0;
  double mean_comparisons = 0.0;
  double mean_ns = 0.0;
  std::optional<double> ams;   // medoid rows only
  std::optional<double> auc;   // per strategy/task, repeated on its rows
  std::size_t keyframe_count = 0;
  std::size_t query_count = 0;
  std::optional<std::string> skip_reason;  // set when the cell could not run
};

struct BenchOptions {
  std::vector<Strategy> strategies;
  std::vector<double> ratios;
  std::vector<Task> tasks;
  ToleranceRule rule;
  std::size_t seq_len = 3;
  ClusterOptions cluster;
  bool warmup = true;         // one untimed pass before the measured pass
  bool with_baseline = true;  // append exhaustive rows per task
};

// The full grid: build keyframes per (strategy, ratio), run every query of
// each task through the two-stage index, aggregate accuracy / comparisons /
// time, then the exhaustive baselines. Cells that cannot run (distance
// without geotags, medoid at k = N) come back with skip_reason set instead
// of being dropped. Query loops are single-threaded so the timings mean
// something.
std::vector<BenchmarkRecord> run_benchmark(const FrameDatabase& db, const FrameDatabase& queries,
                                           const GroundTruth& gt, const BenchOptions& opt);

// Trapezoidal area under accuracy over the ratio axis. Sorts internally;
// needs at least two distinct ratios.
double area_under_accuracy(std::vector<std::pair<double, double>> ratio_accuracy);

struct GateResult {
  bool accepted = false;
  std::optional<double> ams;
  std::string reason;
};

// Accept a keyframe set for re-localization when its AMS clears min_ams.
// Only the medoid strategy carries the quality criterion; everything else
// is rejected outright.
GateResult quality_gate(const KeyframeSet& kfs, double min_ams);

// CSV: strategy,task,ratio,accuracy,auc,mean_comparisons,mean_ns,ams — one
// row per grid cell plus the baseline rows. Missing values are left empty.
void write_benchmark_csv(std::ostream& os, const std::vector<BenchmarkRecord>& records);

// JSON mirror of the accuracy / timing / AUC tables plus skipped cells.
nlohmann::json benchmark_summary(const std::vector<BenchmarkRecord>& records);

}  // namespace vpr
