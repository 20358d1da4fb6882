#include "vpr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace vpr {

ToleranceRule ToleranceRule::frames(unsigned tol) {
  ToleranceRule r;
  r.mode = Mode::frame;
  r.tol = static_cast<double>(tol);
  return r;
}

ToleranceRule ToleranceRule::gps(double tol_deg) {
  if (!(tol_deg > 0.0)) throw std::invalid_argument("GPS tolerance must be positive");
  ToleranceRule r;
  r.mode = Mode::gps;
  r.tol = tol_deg;
  return r;
}

namespace {

// Tolerance boundaries are inclusive on the decimal values users write.
// Coordinates near 52 degrees carry ~7e-15 of representation error each, so
// an exact <= can flip a boundary case; this slack absorbs that while being
// eleven orders of magnitude below the 2e-4 degree tolerance in use.
constexpr double kGpsBoundarySlack = 1e-12;

}  // namespace

bool is_correct(std::size_t pred, std::size_t query_index, const GroundTruth& gt,
                const ToleranceRule& rule, const FrameDatabase& db) {
  if (pred >= db.size()) {
    throw std::invalid_argument("prediction " + std::to_string(pred) + " out of database bounds");
  }
  if (query_index >= gt.size()) {
    throw std::invalid_argument("query " + std::to_string(query_index) +
                                " has no ground-truth entry");
  }
  if (rule.mode == ToleranceRule::Mode::frame) {
    if (gt.mode != GroundTruth::Mode::frame) {
      throw std::invalid_argument("frame tolerance needs frame-mode ground truth");
    }
    const std::size_t truth = gt.frame_truth[query_index];
    const std::size_t gap = pred > truth ? pred - truth : truth - pred;
    return static_cast<double>(gap) <= rule.tol;
  }
  const GeoTag truth = gt.mode == GroundTruth::Mode::gps
                           ? gt.gps_truth[query_index]
                           : db.geotags().at(gt.frame_truth[query_index]);
  return manhattan_deg(db.geotags().at(pred), truth) <= rule.tol + kGpsBoundarySlack;
}

const char* to_string(Task t) { return t == Task::im2im ? "im2im" : "seq2seq"; }

Task task_from_string(const std::string& name) {
  if (name == "im2im") return Task::im2im;
  if (name == "seq2seq") return Task::seq2seq;
  throw std::invalid_argument("unknown task '" + name + "'");
}

namespace {

struct Aggregate {
  double accuracy = 0.0;
  double mean_comparisons = 0.0;
  double mean_ns = 0.0;
  std::size_t query_count = 0;
};

// Runs every query of one task through `run_query`, optionally once untimed
// first, and folds correctness and cost into means.
template <typename RunFn>
Aggregate run_task(Task task, const FrameDatabase& db, const FrameDatabase& queries,
                   const GroundTruth& gt, const ToleranceRule& rule, std::size_t seq_len,
                   bool warmup, const RunFn& run_query) {
  const std::size_t dim = queries.dim();
  const std::size_t n_queries =
      task == Task::im2im ? queries.size() : queries.size() - seq_len + 1;

  Aggregate agg;
  agg.query_count = n_queries;
  for (int pass = warmup ? 0 : 1; pass < 2; ++pass) {
    std::size_t correct = 0;
    double sum_comp = 0.0, sum_ns = 0.0;
    for (std::size_t q = 0; q < n_queries; ++q) {
      std::span<const float> span =
          task == Task::im2im ? queries.frame(q)
                              : queries.flat().subspan(q * dim, seq_len * dim);
      const QueryReport report = run_query(span);
      if (pass == 0) continue;  // warm-up pass: results discarded
      const std::size_t truth_query = task == Task::im2im ? q : q + seq_len / 2;
      if (is_correct(report.best_index, truth_query, gt, rule, db)) ++correct;
      sum_comp += static_cast<double>(report.comparisons);
      sum_ns += static_cast<double>(report.elapsed_ns);
    }
    if (pass == 1) {
      agg.accuracy = static_cast<double>(correct) / static_cast<double>(n_queries);
      agg.mean_comparisons = sum_comp / static_cast<double>(n_queries);
      agg.mean_ns = sum_ns / static_cast<double>(n_queries);
    }
  }
  return agg;
}

KeyframeSet build_keyframes(const FrameDatabase& db, Strategy strategy, double ratio,
                            const ClusterOptions& cluster) {
  switch (strategy) {
    case Strategy::medoid:
      return select_medoid(db, ratio, cluster);
    case Strategy::similarity:
      return select_similarity_at_ratio(db, ratio);
    case Strategy::distance:
      return select_distance_at_ratio(db, ratio);
    case Strategy::fixed_rate: {
      const auto count = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(db.size())));
      return select_fixed_rate(db, count);
    }
  }
  throw std::invalid_argument("unknown strategy");
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::vector<BenchmarkRecord> run_benchmark(const FrameDatabase& db, const FrameDatabase& queries,
                                           const GroundTruth& gt, const BenchOptions& opt) {
  if (db.size() == 0 || queries.size() == 0) throw std::invalid_argument("empty database or query set");
  if (queries.dim() != db.dim()) {
    throw data_error("query dim " + std::to_string(queries.dim()) + " does not match database dim " +
                     std::to_string(db.dim()));
  }
  if (gt.size() < queries.size()) {
    throw data_error("ground truth covers " + std::to_string(gt.size()) + " queries, need " +
                     std::to_string(queries.size()));
  }
  if (gt.mode == GroundTruth::Mode::frame) {
    for (std::size_t t : gt.frame_truth) {
      if (t >= db.size()) throw data_error("ground-truth frame " + std::to_string(t) + " out of bounds");
    }
  }
  for (Task task : opt.tasks) {
    if (task == Task::seq2seq && queries.size() < opt.seq_len) {
      throw std::invalid_argument("query set shorter than the sequence length");
    }
  }

  std::vector<BenchmarkRecord> records;
  for (Strategy strategy : opt.strategies) {
    for (double ratio : opt.ratios) {
      KeyframeSet kfs;
      std::optional<std::string> skip;
      try {
        kfs = build_keyframes(db, strategy, ratio, opt.cluster);
      } catch (const std::exception& e) {
        skip = e.what();
      }
      if (skip) {
        for (Task task : opt.tasks) {
          BenchmarkRecord rec;
          rec.strategy = to_string(strategy);
          rec.task = task;
          rec.ratio = ratio;
          rec.skip_reason = skip;
          records.push_back(std::move(rec));
        }
        continue;
      }
      const SearchIndex index(db, kfs);
      for (Task task : opt.tasks) {
        const Aggregate agg = run_task(
            task, db, queries, gt, opt.rule, opt.seq_len, opt.warmup,
            [&](std::span<const float> q) {
              return task == Task::im2im ? index.query_im2im(q)
                                         : index.query_seq2seq(q, opt.seq_len);
            });
        BenchmarkRecord rec;
        rec.strategy = to_string(strategy);
        rec.task = task;
        rec.ratio = ratio;
        rec.accuracy = agg.accuracy;
        rec.mean_comparisons = agg.mean_comparisons;
        rec.mean_ns = agg.mean_ns;
        rec.ams = kfs.ams;
        rec.keyframe_count = kfs.indices.size();
        rec.query_count = agg.query_count;
        records.push_back(std::move(rec));
      }
    }
  }

  if (opt.with_baseline) {
    for (Task task : opt.tasks) {
      const Aggregate agg = run_task(
          task, db, queries, gt, opt.rule, opt.seq_len, opt.warmup,
          [&](std::span<const float> q) {
            return task == Task::im2im ? query_exhaustive_im2im(db, q)
                                       : query_exhaustive_seq2seq(db, q, opt.seq_len);
          });
      BenchmarkRecord rec;
      rec.strategy = "baseline";
      rec.task = task;
      rec.ratio = 1.0;
      rec.accuracy = agg.accuracy;
      rec.mean_comparisons = agg.mean_comparisons;
      rec.mean_ns = agg.mean_ns;
      rec.keyframe_count = 0;
      rec.query_count = agg.query_count;
      records.push_back(std::move(rec));
    }
  }

  // stamp the per-(strategy, task) AUC on each contributing row
  for (Strategy strategy : opt.strategies) {
    for (Task task : opt.tasks) {
      std::vector<std::pair<double, double>> points;
      for (const auto& rec : records) {
        if (rec.strategy == to_string(strategy) && rec.task == task && !rec.skip_reason) {
          points.emplace_back(rec.ratio, rec.accuracy);
        }
      }
      std::sort(points.begin(), points.end());
      points.erase(std::unique(points.begin(), points.end(),
                               [](const auto& a, const auto& b) { return a.first == b.first; }),
                   points.end());
      if (points.size() < 2) continue;
      const double auc = area_under_accuracy(points);
      for (auto& rec : records) {
        if (rec.strategy == to_string(strategy) && rec.task == task && !rec.skip_reason) {
          rec.auc = auc;
        }
      }
    }
  }
  return records;
}

double area_under_accuracy(std::vector<std::pair<double, double>> ratio_accuracy) {
  std::sort(ratio_accuracy.begin(), ratio_accuracy.end());
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < ratio_accuracy.size(); ++i) {
    if (i == 0 || ratio_accuracy[i].first != ratio_accuracy[i - 1].first) ++distinct;
  }
  if (distinct < 2) {
    throw std::invalid_argument("area under accuracy needs at least 2 distinct ratios");
  }
  double area = 0.0;
  for (std::size_t i = 1; i < ratio_accuracy.size(); ++i) {
    const auto& [r0, a0] = ratio_accuracy[i - 1];
    const auto& [r1, a1] = ratio_accuracy[i];
    area += (r1 - r0) * 0.5 * (a0 + a1);
  }
  return area;
}

GateResult quality_gate(const KeyframeSet& kfs, double min_ams) {
  GateResult res;
  if (kfs.strategy != Strategy::medoid || !kfs.ams) {
    res.accepted = false;
    res.reason = "no quality criterion";
    return res;
  }
  res.ams = kfs.ams;
  res.accepted = *kfs.ams >= min_ams;
  res.reason = res.accepted ? "" : "ams below threshold";
  return res;
}

void write_benchmark_csv(std::ostream& os, const std::vector<BenchmarkRecord>& records) {
  os << "strategy,task,ratio,accuracy,auc,mean_comparisons,mean_ns,ams\n";
  for (const auto& rec : records) {
    os << rec.strategy << ',' << to_string(rec.task) << ',' << fmt(rec.ratio) << ',';
    if (!rec.skip_reason) {
      os << fmt(rec.accuracy) << ',' << (rec.auc ? fmt(*rec.auc) : "") << ','
         << fmt(rec.mean_comparisons) << ',' << fmt(rec.mean_ns) << ','
         << (rec.ams ? fmt(*rec.ams) : "");
    } else {
      os << ",,,,";
    }
    os << '\n';
  }
}

nlohmann::json benchmark_summary(const std::vector<BenchmarkRecord>& records) {
  nlohmann::json accuracy = nlohmann::json::array();
  nlohmann::json timing = nlohmann::json::array();
  nlohmann::json auc = nlohmann::json::array();
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& rec : records) {
    if (rec.skip_reason) {
      skipped.push_back({{"strategy", rec.strategy},
                         {"task", to_string(rec.task)},
                         {"ratio", rec.ratio},
                         {"reason", *rec.skip_reason}});
      continue;
    }
    nlohmann::json acc = {{"strategy", rec.strategy},
                          {"task", to_string(rec.task)},
                          {"ratio", rec.ratio},
                          {"accuracy", rec.accuracy}};
    if (rec.ams) acc["ams"] = *rec.ams;
    accuracy.push_back(std::move(acc));
    timing.push_back({{"strategy", rec.strategy},
                      {"task", to_string(rec.task)},
                      {"ratio", rec.ratio},
                      {"mean_comparisons", rec.mean_comparisons},
                      {"mean_ns", rec.mean_ns}});
    if (rec.auc) {
      auc.push_back({{"strategy", rec.strategy}, {"task", to_string(rec.task)}, {"auc", *rec.auc}});
    }
  }
  // de-duplicate the per-row AUC copies
  nlohmann::json auc_unique = nlohmann::json::array();
  for (const auto& row : auc) {
    bool seen = false;
    for (const auto& u : auc_unique) {
      if (u["strategy"] == row["strategy"] && u["task"] == row["task"]) {
        seen = true;
        break;
      }
    }
    if (!seen) auc_unique.push_back(row);
  }
  return {{"accuracy", accuracy}, {"timing", timing}, {"auc", auc_unique}, {"skipped", skipped}};
}

}  // namespace vpr
