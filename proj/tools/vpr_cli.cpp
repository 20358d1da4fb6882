#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "vpr/evaluation.hpp"
#include "vpr/synthgen.hpp"

namespace {

using namespace vpr;

FrameDatabase load_db(const std::string& features, const std::string& geotags) {
  FrameDatabase db = load_features_auto(features);
  if (!geotags.empty()) db.bind_geotags(load_geotags(geotags));
  return db;
}

ClusterOptions make_cluster_options(const std::string& init, unsigned restarts, std::uint64_t seed,
                                    unsigned threads) {
  ClusterOptions opt;
  if (init == "random_restart") {
    opt.init = InitScheme::random_restart;
  } else if (init == "fixed_rate") {
    opt.init = InitScheme::fixed_rate;
  } else {
    throw CLI::ValidationError("--init", "expected random_restart or fixed_rate");
  }
  opt.restarts = restarts;
  opt.seed = seed;
  opt.threads = threads;
  return opt;
}

int cmd_synth(const SynthSpec& spec, const std::string& out_dir, const std::string& format) {
  const FeatureFormat ff = format == "csv" ? FeatureFormat::csv : FeatureFormat::binary;
  const std::string ext = format == "csv" ? ".csv" : ".vprf";
  std::filesystem::create_directories(out_dir);
  const SynthData data = generate(spec);
  const auto dir = std::filesystem::path(out_dir);
  save_features(dir / ("db" + ext), data.db, ff);
  save_features(dir / ("queries" + ext), data.queries, ff);
  save_geotags(dir / "geotags.csv", data.db.geotags());
  save_ground_truth(dir / "truth.csv", data.truth);
  std::printf("wrote %s/{db%s, queries%s, geotags.csv, truth.csv}: %zu frames, dim %zu, %zu clusters\n",
              out_dir.c_str(), ext.c_str(), ext.c_str(), data.db.size(), data.db.dim(),
              spec.n_clusters);
  return 0;
}

int cmd_select(const std::string& features, const std::string& geotags, const std::string& strategy,
               double ratio, long long count, double threshold, const ClusterOptions& copt,
               const std::string& out) {
  const FrameDatabase db = load_db(features, geotags);
  const Strategy s = strategy_from_string(strategy);
  KeyframeSet kfs;
  switch (s) {
    case Strategy::medoid:
      if (ratio <= 0) throw CLI::ValidationError("--ratio", "medoid strategy needs --ratio");
      kfs = select_medoid(db, ratio, copt);
      break;
    case Strategy::similarity:
      kfs = threshold > -1.0 ? select_similarity(db, threshold)
                             : select_similarity_at_ratio(db, ratio > 0 ? ratio : 0.1);
      break;
    case Strategy::distance:
      kfs = threshold > 0.0 ? select_distance(db, threshold)
                            : select_distance_at_ratio(db, ratio > 0 ? ratio : 0.1);
      break;
    case Strategy::fixed_rate: {
      std::size_t c = count > 0 ? static_cast<std::size_t>(count)
                                : static_cast<std::size_t>(std::lround(
                                      ratio * static_cast<double>(db.size())));
      kfs = select_fixed_rate(db, c);
      break;
    }
  }
  save_keyframes(out, kfs);
  std::printf("selected %zu keyframes (ratio %.4f, strategy %s", kfs.indices.size(), kfs.ratio,
              to_string(kfs.strategy));
  if (kfs.ams) std::printf(", ams %.6f", *kfs.ams);
  std::printf(") -> %s\n", out.c_str());
  return 0;
}

int cmd_query(const std::string& features, const std::string& geotags, const std::string& keyframes,
              const std::string& queries_path, const std::string& task_name, std::size_t seq_len,
              long long query_index, bool baseline, const std::string& out) {
  const FrameDatabase db = load_db(features, geotags);
  const FrameDatabase queries = load_features_auto(queries_path);
  if (queries.dim() != db.dim()) {
    throw data_error("query dim " + std::to_string(queries.dim()) +
                     " does not match database dim " + std::to_string(db.dim()));
  }
  const Task task = task_from_string(task_name);

  std::optional<SearchIndex> index;
  if (!baseline) {
    if (keyframes.empty()) throw CLI::ValidationError("--keyframes", "required unless --baseline");
    index.emplace(db, load_keyframes(keyframes));
  }

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw data_error(out + ": cannot open for writing");
    os = &file;
  }

  const std::size_t dim = queries.dim();
  const std::size_t n_queries =
      task == Task::im2im ? queries.size() : queries.size() - std::min(queries.size(), seq_len - 1);
  const std::size_t lo = query_index >= 0 ? static_cast<std::size_t>(query_index) : 0;
  const std::size_t hi = query_index >= 0 ? lo + 1 : n_queries;
  if (lo >= n_queries) throw data_error("query index out of range");

  for (std::size_t q = lo; q < hi; ++q) {
    QueryReport report;
    if (task == Task::im2im) {
      report = baseline ? query_exhaustive_im2im(db, queries.frame(q))
                        : index->query_im2im(queries.frame(q));
    } else {
      const auto span = queries.flat().subspan(q * dim, seq_len * dim);
      report = baseline ? query_exhaustive_seq2seq(db, span, seq_len)
                        : index->query_seq2seq(span, seq_len);
    }
    report.query_index = q;
    *os << to_json_line(report) << '\n';
  }
  return 0;
}

int cmd_bench(const std::string& features, const std::string& geotags, const std::string& queries_path,
              const std::string& truth_path, const std::vector<double>& ratios,
              const std::vector<std::string>& tasks, const std::vector<std::string>& strategies,
              const std::string& tol_mode, double tol, std::size_t seq_len,
              const ClusterOptions& copt, const std::string& out, const std::string& summary_path) {
  const FrameDatabase db = load_db(features, geotags);
  const FrameDatabase queries = load_features_auto(queries_path);
  const GroundTruth gt = load_ground_truth(truth_path);

  BenchOptions opt;
  opt.ratios = ratios;
  for (const auto& t : tasks) opt.tasks.push_back(task_from_string(t));
  for (const auto& s : strategies) opt.strategies.push_back(strategy_from_string(s));
  if (tol_mode == "frame") {
    opt.rule = ToleranceRule::frames(static_cast<unsigned>(tol));
  } else if (tol_mode == "gps") {
    opt.rule = ToleranceRule::gps(tol);
  } else {
    throw CLI::ValidationError("--tolerance-mode", "expected frame or gps");
  }
  opt.seq_len = seq_len;
  opt.cluster = copt;

  const auto records = run_benchmark(db, queries, gt, opt);

  if (out.empty() || out == "-") {
    write_benchmark_csv(std::cout, records);
  } else {
    std::ofstream file(out);
    if (!file) throw data_error(out + ": cannot open for writing");
    write_benchmark_csv(file, records);
    std::printf("wrote %zu rows -> %s\n", records.size(), out.c_str());
  }
  if (!summary_path.empty()) {
    std::ofstream file(summary_path);
    if (!file) throw data_error(summary_path + ": cannot open for writing");
    file << benchmark_summary(records).dump(2) << '\n';
  }
  for (const auto& rec : records) {
    if (rec.skip_reason) {
      std::fprintf(stderr, "skipped %s/%s at ratio %g: %s\n", rec.strategy.c_str(),
                   to_string(rec.task), rec.ratio, rec.skip_reason->c_str());
    }
  }
  return 0;
}

int cmd_inspect(const std::string& features, const std::string& geotags, const std::string& keyframes) {
  const FrameDatabase db = load_db(features, geotags);
  const KeyframeSet kfs = load_keyframes(keyframes);
  const SearchIndex index(db, kfs);

  std::printf("strategy:   %s\n", to_string(kfs.strategy));
  std::printf("keyframes:  %zu / %zu frames (ratio %.4f)\n", kfs.indices.size(), db.size(), kfs.ratio);
  if (kfs.ams) std::printf("stored ams: %.6f\n", *kfs.ams);
  const std::size_t k = kfs.indices.size();
  if (k >= 2 && k + 1 <= db.size()) {
    std::printf("recomputed ams: %.6f\n", recompute_ams(db, kfs.indices));
  } else {
    std::printf("recomputed ams: n/a (k = N leaves no non-medoids)\n");
  }
  std::size_t min_len = SIZE_MAX, max_len = 0, total = 0;
  for (const Region& r : index.regions()) {
    min_len = std::min(min_len, r.length());
    max_len = std::max(max_len, r.length());
    total += r.length();
  }
  std::printf("regions:    len min %zu / mean %.1f / max %zu\n", min_len,
              static_cast<double>(total) / static_cast<double>(k), max_len);
  const GateResult gate = quality_gate(kfs, 0.5);
  std::printf("quality gate @0.5: %s%s%s\n", gate.accepted ? "accept" : "reject",
              gate.reason.empty() ? "" : " — ", gate.reason.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyframe-accelerated visual place recognition toolkit"};
  app.require_subcommand(1);

  // shared flags
  std::string features, geotags, queries_path, truth_path, keyframes, out, summary_path;
  std::uint64_t seed = 42;
  unsigned restarts = 10, threads = 0;
  std::string init = "random_restart";

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  SynthSpec spec;
  std::string out_dir = "synth_out", format = "binary";
  synth->add_option("--out", out_dir, "output directory");
  synth->add_option("--frames", spec.n_frames, "number of database frames");
  synth->add_option("--dim", spec.dim, "feature dimension");
  synth->add_option("--clusters", spec.n_clusters, "number of clusters");
  synth->add_option("--intra-noise", spec.intra_noise, "angular std-dev inside a cluster, radians");
  synth->add_option("--inter-gap", spec.inter_gap, "minimum angle between cluster centers, radians");
  synth->add_option("--query-noise", spec.query_noise, "angular query perturbation, radians");
  synth->add_option("--seed", spec.seed, "random seed");
  synth->add_option("--format", format, "binary or csv")
      ->check(CLI::IsMember({"binary", "csv"}));

  // select
  auto* select = app.add_subcommand("select", "Select keyframes from a database");
  std::string strategy = "medoid";
  double ratio = 0.0, threshold = -2.0;
  long long count = -1;
  select->add_option("--db", features, "feature file")->required();
  select->add_option("--geotags", geotags, "geotag CSV (needed by the distance strategy)");
  select->add_option("--strategy", strategy, "medoid|similarity|distance|fixed_rate")->required();
  select->add_option("--ratio", ratio, "target keyframe-to-frame ratio");
  select->add_option("--count", count, "keyframe count (fixed_rate)");
  select->add_option("--threshold", threshold, "scan threshold (similarity/distance)");
  select->add_option("--init", init, "medoid init: random_restart|fixed_rate");
  select->add_option("--restarts", restarts, "random restarts for medoid init");
  select->add_option("--seed", seed, "random seed");
  select->add_option("--threads", threads, "restart parallelism (0 = all cores)");
  select->add_option("--out", out, "keyframe JSON output")->required();

  // query
  auto* query = app.add_subcommand("query", "Run im2im/seq2seq queries against an index");
  std::string task = "im2im";
  std::size_t seq_len = 3;
  long long query_index = -1;
  bool baseline = false;
  query->add_option("--db", features, "feature file")->required();
  query->add_option("--geotags", geotags, "geotag CSV");
  query->add_option("--keyframes", keyframes, "keyframe JSON from `select`");
  query->add_option("--queries", queries_path, "query feature file")->required();
  query->add_option("--task", task, "im2im|seq2seq");
  query->add_option("--seq-len", seq_len, "sequence length for seq2seq");
  query->add_option("--query-index", query_index, "run a single query (default: all)");
  query->add_flag("--baseline", baseline, "exhaustive search instead of the two-stage index");
  query->add_option("--out", out, "JSON-lines output file (default: stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "Full benchmark grid, CSV out");
  std::vector<double> ratios{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::string> tasks{"im2im", "seq2seq"};
  std::vector<std::string> strategies{"medoid", "similarity", "distance", "fixed_rate"};
  std::string tol_mode = "frame";
  double tol = 2.0;
  bench->add_option("--db", features, "feature file")->required();
  bench->add_option("--geotags", geotags, "geotag CSV");
  bench->add_option("--queries", queries_path, "query feature file")->required();
  bench->add_option("--truth", truth_path, "ground-truth CSV")->required();
  bench->add_option("--ratios", ratios, "keyframe ratios")->delimiter(',');
  bench->add_option("--tasks", tasks, "tasks to run")->delimiter(',');
  bench->add_option("--strategies", strategies, "strategies to compare")->delimiter(',');
  bench->add_option("--tolerance-mode", tol_mode, "frame or gps");
  bench->add_option("--tolerance", tol, "frames or degrees");
  bench->add_option("--seq-len", seq_len, "sequence length for seq2seq");
  bench->add_option("--init", init, "medoid init: random_restart|fixed_rate");
  bench->add_option("--restarts", restarts, "random restarts for medoid init");
  bench->add_option("--seed", seed, "random seed");
  bench->add_option("--threads", threads, "clustering restart parallelism (queries stay single-threaded)");
  bench->add_option("--out", out, "CSV output file (default: stdout)");
  bench->add_option("--summary", summary_path, "JSON summary output file");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Print AMS and region statistics for a keyframe set");
  inspect->add_option("--db", features, "feature file")->required();
  inspect->add_option("--geotags", geotags, "geotag CSV");
  inspect->add_option("--keyframes", keyframes, "keyframe JSON")->required();

  try {
    app.parse(argc, argv);
    if (synth->parsed()) return cmd_synth(spec, out_dir, format);
    const unsigned bench_threads = threads == 0 && bench->parsed() ? 1 : threads;
    const ClusterOptions copt = make_cluster_options(init, restarts, seed, bench_threads);
    if (select->parsed()) return cmd_select(features, geotags, strategy, ratio, count, threshold, copt, out);
    if (query->parsed())
      return cmd_query(features, geotags, keyframes, queries_path, task, seq_len, query_index,
                       baseline, out);
    if (bench->parsed())
      return cmd_bench(features, geotags, queries_path, truth_path, ratios, tasks, strategies,
                       tol_mode, tol, seq_len, copt, out, summary_path);
    if (inspect->parsed()) return cmd_inspect(features, geotags, keyframes);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // 0 covers --help
  } catch (const vpr::data_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
