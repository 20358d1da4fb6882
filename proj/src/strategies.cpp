#include "vpr/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace vpr {

namespace {

// Ensures the >= 2 keyframes the region logic needs; scans over flat data
// can legitimately end with a single keyframe.
void pad_to_two(std::vector<std::size_t>& indices, std::size_t n) {
  if (indices.size() >= 2) return;
  if (n < 2) throw std::invalid_argument("need at least 2 frames to select keyframes");
  if (indices.empty()) indices.push_back(0);
  if (indices.back() != n - 1) indices.push_back(n - 1);
}

double realized_ratio(std::size_t count, std::size_t n) {
  return static_cast<double>(count) / static_cast<double>(n);
}

std::size_t ratio_to_count(const FrameDatabase& db, double ratio) {
  return static_cast<std::size_t>(std::lround(ratio * static_cast<double>(db.size())));
}

}  // namespace

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::medoid: return "medoid";
    case Strategy::similarity: return "similarity";
    case Strategy::distance: return "distance";
    case Strategy::fixed_rate: return "fixed_rate";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "medoid") return Strategy::medoid;
  if (name == "similarity") return Strategy::similarity;
  if (name == "distance") return Strategy::distance;
  if (name == "fixed_rate") return Strategy::fixed_rate;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

void validate(const KeyframeSet& kfs, const FrameDatabase& db) {
  if (kfs.indices.size() < 2) throw data_error("keyframe set must contain at least 2 indices");
  for (std::size_t i = 0; i < kfs.indices.size(); ++i) {
    if (kfs.indices[i] >= db.size()) {
      throw data_error("keyframe index " + std::to_string(kfs.indices[i]) +
                       " out of range for database of " + std::to_string(db.size()) + " frames");
    }
    if (i > 0 && kfs.indices[i] <= kfs.indices[i - 1]) {
      throw data_error("keyframe indices must be strictly increasing");
    }
  }
  if ((kfs.strategy == Strategy::medoid) != kfs.ams.has_value()) {
    throw data_error("ams must be present exactly for the medoid strategy");
  }
}

KeyframeSet select_medoid(const FrameDatabase& db, double ratio, const ClusterOptions& opt) {
  const std::size_t k = ratio_to_count(db, ratio);
  if (k < 2 || k + 1 > db.size()) {
    throw std::invalid_argument("ratio " + std::to_string(ratio) + " yields k=" + std::to_string(k) +
                                ", outside 2 <= k <= N-1 for N=" + std::to_string(db.size()));
  }
  ClusteringResult res = faster_msc(db, k, opt);
  KeyframeSet kfs;
  kfs.indices = res.assignment.medoids;
  kfs.strategy = Strategy::medoid;
  kfs.ratio = realized_ratio(k, db.size());
  kfs.ams = res.ams;
  kfs.params = {{"seed", opt.seed},
                {"restarts", opt.init == InitScheme::random_restart ? opt.restarts : 0},
                {"init", opt.init == InitScheme::random_restart ? "random_restart" : "fixed_rate"},
                {"swaps", res.iterations}};
  kfs.db_label = db.source_label();
  return kfs;
}

KeyframeSet select_similarity(const FrameDatabase& db, double threshold) {
  if (db.size() == 0) throw std::invalid_argument("empty database");
  std::vector<std::size_t> indices{0};
  std::size_t last = 0;
  for (std::size_t i = 1; i < db.size(); ++i) {
    if (cosine_similarity(db.frame(i), db.frame(last)) < threshold) {
      indices.push_back(i);
      last = i;
    }
  }
  pad_to_two(indices, db.size());
  KeyframeSet kfs;
  kfs.indices = std::move(indices);
  kfs.strategy = Strategy::similarity;
  kfs.ratio = realized_ratio(kfs.indices.size(), db.size());
  kfs.params = {{"threshold", threshold}};
  kfs.db_label = db.source_label();
  return kfs;
}

KeyframeSet select_distance(const FrameDatabase& db, double threshold_deg) {
  if (db.size() == 0) throw std::invalid_argument("empty database");
  if (!db.has_geotags()) {
    throw data_error(
        "distance strategy needs geotags; bind a geotag file or pick another strategy");
  }
  if (!(threshold_deg > 0.0)) throw std::invalid_argument("distance threshold must be positive");
  const auto& tags = db.geotags();
  std::vector<std::size_t> indices{0};
  std::size_t last = 0;
  for (std::size_t i = 1; i < db.size(); ++i) {
    if (manhattan_deg(tags[i], tags[last]) > threshold_deg) {
      indices.push_back(i);
      last = i;
    }
  }
  pad_to_two(indices, db.size());
  KeyframeSet kfs;
  kfs.indices = std::move(indices);
  kfs.strategy = Strategy::distance;
  kfs.ratio = realized_ratio(kfs.indices.size(), db.size());
  kfs.params = {{"threshold_deg", threshold_deg}};
  kfs.db_label = db.source_label();
  return kfs;
}

KeyframeSet select_fixed_rate(const FrameDatabase& db, std::size_t count) {
  if (count < 2 || count > db.size()) {
    throw std::invalid_argument("fixed-rate count must satisfy 2 <= count <= N, got " +
                                std::to_string(count) + " with N=" + std::to_string(db.size()));
  }
  KeyframeSet kfs;
  kfs.indices = fixed_rate_indices(db.size(), count);
  kfs.strategy = Strategy::fixed_rate;
  kfs.ratio = realized_ratio(kfs.indices.size(), db.size());
  kfs.params = {{"count", count}};
  kfs.db_label = db.source_label();
  return kfs;
}

namespace {

// Bisect a scan threshold toward a target keyframe count. `count_at` must be
// monotone non-decreasing in the threshold.
template <typename CountFn>
double bisect_threshold(double lo, double hi, std::size_t target, const CountFn& count_at) {
  double best = hi;
  std::size_t best_diff = SIZE_MAX;
  for (int iter = 0; iter < 64; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const std::size_t c = count_at(mid);
    const std::size_t diff = c > target ? c - target : target - c;
    if (diff < best_diff) {
      best_diff = diff;
      best = mid;
    }
    if (diff == 0) break;
    if (c < target) lo = mid;
    else hi = mid;
  }
  return best;
}

}  // namespace

KeyframeSet select_similarity_at_ratio(const FrameDatabase& db, double ratio) {
  const std::size_t target = ratio_to_count(db, ratio);
  const double threshold = bisect_threshold(-1.0, 1.0, target, [&](double t) {
    return select_similarity(db, t).indices.size();
  });
  return select_similarity(db, threshold);
}

KeyframeSet select_distance_at_ratio(const FrameDatabase& db, double ratio) {
  if (!db.has_geotags()) {
    throw data_error(
        "distance strategy needs geotags; bind a geotag file or pick another strategy");
  }
  const std::size_t target = ratio_to_count(db, ratio);
  // A threshold above the full path span collapses the scan to {0, N-1}.
  const auto& tags = db.geotags();
  double span = 0.0;
  for (const auto& t : tags) span = std::max(span, manhattan_deg(tags.front(), t));
  const double hi = std::max(span * 2.0, 1e-9);
  // count decreases as the threshold grows; flip the sign to reuse the
  // non-decreasing bisection
  const double threshold = bisect_threshold(-hi, -1e-12, target, [&](double t) {
    return select_distance(db, -t).indices.size();
  });
  return select_distance(db, -threshold);
}

nlohmann::json to_json(const KeyframeSet& kfs) {
  nlohmann::json j;
  j["strategy"] = to_string(kfs.strategy);
  j["ratio"] = kfs.ratio;
  j["ams"] = kfs.ams ? nlohmann::json(*kfs.ams) : nlohmann::json(nullptr);
  j["indices"] = kfs.indices;
  j["params"] = kfs.params;
  j["db_label"] = kfs.db_label;
  return j;
}

KeyframeSet keyframe_set_from_json(const nlohmann::json& j) {
  try {
    KeyframeSet kfs;
    kfs.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    kfs.ratio = j.at("ratio").get<double>();
    if (!j.at("ams").is_null()) kfs.ams = j.at("ams").get<double>();
    kfs.indices = j.at("indices").get<std::vector<std::size_t>>();
    kfs.params = j.value("params", nlohmann::json::object());
    kfs.db_label = j.value("db_label", "");
    return kfs;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("malformed keyframe JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw data_error(std::string("malformed keyframe JSON: ") + e.what());
  }
}

void save_keyframes(const std::filesystem::path& path, const KeyframeSet& kfs) {
  std::ofstream out(path);
  if (!out) throw data_error(path.string() + ": cannot open file for writing");
  out << to_json(kfs).dump(2) << '\n';
  if (!out) throw data_error(path.string() + ": write failed");
}

KeyframeSet load_keyframes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error(path.string() + ": cannot open file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(path.string() + ": " + e.what());
  }
  return keyframe_set_from_json(j);
}

}  // namespace vpr
