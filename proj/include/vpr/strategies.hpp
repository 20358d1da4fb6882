#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "vpr/clustering.hpp"

namespace vpr {

enum class Strategy { medoid, similarity, distance, fixed_rate };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

// A selected set of keyframes plus how it was made. The JSON form of this
// struct is the handoff artifact between the `select` and `query`/`bench`
// commands.
struct KeyframeSet {
  std::vector<std::size_t> indices;  // strictly increasing, at least 2
  Strategy strategy = Strategy::fixed_rate;
  double ratio = 0.0;                // |indices| / N
  std::optional<double> ams;         // present only for the medoid strategy
  nlohmann::json params = nlohmann::json::object();
  std::string db_label;
};

// Throws if the set violates its invariants against the given database.
void validate(const KeyframeSet& kfs, const FrameDatabase& db);

// k = round(ratio * N) medoids via faster_msc; AMS attached.
KeyframeSet select_medoid(const FrameDatabase& db, double ratio, const ClusterOptions& opt = {});

// Scan: frame 0 is a keyframe; frame i joins when cos(frame_i, last
// keyframe) drops below the threshold. Padded with the final frame when the
// scan yields fewer than two keyframes.
KeyframeSet select_similarity(const FrameDatabase& db, double threshold);

// Scan on geotags: frame i joins when the Manhattan degree distance from
// the last keyframe exceeds the threshold. Requires geotags.
KeyframeSet select_distance(const FrameDatabase& db, double threshold_deg);

// Centered uniform lattice of `count` frames, 2 <= count <= N.
KeyframeSet select_fixed_rate(const FrameDatabase& db, std::size_t count);

// Bisect the threshold until the scan count lands as close as it can to
// round(ratio * N). Scan strategies cannot hit arbitrary counts exactly, so
// the realized count may differ from the target.
KeyframeSet select_similarity_at_ratio(const FrameDatabase& db, double ratio);
KeyframeSet select_distance_at_ratio(const FrameDatabase& db, double ratio);

nlohmann::json to_json(const KeyframeSet& kfs);
KeyframeSet keyframe_set_from_json(const nlohmann::json& j);
void save_keyframes(const std::filesystem::path& path, const KeyframeSet& kfs);
KeyframeSet load_keyframes(const std::filesystem::path& path);

}  // namespace vpr
