#pragma once

#include "vpr/strategies.hpp"

namespace vpr {

// Inclusive frame-index interval.
struct Region {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - begin + 1; }
};

inline constexpr std::size_t kNoKeyframe = std::numeric_limits<std::size_t>::max();

// Result of one query. `comparisons` counts the feature-pair similarity
// evaluations actually performed and always equals
// |keyframes| * L + (stage-2 evaluations), L = 1 for im2im.
struct QueryReport {
  std::size_t query_index = 0;
  std::size_t best_index = 0;
  double best_similarity = 0.0;
  std::size_t stage1_keyframe = kNoKeyframe;  // kNoKeyframe for exhaustive queries
  std::uint64_t comparisons = 0;
  std::uint64_t elapsed_ns = 0;
};

std::string to_json_line(const QueryReport& report);

// Two-stage index: stage 1 matches against the keyframes, stage 2 refines
// inside the winning keyframe's adjacent region (prior keyframe through
// succeeding keyframe, clamped to the database ends). Immutable after
// construction; concurrent queries are safe.
class SearchIndex {
 public:
  SearchIndex(const FrameDatabase& db, KeyframeSet keyframes);

  const FrameDatabase& db() const { return *db_; }
  const KeyframeSet& keyframes() const { return keyframes_; }
  const std::vector<Region>& regions() const { return regions_; }

  QueryReport query_im2im(std::span<const float> q) const;
  // qseq is seq_len concatenated feature vectors. When the winning region
  // is shorter than seq_len it is grown symmetrically until one window fits.
  QueryReport query_seq2seq(std::span<const float> qseq, std::size_t seq_len) const;

 private:
  const FrameDatabase* db_;
  KeyframeSet keyframes_;
  std::vector<Region> regions_;
};

SearchIndex build_index(const FrameDatabase& db, KeyframeSet keyframes);

// Flat scans over the whole database; the baseline and the oracle for the
// two-stage path.
QueryReport query_exhaustive_im2im(const FrameDatabase& db, std::span<const float> q);
QueryReport query_exhaustive_seq2seq(const FrameDatabase& db, std::span<const float> qseq,
                                     std::size_t seq_len);

}  // namespace vpr
