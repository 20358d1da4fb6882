#include "vpr/retrieval.hpp"

#include <chrono>
#include <cstdio>

namespace vpr {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t ns_since(Clock::time_point start) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
}

// The one place query similarity is evaluated; the counter is the audit
// trail the comparison-accounting invariant checks.
inline double counted_sim(std::span<const float> a, std::span<const float> b,
                          std::uint64_t& counter) {
  ++counter;
  return cosine_similarity(a, b);
}

void check_query_dim(const FrameDatabase& db, std::size_t qdim) {
  if (qdim != db.dim()) {
    throw data_error("query dimension " + std::to_string(qdim) + " does not match database dim " +
                     std::to_string(db.dim()));
  }
}

void check_seq(std::span<const float> qseq, std::size_t seq_len, const FrameDatabase& db) {
  if (seq_len == 0) throw std::invalid_argument("sequence length must be >= 1");
  if (seq_len > db.size()) {
    throw std::invalid_argument("sequence length " + std::to_string(seq_len) +
                                " exceeds database size " + std::to_string(db.size()));
  }
  if (qseq.size() != seq_len * db.dim()) {
    throw data_error("query sequence holds " + std::to_string(qseq.size()) + " floats, expected " +
                     std::to_string(seq_len) + " x " + std::to_string(db.dim()));
  }
}

}  // namespace

std::string to_json_line(const QueryReport& r) {
  char buf[256];
  const long long stage1 =
      r.stage1_keyframe == kNoKeyframe ? -1 : static_cast<long long>(r.stage1_keyframe);
  std::snprintf(buf, sizeof buf,
                "{\"query\": %zu, \"best\": %zu, \"sim\": %.9g, \"stage1\": %lld, "
                "\"comparisons\": %llu, \"ns\": %llu}",
                r.query_index, r.best_index, r.best_similarity, stage1,
                static_cast<unsigned long long>(r.comparisons),
                static_cast<unsigned long long>(r.elapsed_ns));
  return buf;
}

SearchIndex::SearchIndex(const FrameDatabase& db, KeyframeSet keyframes)
    : db_(&db), keyframes_(std::move(keyframes)) {
  validate(keyframes_, db);
  const auto& idx = keyframes_.indices;
  const std::size_t last_frame = db.size() - 1;
  regions_.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    Region r;
    r.begin = i == 0 ? 0 : idx[i - 1];
    r.end = i + 1 == idx.size() ? last_frame : idx[i + 1];
    regions_.push_back(r);
  }
}

SearchIndex build_index(const FrameDatabase& db, KeyframeSet keyframes) {
  return SearchIndex(db, std::move(keyframes));
}

QueryReport SearchIndex::query_im2im(std::span<const float> q) const {
  const auto start = Clock::now();
  check_query_dim(*db_, q.size());
  QueryReport report;
  std::uint64_t counter = 0;

  // stage 1: best keyframe, ties to the lowest frame index
  const auto& idx = keyframes_.indices;
  std::size_t best_kf = 0;
  double best_kf_sim = -2.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double s = counted_sim(q, db_->frame(idx[i]), counter);
    if (s > best_kf_sim) {
      best_kf_sim = s;
      best_kf = i;
    }
  }
  report.stage1_keyframe = idx[best_kf];

  // stage 2: best frame inside the adjacent region
  const Region region = regions_[best_kf];
  std::size_t best = region.begin;
  double best_sim = -2.0;
  for (std::size_t f = region.begin; f <= region.end; ++f) {
    const double s = counted_sim(q, db_->frame(f), counter);
    if (s > best_sim) {
      best_sim = s;
      best = f;
    }
  }

  report.best_index = best;
  report.best_similarity = best_sim;
  report.comparisons = counter;
  report.elapsed_ns = ns_since(start);
  return report;
}

QueryReport SearchIndex::query_seq2seq(std::span<const float> qseq, std::size_t seq_len) const {
  const auto start = Clock::now();
  check_seq(qseq, seq_len, *db_);
  const std::size_t dim = db_->dim();
  const std::size_t n = db_->size();
  QueryReport report;
  std::uint64_t counter = 0;

  auto query_frame = [&](std::size_t j) { return qseq.subspan(j * dim, dim); };

  // stage 1: summation score of every keyframe against the whole query
  // sequence, ties to the lowest frame index
  const auto& idx = keyframes_.indices;
  std::size_t best_kf = 0;
  double best_kf_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double score = 0.0;
    for (std::size_t j = 0; j < seq_len; ++j) {
      score += counted_sim(query_frame(j), db_->frame(idx[i]), counter);
    }
    if (score > best_kf_score) {
      best_kf_score = score;
      best_kf = i;
    }
  }
  report.stage1_keyframe = idx[best_kf];

  // stage 2: aligned windows inside the region; grow the region around the
  // keyframe when it is too short for one window
  Region region = regions_[best_kf];
  while (region.length() < seq_len) {
    if (region.begin > 0) --region.begin;
    if (region.length() < seq_len && region.end < n - 1) ++region.end;
  }

  std::size_t best_start = region.begin;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t p = region.begin; p + seq_len - 1 <= region.end; ++p) {
    double score = 0.0;
    for (std::size_t j = 0; j < seq_len; ++j) {
      score += counted_sim(query_frame(j), db_->frame(p + j), counter);
    }
    if (score > best_score) {
      best_score = score;
      best_start = p;
    }
  }

  report.best_index = best_start + seq_len / 2;  // center of the winning window
  report.best_similarity = best_score;
  report.comparisons = counter;
  report.elapsed_ns = ns_since(start);
  return report;
}

QueryReport query_exhaustive_im2im(const FrameDatabase& db, std::span<const float> q) {
  const auto start = Clock::now();
  check_query_dim(db, q.size());
  QueryReport report;
  std::uint64_t counter = 0;
  std::size_t best = 0;
  double best_sim = -2.0;
  for (std::size_t f = 0; f < db.size(); ++f) {
    const double s = counted_sim(q, db.frame(f), counter);
    if (s > best_sim) {
      best_sim = s;
      best = f;
    }
  }
  report.best_index = best;
  report.best_similarity = best_sim;
  report.comparisons = counter;
  report.elapsed_ns = ns_since(start);
  return report;
}

QueryReport query_exhaustive_seq2seq(const FrameDatabase& db, std::span<const float> qseq,
                                     std::size_t seq_len) {
  const auto start = Clock::now();
  check_seq(qseq, seq_len, db);
  const std::size_t dim = db.dim();
  QueryReport report;
  std::uint64_t counter = 0;
  auto query_frame = [&](std::size_t j) { return qseq.subspan(j * dim, dim); };

  std::size_t best_start = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p + seq_len <= db.size(); ++p) {
    double score = 0.0;
    for (std::size_t j = 0; j < seq_len; ++j) {
      score += counted_sim(query_frame(j), db.frame(p + j), counter);
    }
    if (score > best_score) {
      best_score = score;
      best_start = p;
    }
  }
  report.best_index = best_start + seq_len / 2;
  report.best_similarity = best_score;
  report.comparisons = counter;
  report.elapsed_ns = ns_since(start);
  return report;
}

}  // namespace vpr
