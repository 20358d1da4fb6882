#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "vpr/featurestore.hpp"

namespace vpr {

inline constexpr std::size_t kNoMedoid = std::numeric_limits<std::size_t>::max();

// Minimum AMS improvement for a swap to be executed. Swaps at exactly zero
// gain are rejected so floating-point noise cannot cycle the search.
inline constexpr double kSwapGain = 1e-12;

// Per-point medoid silhouette 1 - a/b. Zero when a == b == 0 (a point
// coinciding with two medoids), so duplicate frames never inflate the
// average. Throws std::invalid_argument unless b >= a >= 0.
double silhouette_score(double a, double b);

// Nearest-medoid caches for every point. For each point the up-to-three
// nearest medoids are kept, ordered by (distance, frame index); a medoid's
// own entry is itself at distance zero. The third slot backs incremental
// swap evaluation and holds kNoMedoid / +inf when k == 2.
//
// For a non-medoid i, a_i = nearest_dist[i] and b_i = second_dist[i].
struct MedoidAssignment {
  std::vector<std::size_t> medoids;  // sorted frame indices, 2 <= k <= N-1

  std::vector<std::size_t> nearest_medoid;
  std::vector<std::size_t> second_medoid;
  std::vector<std::size_t> third_medoid;
  std::vector<double> nearest_dist;
  std::vector<double> second_dist;
  std::vector<double> third_dist;

  std::size_t n_points() const { return nearest_medoid.size(); }
  bool is_medoid(std::size_t i) const;
};

// Builds the caches for a given medoid set by scanning all medoids per
// point. Validates 2 <= k <= N-1, in-range distinct members.
MedoidAssignment assign_medoids(const FrameDatabase& db, std::vector<std::size_t> medoids);

// From-scratch Average Medoid Silhouette over the non-medoids: for each
// non-medoid find its two nearest medoids, average 1 - a/b. This is the
// reference every incremental path must agree with.
double recompute_ams(const FrameDatabase& db, const std::vector<std::size_t>& medoids);

// AMS read off the caches.
double assignment_ams(const MedoidAssignment& assignment);

// AMS(medoids - out + in) - AMS(medoids), computed incrementally from the
// caches. Agrees with the recompute_ams difference within 1e-9.
double swap_delta(const FrameDatabase& db, const MedoidAssignment& assignment,
                  std::size_t out_medoid, std::size_t in_candidate);

enum class InitScheme { random_restart, fixed_rate };

struct ClusterOptions {
  InitScheme init = InitScheme::random_restart;
  std::uint64_t seed = 42;
  unsigned restarts = 10;  // independent starts under random_restart
  unsigned threads = 0;    // 0 = hardware concurrency; restarts run in parallel
};

struct ClusteringResult {
  MedoidAssignment assignment;
  double ams = 0.0;
  std::size_t iterations = 0;  // executed swaps
  InitScheme init_scheme = InitScheme::random_restart;
  std::uint64_t seed = 0;
  std::vector<double> ams_trace;  // AMS after each executed swap, strictly increasing
};

// Centered uniform lattice floor((j + 0.5) * n / k), j = 0..k-1. Used both
// for fixed-rate initialization and the fixed-rate selection strategy.
std::vector<std::size_t> fixed_rate_indices(std::size_t n, std::size_t k);

// Keyframe extraction by eager swapping: scan candidate non-medoids in
// ascending frame order, execute any swap improving AMS by more than
// kSwapGain immediately (picking the outgoing medoid that maximizes the
// gain), stop after a full pass without improvement. random_restart runs
// `restarts` independent starts and keeps the best AMS, ties to the lowest
// restart ordinal. Deterministic given (db, k, init, seed).
ClusteringResult faster_msc(const FrameDatabase& db, std::size_t k, const ClusterOptions& opt = {});

}  // namespace vpr
