#pragma once

#include "vpr/featurestore.hpp"

namespace vpr {

// Desk-scale stand-in for a feature database extracted from video: unit
// vectors walking through well-separated directional clusters, with
// synthetic geotags and per-frame query copies.
struct SynthSpec {
  std::size_t n_frames = 200;
  std::size_t dim = 16;
  std::size_t n_clusters = 4;
  double intra_noise = 0.05;  // angular std-dev of frames around their cluster center, radians
  double inter_gap = 0.5;     // minimum angle between cluster centers, radians
  double query_noise = 0.01;  // angular perturbation applied to build queries
  std::uint64_t seed = 42;
};

struct SynthData {
  FrameDatabase db;       // geotags bound
  FrameDatabase queries;  // one per frame, perturbed copies
  GroundTruth truth;      // frame mode, query i -> frame i
};

// Deterministic in the seed, bit for bit. Frames inside a cluster sweep a
// smooth arc around the center (video-like: feature similarity decays with
// temporal distance), with the sweep width scaled so the angular deviation
// from the center has std-dev intra_noise. Cluster sizes are uneven.
// Throws data_error when the centers cannot be placed at inter_gap.
SynthData generate(const SynthSpec& spec);

}  // namespace vpr
