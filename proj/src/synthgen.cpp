#include "vpr/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "vpr/rng.hpp"

namespace vpr {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Angular dispersion a short dwell can express as coherent motion; anything
// beyond it becomes per-frame scatter (a feature extractor losing temporal
// coherence looks like this).
constexpr double kCoherenceCap = 0.25;

// Target angular step for transit frames between dwell regions.
constexpr double kTransitHop = 0.03;

std::vector<double> random_unit(rng::Engine& eng, std::size_t dim) {
  std::vector<double> v(dim);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (auto& x : v) {
      x = rng::normal(eng);
      sq += x * x;
    }
  } while (sq == 0.0);
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& x : v) x *= inv;
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double angle_between(const std::vector<double>& a, const std::vector<double>& b) {
  return std::acos(std::clamp(dot(a, b), -1.0, 1.0));
}

// Unit vector orthogonal to u.
std::vector<double> random_orthogonal(rng::Engine& eng, const std::vector<double>& u) {
  while (true) {
    std::vector<double> v = random_unit(eng, u.size());
    const double proj = dot(v, u);
    double sq = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] -= proj * u[i];
      sq += v[i] * v[i];
    }
    if (sq < 1e-12) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : v) x *= inv;
    return v;
  }
}

std::vector<double> rotate_towards(const std::vector<double>& u, const std::vector<double>& t,
                                   double phi) {
  std::vector<double> out(u.size());
  const double c = std::cos(phi), s = std::sin(phi);
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = c * u[i] + s * t[i];
  return out;
}

std::vector<double> slerp(const std::vector<double>& a, const std::vector<double>& b, double t) {
  const double omega = angle_between(a, b);
  std::vector<double> out(a.size());
  if (omega < 1e-9) {
    out = a;
    return out;
  }
  const double inv = 1.0 / std::sin(omega);
  const double wa = std::sin((1.0 - t) * omega) * inv;
  const double wb = std::sin(t * omega) * inv;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = wa * a[i] + wb * b[i];
  return out;
}

// Split n into uneven parts of at least 1 each, deterministically.
std::vector<std::size_t> uneven_sizes(rng::Engine& eng, std::size_t n, std::size_t parts) {
  std::vector<double> weights(parts);
  double total = 0.0;
  for (auto& w : weights) {
    w = 0.5 + rng::unit_real(eng);
    total += w;
  }
  std::vector<std::size_t> sizes(parts);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < parts; ++c) {
    sizes[c] =
        std::max<std::size_t>(1, static_cast<std::size_t>(weights[c] / total * static_cast<double>(n)));
    assigned += sizes[c];
  }
  std::size_t c = 0;
  while (assigned < n) {
    ++sizes[c % parts];
    ++assigned;
    ++c;
  }
  while (assigned > n) {
    auto it = std::max_element(sizes.begin(), sizes.end());
    if (*it <= 1) throw data_error("cannot split frames across clusters");
    --*it;
    --assigned;
  }
  return sizes;
}

}  // namespace

SynthData generate(const SynthSpec& spec) {
  if (spec.n_clusters < 2 || spec.n_frames < spec.n_clusters) {
    throw std::invalid_argument("need n_frames >= n_clusters >= 2");
  }
  if (spec.dim < 2) throw std::invalid_argument("dim must be >= 2");
  if (spec.intra_noise < 0.0 || spec.inter_gap < 0.0 || spec.query_noise < 0.0) {
    throw std::invalid_argument("noise parameters must be >= 0");
  }

  rng::Engine eng(spec.seed);

  // cluster centers, pairwise separated by at least inter_gap
  std::vector<std::vector<double>> centers;
  const std::size_t max_attempts = 200 * spec.n_clusters;
  std::size_t attempts = 0;
  while (centers.size() < spec.n_clusters) {
    if (++attempts > max_attempts) {
      throw data_error("cannot place " + std::to_string(spec.n_clusters) +
                       " cluster centers at angular separation " + std::to_string(spec.inter_gap) +
                       " in dimension " + std::to_string(spec.dim));
    }
    std::vector<double> c = random_unit(eng, spec.dim);
    bool ok = true;
    for (const auto& other : centers) {
      if (angle_between(c, other) < spec.inter_gap) {
        ok = false;
        break;
      }
    }
    if (ok) centers.push_back(std::move(c));
  }

  // The walk is one continuous trajectory: a dwell arc per cluster joined by
  // bounded-hop transits, so feature similarity decays with temporal
  // distance the way video does. Dispersion up to kCoherenceCap sets the
  // dwell arc width (uniform sweep over +-sqrt(3)*w has std-dev w); any
  // excess dispersion becomes independent per-frame scatter.
  const double coherent = std::min(spec.intra_noise, kCoherenceCap);
  const double scatter = spec.intra_noise > kCoherenceCap ? spec.intra_noise - kCoherenceCap : 0.0;
  const double half_width = std::sqrt(3.0) * coherent;

  std::vector<std::vector<double>> tangents;
  tangents.reserve(spec.n_clusters);
  for (std::size_t c = 0; c < spec.n_clusters; ++c) {
    tangents.push_back(random_orthogonal(eng, centers[c]));
  }

  // transit lengths: proportional to the gap angles, capped at a quarter of
  // the frame budget
  std::vector<double> gap_angles(spec.n_clusters - 1);
  double total_gap = 0.0;
  for (std::size_t c = 0; c + 1 < spec.n_clusters; ++c) {
    const auto end_dir = rotate_towards(centers[c], tangents[c], half_width);
    const auto start_dir = rotate_towards(centers[c + 1], tangents[c + 1], -half_width);
    gap_angles[c] = angle_between(end_dir, start_dir);
    total_gap += gap_angles[c];
  }
  std::size_t wanted_transit = 0;
  for (double g : gap_angles) {
    wanted_transit += g > kTransitHop ? static_cast<std::size_t>(std::ceil(g / kTransitHop)) - 1 : 0;
  }
  const std::size_t transit_budget =
      std::min(wanted_transit, std::min(spec.n_frames / 4,
                                        spec.n_frames - spec.n_clusters));
  std::vector<std::size_t> transit(spec.n_clusters - 1, 0);
  if (wanted_transit > 0 && total_gap > 0.0) {
    std::size_t used = 0;
    for (std::size_t c = 0; c + 1 < spec.n_clusters; ++c) {
      transit[c] = static_cast<std::size_t>(
          static_cast<double>(transit_budget) * gap_angles[c] / total_gap);
      used += transit[c];
    }
    for (std::size_t c = 0; used < transit_budget && c + 1 < spec.n_clusters; ++c) {
      ++transit[c];
      ++used;
    }
  }
  std::size_t total_transit = 0;
  for (std::size_t t : transit) total_transit += t;

  const std::vector<std::size_t> sizes =
      uneven_sizes(eng, spec.n_frames - total_transit, spec.n_clusters);

  // emit the trajectory in doubles, jitter applied afterwards
  std::vector<std::vector<double>> path;
  path.reserve(spec.n_frames);
  std::vector<std::size_t> segment_of;  // geotag heading segment per frame
  segment_of.reserve(spec.n_frames);
  for (std::size_t c = 0; c < spec.n_clusters; ++c) {
    const std::size_t m = sizes[c];
    for (std::size_t t = 0; t < m; ++t) {
      const double phi =
          m == 1 ? 0.0
                 : -half_width + 2.0 * half_width * (static_cast<double>(t) + 0.5) / static_cast<double>(m);
      path.push_back(rotate_towards(centers[c], tangents[c], phi));
      segment_of.push_back(2 * c);
    }
    if (c + 1 < spec.n_clusters && transit[c] > 0) {
      const std::vector<double> from = path.back();
      const auto to = rotate_towards(
          centers[c + 1], tangents[c + 1],
          sizes[c + 1] == 1 ? 0.0
                            : -half_width + half_width / static_cast<double>(sizes[c + 1]));
      for (std::size_t i = 1; i <= transit[c]; ++i) {
        path.push_back(
            slerp(from, to, static_cast<double>(i) / static_cast<double>(transit[c] + 1)));
        segment_of.push_back(2 * c + 1);
      }
    }
  }

  if (scatter > 0.0) {
    for (auto& p : path) {
      const auto ortho = random_orthogonal(eng, p);
      const double eps = rng::normal(eng) * scatter;
      p = rotate_towards(p, ortho, eps);
    }
  }

  std::vector<float> data;
  data.reserve(spec.n_frames * spec.dim);
  for (const auto& p : path) {
    for (double x : p) data.push_back(static_cast<float>(x));
  }
  FrameDatabase db(spec.dim, std::move(data), "synthetic-seed" + std::to_string(spec.seed));

  // geotags: piecewise-linear path, one heading per dwell/transit segment,
  // step magnitude in the 1e-4 degree range the distance strategy works in
  std::vector<GeoTag> tags;
  tags.reserve(spec.n_frames);
  GeoTag pos{51.75, -1.26};
  std::size_t current_segment = SIZE_MAX;
  double dlat = 0.0, dlon = 0.0;
  for (std::size_t i = 0; i < spec.n_frames; ++i) {
    if (segment_of[i] != current_segment) {
      current_segment = segment_of[i];
      const double heading = kTwoPi * rng::unit_real(eng);
      const double step = 5e-5 * (0.5 + rng::unit_real(eng));
      dlat = step * std::cos(heading);
      dlon = step * std::sin(heading);
    }
    tags.push_back(pos);
    pos.lat += dlat;
    pos.lon += dlon;
  }
  db.bind_geotags(std::move(tags));

  // queries: one per frame, rotated by N(0, query_noise) toward a random
  // orthogonal direction; zero noise copies the frame bit for bit
  std::vector<float> qdata;
  qdata.reserve(spec.n_frames * spec.dim);
  for (std::size_t i = 0; i < spec.n_frames; ++i) {
    const auto f = db.frame(i);
    if (spec.query_noise == 0.0) {
      qdata.insert(qdata.end(), f.begin(), f.end());
      continue;
    }
    std::vector<double> base(f.begin(), f.end());
    const std::vector<double> ortho = random_orthogonal(eng, base);
    const double eps = rng::normal(eng) * spec.query_noise;
    const double ce = std::cos(eps), se = std::sin(eps);
    for (std::size_t j = 0; j < spec.dim; ++j) {
      qdata.push_back(static_cast<float>(ce * base[j] + se * ortho[j]));
    }
  }
  FrameDatabase queries(spec.dim, std::move(qdata),
                        "synthetic-queries-seed" + std::to_string(spec.seed));

  GroundTruth gt;
  gt.mode = GroundTruth::Mode::frame;
  gt.frame_truth.resize(spec.n_frames);
  for (std::size_t i = 0; i < spec.n_frames; ++i) gt.frame_truth[i] = i;

  return SynthData{std::move(db), std::move(queries), std::move(gt)};
}

}  // namespace vpr
