#include "vpr/clustering.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "vpr/rng.hpp"

namespace vpr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Above this size the full pairwise distance matrix is not materialized and
// candidate rows are computed on demand.
constexpr std::size_t kMatrixLimit = 4096;

// 1 - silhouette: the per-point term the swap search minimizes.
inline double loss_ratio(double a, double b) { return b > 0.0 ? a / b : 1.0; }

// (distance, frame index) lexicographic order; lower index wins ties so
// assignments are reproducible.
inline bool closer(double da, std::size_t ia, double db, std::size_t ib) {
  return da < db || (da == db && ia < ib);
}

class DistanceSource {
 public:
  explicit DistanceSource(const FrameDatabase& db) : db_(db), n_(db.size()) {
    if (n_ != 0 && n_ <= kMatrixLimit) {
      matrix_.assign(n_ * n_, 0.0);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j < n_; ++j) {
          const double d = distance(db_.frame(i), db_.frame(j));
          matrix_[i * n_ + j] = d;
          matrix_[j * n_ + i] = d;
        }
      }
    }
  }

  // Distances from point c to every point; buf is used when no matrix is held.
  const double* row(std::size_t c, std::vector<double>& buf) const {
    if (!matrix_.empty()) return matrix_.data() + c * n_;
    buf.resize(n_);
    const auto fc = db_.frame(c);
    for (std::size_t p = 0; p < n_; ++p) buf[p] = distance(fc, db_.frame(p));
    return buf.data();
  }

  double at(std::size_t i, std::size_t j) const {
    if (!matrix_.empty()) return matrix_[i * n_ + j];
    return distance(db_.frame(i), db_.frame(j));
  }

 private:
  const FrameDatabase& db_;
  std::size_t n_;
  std::vector<double> matrix_;
};

// Eager-swap local search over one medoid set. Keeps, for every point, its
// three nearest medoids by (distance, index); a medoid's own entry is itself
// at distance zero. The third slot lets a swap be scored in O(1) per point.
class SwapSolver {
 public:
  SwapSolver(const FrameDatabase& db, const DistanceSource& dist, std::vector<std::size_t> medoids)
      : db_(db),
        dist_(dist),
        n_(db.size()),
        k_(medoids.size()),
        n_non_(n_ - k_),
        medoids_(std::move(medoids)) {
    std::sort(medoids_.begin(), medoids_.end());
    is_medoid_.assign(n_, 0);
    pos_.assign(n_, -1);
    for (std::size_t r = 0; r < k_; ++r) {
      is_medoid_[medoids_[r]] = 1;
      pos_[medoids_[r]] = static_cast<int>(r);
    }
    removal_.assign(k_, 0.0);
    build_triples();
    loss_ = current_loss();
    trace_.push_back(ams());
  }

  void run() {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t c = 0; c < n_; ++c) {
        if (is_medoid_[c]) continue;
        if (try_candidate(c)) improved = true;
      }
    }
  }

  double ams() const { return 1.0 - loss_ / static_cast<double>(n_non_); }
  std::size_t swaps() const { return swaps_; }
  const std::vector<double>& trace() const { return trace_; }

  MedoidAssignment extract() const {
    MedoidAssignment a;
    a.medoids = medoids_;
    a.nearest_medoid = idx1_;
    a.second_medoid = idx2_;
    a.third_medoid = idx3_;
    a.nearest_dist = d1_;
    a.second_dist = d2_;
    a.third_dist = d3_;
    return a;
  }

 private:
  void build_triples() {
    idx1_.assign(n_, kNoMedoid);
    idx2_.assign(n_, kNoMedoid);
    idx3_.assign(n_, kNoMedoid);
    d1_.assign(n_, kInf);
    d2_.assign(n_, kInf);
    d3_.assign(n_, kInf);
    for (std::size_t p = 0; p < n_; ++p) {
      for (std::size_t r = 0; r < k_; ++r) {
        const std::size_t m = medoids_[r];
        insert_triple(p, m, p == m ? 0.0 : dist_.at(m, p));
      }
    }
  }

  void insert_triple(std::size_t p, std::size_t m, double d) {
    if (closer(d, m, d1_[p], idx1_[p])) {
      idx3_[p] = idx2_[p]; d3_[p] = d2_[p];
      idx2_[p] = idx1_[p]; d2_[p] = d1_[p];
      idx1_[p] = m; d1_[p] = d;
    } else if (closer(d, m, d2_[p], idx2_[p])) {
      idx3_[p] = idx2_[p]; d3_[p] = d2_[p];
      idx2_[p] = m; d2_[p] = d;
    } else if (closer(d, m, d3_[p], idx3_[p])) {
      idx3_[p] = m; d3_[p] = d;
    }
  }

  double current_loss() const {
    double loss = 0.0;
    for (std::size_t p = 0; p < n_; ++p) {
      if (!is_medoid_[p]) loss += loss_ratio(d1_[p], d2_[p]);
    }
    return loss;
  }

  // Scores swapping candidate c against every possible outgoing medoid in
  // one pass; executes the best swap when it improves AMS by > kSwapGain.
  bool try_candidate(std::size_t c) {
    const double* crow = dist_.row(c, row_buf_);
    const double leaving = loss_ratio(d1_[c], d2_[c]);
    double shared = -leaving;
    std::fill(removal_.begin(), removal_.end(), 0.0);

    for (std::size_t p = 0; p < n_; ++p) {
      if (is_medoid_[p] || p == c) continue;
      const double dc = crow[p];
      const double da = d1_[p];
      const double db = d2_[p];
      const double d3 = d3_[p];
      const double r_old = loss_ratio(da, db);

      // outgoing medoid is neither the nearest nor the second of p
      double generic;
      if (dc < da) generic = loss_ratio(dc, da);
      else if (dc < db) generic = loss_ratio(da, dc);
      else generic = r_old;
      shared += generic - r_old;

      // outgoing medoid is p's nearest: survivors {dc, db, d3}
      double r1;
      if (dc < db) r1 = loss_ratio(dc, db);
      else if (dc < d3) r1 = loss_ratio(db, dc);
      else r1 = loss_ratio(db, d3);
      removal_[static_cast<std::size_t>(pos_[idx1_[p]])] += r1 - generic;

      // outgoing medoid is p's second: survivors {da, dc, d3}
      double r2;
      if (dc < da) r2 = loss_ratio(dc, da);
      else if (dc < d3) r2 = loss_ratio(da, dc);
      else r2 = loss_ratio(da, d3);
      removal_[static_cast<std::size_t>(pos_[idx2_[p]])] += r2 - generic;
    }

    // each outgoing medoid becomes a non-medoid and contributes its own term
    for (std::size_t r = 0; r < k_; ++r) {
      const std::size_t m = medoids_[r];
      double o1 = kInf, o2 = kInf;
      int got = 0;
      const std::size_t mi[3] = {idx1_[m], idx2_[m], idx3_[m]};
      const double md[3] = {d1_[m], d2_[m], d3_[m]};
      for (int s = 0; s < 3 && got < 2; ++s) {
        if (mi[s] == m || mi[s] == kNoMedoid) continue;
        (got == 0 ? o1 : o2) = md[s];
        ++got;
      }
      const double dcm = crow[m];
      double joining;
      if (dcm < o1) joining = loss_ratio(dcm, o1);
      else if (dcm < o2) joining = loss_ratio(o1, dcm);
      else joining = loss_ratio(o1, o2);
      removal_[r] += joining;
    }

    std::size_t best_r = 0;
    double best = shared + removal_[0];
    for (std::size_t r = 1; r < k_; ++r) {
      const double v = shared + removal_[r];
      if (v < best) {
        best = v;
        best_r = r;
      }
    }
    const double gain = -best / static_cast<double>(n_non_);
    if (gain > kSwapGain) {
      execute_swap(medoids_[best_r], c, crow);
      return true;
    }
    return false;
  }

  void execute_swap(std::size_t out, std::size_t in, const double* crow) {
    is_medoid_[out] = 0;
    is_medoid_[in] = 1;
    medoids_.erase(std::lower_bound(medoids_.begin(), medoids_.end(), out));
    medoids_.insert(std::lower_bound(medoids_.begin(), medoids_.end(), in), in);
    pos_[out] = -1;
    for (std::size_t r = 0; r < k_; ++r) pos_[medoids_[r]] = static_cast<int>(r);

    for (std::size_t p = 0; p < n_; ++p) {
      bool hole = false;
      if (idx1_[p] == out) {
        idx1_[p] = idx2_[p]; d1_[p] = d2_[p];
        idx2_[p] = idx3_[p]; d2_[p] = d3_[p];
        hole = true;
      } else if (idx2_[p] == out) {
        idx2_[p] = idx3_[p]; d2_[p] = d3_[p];
        hole = true;
      } else if (idx3_[p] == out) {
        hole = true;
      }
      if (hole) {
        idx3_[p] = kNoMedoid;
        d3_[p] = kInf;
        if (k_ >= 3) rescan_third(p, in);
      }
      insert_triple(p, in, p == in ? 0.0 : crow[p]);
    }

    loss_ = current_loss();
    ++swaps_;
    trace_.push_back(ams());
  }

  // Refill the third slot of p from the current medoids, excluding the
  // just-added medoid (it is inserted afterwards) and the two slots kept.
  void rescan_third(std::size_t p, std::size_t added) {
    double best_d = kInf;
    std::size_t best_m = kNoMedoid;
    for (std::size_t r = 0; r < k_; ++r) {
      const std::size_t m = medoids_[r];
      if (m == added || m == idx1_[p] || m == idx2_[p]) continue;
      const double d = p == m ? 0.0 : dist_.at(m, p);
      if (closer(d, m, best_d, best_m)) {
        best_d = d;
        best_m = m;
      }
    }
    idx3_[p] = best_m;
    d3_[p] = best_d;
  }

  const FrameDatabase& db_;
  const DistanceSource& dist_;
  std::size_t n_ = 0, k_ = 0, n_non_ = 0;
  std::vector<std::size_t> medoids_;
  std::vector<std::uint8_t> is_medoid_;
  std::vector<int> pos_;  // frame index -> position in medoids_, -1 otherwise
  std::vector<std::size_t> idx1_, idx2_, idx3_;
  std::vector<double> d1_, d2_, d3_;
  std::vector<double> removal_;
  std::vector<double> row_buf_;
  std::vector<double> trace_;
  double loss_ = 0.0;
  std::size_t swaps_ = 0;
};

void validate_medoids(const FrameDatabase& db, const std::vector<std::size_t>& medoids) {
  const std::size_t n = db.size();
  const std::size_t k = medoids.size();
  if (n == 0) throw std::invalid_argument("empty database");
  if (k < 2 || k + 1 > n) {
    throw std::invalid_argument("medoid count must satisfy 2 <= k <= N-1, got k=" +
                                std::to_string(k) + " with N=" + std::to_string(n));
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (medoids[i] >= n) {
      throw std::invalid_argument("medoid index " + std::to_string(medoids[i]) + " out of range");
    }
    if (i > 0 && medoids[i] == medoids[i - 1]) {
      throw std::invalid_argument("duplicate medoid index " + std::to_string(medoids[i]));
    }
  }
}

}  // namespace

double silhouette_score(double a, double b) {
  if (!(a >= 0.0) || !(b >= a)) {
    throw std::invalid_argument("silhouette requires b >= a >= 0, got a=" + std::to_string(a) +
                                ", b=" + std::to_string(b));
  }
  if (b == 0.0) return 0.0;
  return 1.0 - a / b;
}

bool MedoidAssignment::is_medoid(std::size_t i) const {
  return std::binary_search(medoids.begin(), medoids.end(), i);
}

MedoidAssignment assign_medoids(const FrameDatabase& db, std::vector<std::size_t> medoids) {
  std::sort(medoids.begin(), medoids.end());
  validate_medoids(db, medoids);
  DistanceSource dist(db);
  SwapSolver solver(db, dist, std::move(medoids));
  return solver.extract();
}

double recompute_ams(const FrameDatabase& db, const std::vector<std::size_t>& medoids) {
  std::vector<std::size_t> sorted = medoids;
  std::sort(sorted.begin(), sorted.end());
  validate_medoids(db, sorted);
  const std::size_t n = db.size();
  double total = 0.0;
  std::size_t count = 0;
  std::size_t next = 0;  // walk the sorted medoids alongside the frame scan
  for (std::size_t p = 0; p < n; ++p) {
    if (next < sorted.size() && sorted[next] == p) {
      ++next;
      continue;
    }
    double a = kInf, b = kInf;
    std::size_t ia = kNoMedoid, ib = kNoMedoid;
    for (std::size_t m : sorted) {
      const double d = distance(db.frame(m), db.frame(p));
      if (closer(d, m, a, ia)) {
        b = a; ib = ia;
        a = d; ia = m;
      } else if (closer(d, m, b, ib)) {
        b = d; ib = m;
      }
    }
    total += silhouette_score(a, b);
    ++count;
  }
  return total / static_cast<double>(count);
}

double assignment_ams(const MedoidAssignment& assignment) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < assignment.n_points(); ++p) {
    if (assignment.is_medoid(p)) continue;
    total += silhouette_score(assignment.nearest_dist[p], assignment.second_dist[p]);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("assignment has no non-medoids");
  return total / static_cast<double>(count);
}

double swap_delta(const FrameDatabase& db, const MedoidAssignment& assignment,
                  std::size_t out_medoid, std::size_t in_candidate) {
  const std::size_t n = assignment.n_points();
  if (n != db.size()) throw std::invalid_argument("assignment does not match database");
  if (!assignment.is_medoid(out_medoid)) {
    throw std::invalid_argument("out_medoid " + std::to_string(out_medoid) + " is not a medoid");
  }
  if (in_candidate >= n || assignment.is_medoid(in_candidate)) {
    throw std::invalid_argument("in_candidate " + std::to_string(in_candidate) +
                                " is not a non-medoid point");
  }
  const std::size_t k = assignment.medoids.size();
  const auto fin = db.frame(in_candidate);

  double delta_loss =
      -loss_ratio(assignment.nearest_dist[in_candidate], assignment.second_dist[in_candidate]);

  for (std::size_t p = 0; p < n; ++p) {
    if (p == in_candidate || assignment.is_medoid(p)) continue;
    const double dc = distance(fin, db.frame(p));
    const double da = assignment.nearest_dist[p];
    const double dbd = assignment.second_dist[p];
    const double d3 = assignment.third_dist[p];
    double r_new;
    if (assignment.nearest_medoid[p] == out_medoid) {
      if (dc < dbd) r_new = loss_ratio(dc, dbd);
      else if (dc < d3) r_new = loss_ratio(dbd, dc);
      else r_new = loss_ratio(dbd, d3);
    } else if (assignment.second_medoid[p] == out_medoid) {
      if (dc < da) r_new = loss_ratio(dc, da);
      else if (dc < d3) r_new = loss_ratio(da, dc);
      else r_new = loss_ratio(da, d3);
    } else {
      if (dc < da) r_new = loss_ratio(dc, da);
      else if (dc < dbd) r_new = loss_ratio(da, dc);
      else r_new = loss_ratio(da, dbd);
    }
    delta_loss += r_new - loss_ratio(da, dbd);
  }

  // the outgoing medoid joins the non-medoids
  double o1 = kInf, o2 = kInf;
  int got = 0;
  const std::size_t mi[3] = {assignment.nearest_medoid[out_medoid],
                             assignment.second_medoid[out_medoid],
                             assignment.third_medoid[out_medoid]};
  const double md[3] = {assignment.nearest_dist[out_medoid], assignment.second_dist[out_medoid],
                        assignment.third_dist[out_medoid]};
  for (int s = 0; s < 3 && got < 2; ++s) {
    if (mi[s] == out_medoid || mi[s] == kNoMedoid) continue;
    (got == 0 ? o1 : o2) = md[s];
    ++got;
  }
  const double dcm = distance(fin, db.frame(out_medoid));
  double joining;
  if (dcm < o1) joining = loss_ratio(dcm, o1);
  else if (dcm < o2) joining = loss_ratio(o1, dcm);
  else joining = loss_ratio(o1, o2);
  delta_loss += joining;

  return -delta_loss / static_cast<double>(n - k);
}

std::vector<std::size_t> fixed_rate_indices(std::size_t n, std::size_t k) {
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    out.push_back((2 * j + 1) * n / (2 * k));  // floor((j + 0.5) * n / k), exactly
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ClusteringResult faster_msc(const FrameDatabase& db, std::size_t k, const ClusterOptions& opt) {
  const std::size_t n = db.size();
  if (n == 0) throw std::invalid_argument("empty database");
  if (k < 2 || k + 1 > n) {
    throw std::invalid_argument("k must satisfy 2 <= k <= N-1, got k=" + std::to_string(k) +
                                " with N=" + std::to_string(n));
  }
  DistanceSource dist(db);

  auto run_one = [&](std::vector<std::size_t> init) {
    SwapSolver solver(db, dist, std::move(init));
    solver.run();
    ClusteringResult res;
    res.assignment = solver.extract();
    res.ams = solver.ams();
    res.iterations = solver.swaps();
    res.ams_trace = solver.trace();
    res.init_scheme = opt.init;
    res.seed = opt.seed;
    return res;
  };

  if (opt.init == InitScheme::fixed_rate) {
    return run_one(fixed_rate_indices(n, k));
  }

  const unsigned restarts = std::max(1u, opt.restarts);
  rng::Engine master(opt.seed);
  std::vector<std::uint64_t> sub_seeds(restarts);
  for (auto& s : sub_seeds) s = master();

  std::vector<std::optional<ClusteringResult>> results(restarts);
  unsigned threads = opt.threads != 0 ? opt.threads : std::thread::hardware_concurrency();
  threads = std::clamp(threads, 1u, restarts);

  std::atomic<unsigned> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    try {
      while (true) {
        const unsigned r = cursor.fetch_add(1);
        if (r >= restarts) return;
        rng::Engine eng(sub_seeds[r]);
        results[r] = run_one(rng::sample_indices(eng, n, k));
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r]->ams > results[best]->ams) best = r;
  }
  return std::move(*results[best]);
}

}  // namespace vpr
