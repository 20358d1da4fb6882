#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "test_util.hpp"
#include "vpr/clustering.hpp"

using namespace vpr;

// Hand-derived: vectors at {0, 5, 85, 90} degrees, medoids at 0 and 90.
// Both non-medoids score 1 - (1 - cos 5°) / (1 - cos 85°).
constexpr double kFourPointAms = 0.9958313788162414;

TEST_CASE("silhouette score basics") {
  CHECK(silhouette_score(0.0, 0.5) == 1.0);
  CHECK(silhouette_score(0.3, 0.3) == 0.0);
  CHECK(silhouette_score(0.2, 0.4) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(silhouette_score(0.0, 0.0) == 0.0);  // coincides with two medoids
  CHECK_THROWS_AS(silhouette_score(0.5, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(silhouette_score(-0.1, 0.3), std::invalid_argument);
}

TEST_CASE("recompute_ams: perfectly separated duplicates give 1.0") {
  // non-medoids coincide with a medoid of their own cluster
  const auto db = testutil::db_from_rows({{1, 0}, {1, 0}, {0, 1}, {0, 1}});
  CHECK(recompute_ams(db, {0, 2}) == 1.0);
}

TEST_CASE("recompute_ams: four-point hand-derived fixture") {
  const auto db = testutil::db_from_angles_deg({0.0, 5.0, 85.0, 90.0});
  const double ams = recompute_ams(db, {0, 3});
  CHECK(ams == doctest::Approx(kFourPointAms).epsilon(1e-5));
  CHECK(ams == doctest::Approx(0.99583).epsilon(1e-4));
  CHECK(ams == doctest::Approx(testutil::naive_ams(db, {0, 3})).epsilon(1e-12));
}

TEST_CASE("recompute_ams: scores {1, 0, 0.5} average to 0.5") {
  // medoids e1 and e2; A duplicates a medoid (s=1), B is equidistant (s=0),
  // C at the 3-4-5 angle has a/b = 0.2/0.4 (s=0.5)
  const float r = 0.70710678f;
  const auto db = testutil::db_from_rows({{1, 0}, {0, 1}, {1, 0}, {r, r}, {0.8f, 0.6f}});
  CHECK(recompute_ams(db, {0, 1}) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("recompute_ams agrees with the brute-force oracle on random data") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto db = testutil::random_unit_db(23, 5, seed);
    rng::Engine eng(seed * 17 + 1);
    for (std::size_t k : {2, 3, 5}) {
      const auto medoids = rng::sample_indices(eng, db.size(), k);
      CHECK(recompute_ams(db, medoids) ==
            doctest::Approx(testutil::naive_ams(db, medoids)).epsilon(1e-12));
    }
  }
}

TEST_CASE("recompute_ams validates the medoid set") {
  const auto db = testutil::random_unit_db(6, 3, 7);
  CHECK_THROWS_AS(recompute_ams(db, {0}), std::invalid_argument);               // k < 2
  CHECK_THROWS_AS(recompute_ams(db, {0, 1, 2, 3, 4, 5}), std::invalid_argument);  // k = N
  CHECK_THROWS_AS(recompute_ams(db, {0, 9}), std::invalid_argument);            // out of range
  CHECK_THROWS_AS(recompute_ams(db, {1, 1}), std::invalid_argument);            // duplicate
}

TEST_CASE("assign_medoids caches honor the type invariants") {
  const auto db = testutil::random_unit_db(30, 6, 11);
  const auto a = assign_medoids(db, {3, 9, 17, 25});
  REQUIRE(a.n_points() == db.size());
  for (std::size_t p = 0; p < db.size(); ++p) {
    if (a.is_medoid(p)) {
      CHECK(a.nearest_medoid[p] == p);
      CHECK(a.nearest_dist[p] == 0.0);
      continue;
    }
    CHECK(a.nearest_dist[p] >= 0.0);
    CHECK(a.second_dist[p] >= a.nearest_dist[p]);
    CHECK(a.nearest_medoid[p] != a.second_medoid[p]);
    CHECK(a.is_medoid(a.nearest_medoid[p]));
    CHECK(a.is_medoid(a.second_medoid[p]));
    // caches match a direct scan
    CHECK(a.nearest_dist[p] == distance(db.frame(a.nearest_medoid[p]), db.frame(p)));
    CHECK(a.second_dist[p] == distance(db.frame(a.second_medoid[p]), db.frame(p)));
  }
  CHECK(assignment_ams(a) == doctest::Approx(recompute_ams(db, a.medoids)).epsilon(1e-12));
}

TEST_CASE("swap_delta: swapping in an exact duplicate of the medoid is a no-op") {
  const auto db = testutil::db_from_rows({{1, 0}, {1, 0}, {0, 1}, {-1, 0}});
  const auto a = assign_medoids(db, {0, 2});
  CHECK(swap_delta(db, a, 0, 1) == 0.0);
}

TEST_CASE("swap_delta matches the recompute difference on the four-point fixture") {
  const auto db = testutil::db_from_angles_deg({0.0, 5.0, 85.0, 90.0});
  const auto a = assign_medoids(db, {0, 3});
  const double base = recompute_ams(db, {0, 3});
  for (std::size_t out : {0, 3}) {
    for (std::size_t in : {1, 2}) {
      std::vector<std::size_t> swapped;
      for (std::size_t m : a.medoids) {
        if (m != out) swapped.push_back(m);
      }
      swapped.push_back(in);
      std::sort(swapped.begin(), swapped.end());
      const double expected = recompute_ams(db, swapped) - base;
      CHECK(swap_delta(db, a, out, in) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("swap_delta: exhaustive sweep against the oracle on a random instance") {
  const auto db = testutil::random_unit_db(20, 6, 31);
  rng::Engine eng(77);
  const auto medoids = rng::sample_indices(eng, db.size(), 4);
  const auto a = assign_medoids(db, medoids);
  const double base = recompute_ams(db, medoids);
  for (std::size_t out : medoids) {
    for (std::size_t in = 0; in < db.size(); ++in) {
      if (a.is_medoid(in)) continue;
      std::vector<std::size_t> swapped;
      for (std::size_t m : medoids) {
        if (m != out) swapped.push_back(m);
      }
      swapped.push_back(in);
      const double expected = recompute_ams(db, swapped) - base;
      const double got = swap_delta(db, a, out, in);
      CHECK(std::abs(got - expected) < 1e-9);
    }
  }
}

TEST_CASE("swap_delta rejects membership violations") {
  const auto db = testutil::random_unit_db(10, 4, 3);
  const auto a = assign_medoids(db, {2, 7});
  CHECK_THROWS_AS(swap_delta(db, a, 3, 5), std::invalid_argument);  // out not a medoid
  CHECK_THROWS_AS(swap_delta(db, a, 2, 7), std::invalid_argument);  // in already a medoid
}

namespace {

// 3 frames near 0 degrees, 3 near 90. Distinct but tightly bundled.
vpr::FrameDatabase two_bundles() {
  return testutil::db_from_angles_deg({-1.0, 0.0, 1.0, 89.0, 90.0, 91.0});
}

}  // namespace

TEST_CASE("faster_msc finds the global optimum on the two-bundle instance") {
  const auto db = two_bundles();
  const ClusteringResult res = faster_msc(db, 2, {});
  // one medoid per bundle
  REQUIRE(res.assignment.medoids.size() == 2);
  CHECK(res.assignment.medoids[0] <= 2);
  CHECK(res.assignment.medoids[1] >= 3);
  // equals the exhaustive maximum over all C(6,2) = 15 pairs
  const double best = testutil::best_ams_over_all_subsets(db, 2);
  CHECK(res.ams == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("faster_msc handles k = N-1") {
  const auto db = testutil::random_unit_db(6, 4, 13);
  const ClusteringResult res = faster_msc(db, 5, {});
  CHECK(res.assignment.medoids.size() == 5);
  // single non-medoid: AMS is that point's silhouette
  std::size_t lone = 0;
  for (std::size_t p = 0; p < db.size(); ++p) {
    if (!res.assignment.is_medoid(p)) lone = p;
  }
  CHECK(res.ams == doctest::Approx(silhouette_score(res.assignment.nearest_dist[lone],
                                                    res.assignment.second_dist[lone]))
                       .epsilon(1e-12));
  CHECK(res.ams == doctest::Approx(recompute_ams(db, res.assignment.medoids)).epsilon(1e-9));
}

TEST_CASE("faster_msc output is a swap-local optimum") {
  const auto db = testutil::random_unit_db(30, 8, 2024);
  const ClusteringResult res = faster_msc(db, 3, {});
  for (std::size_t out : res.assignment.medoids) {
    for (std::size_t in = 0; in < db.size(); ++in) {
      if (res.assignment.is_medoid(in)) continue;
      CHECK(swap_delta(db, res.assignment, out, in) <= kSwapGain);
    }
  }
}

TEST_CASE("faster_msc result invariants") {
  const auto db = testutil::random_unit_db(60, 8, 5);
  for (InitScheme init : {InitScheme::random_restart, InitScheme::fixed_rate}) {
    ClusterOptions opt;
    opt.init = init;
    opt.seed = 99;
    const ClusteringResult res = faster_msc(db, 8, opt);
    CHECK(res.ams >= 0.0);
    CHECK(res.ams <= 1.0);
    CHECK(res.ams == doctest::Approx(recompute_ams(db, res.assignment.medoids)).epsilon(1e-9));
    CHECK(res.iterations + 1 == res.ams_trace.size());
    for (std::size_t i = 1; i < res.ams_trace.size(); ++i) {
      CHECK(res.ams_trace[i] > res.ams_trace[i - 1]);  // strictly increasing
    }
    CHECK(std::is_sorted(res.assignment.medoids.begin(), res.assignment.medoids.end()));
  }
}

TEST_CASE("faster_msc is deterministic, including across restart parallelism") {
  const auto db = testutil::random_unit_db(50, 6, 21);
  ClusterOptions opt;
  opt.seed = 4242;
  opt.threads = 1;
  const auto a = faster_msc(db, 5, opt);
  const auto b = faster_msc(db, 5, opt);
  CHECK(a.assignment.medoids == b.assignment.medoids);
  CHECK(a.ams == b.ams);
  opt.threads = 4;
  const auto c = faster_msc(db, 5, opt);
  CHECK(a.assignment.medoids == c.assignment.medoids);
  CHECK(a.ams == c.ams);
}

TEST_CASE("faster_msc validates its inputs") {
  const auto db = testutil::random_unit_db(8, 4, 1);
  CHECK_THROWS_AS(faster_msc(db, 1, {}), std::invalid_argument);
  CHECK_THROWS_AS(faster_msc(db, 8, {}), std::invalid_argument);
  CHECK_THROWS_AS(faster_msc(FrameDatabase(), 2, {}), std::invalid_argument);
}

TEST_CASE("fixed-rate lattice") {
  CHECK(fixed_rate_indices(10, 2) == std::vector<std::size_t>{2, 7});
  CHECK(fixed_rate_indices(10, 10) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto big = fixed_rate_indices(12836, 1283);
  CHECK(big.size() == 1283);  // all distinct at Nordland scale
  CHECK(std::is_sorted(big.begin(), big.end()));
  CHECK(big.back() < 12836);
}

TEST_CASE("fixed_rate init seeds the lattice medoids") {
  const auto db = testutil::random_unit_db(40, 4, 3);
  ClusterOptions opt;
  opt.init = InitScheme::fixed_rate;
  const ClusteringResult res = faster_msc(db, 4, opt);
  // the trace starts at the lattice AMS
  CHECK(res.ams_trace.front() ==
        doctest::Approx(recompute_ams(db, fixed_rate_indices(40, 4))).epsilon(1e-9));
}
