#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "vpr/strategies.hpp"

using namespace vpr;

namespace {

// A smooth arc: frame i at angle i * step_deg.
FrameDatabase drift_db(std::size_t n, double step_deg) {
  std::vector<double> angles;
  for (std::size_t i = 0; i < n; ++i) angles.push_back(step_deg * static_cast<double>(i));
  return testutil::db_from_angles_deg(angles);
}

FrameDatabase constant_db(std::size_t n) {
  std::vector<std::vector<float>> rows(n, {1.0f, 0.0f, 0.0f});
  return testutil::db_from_rows(rows);
}

std::vector<GeoTag> line_tags(std::size_t n, double dlat, double dlon) {
  std::vector<GeoTag> tags;
  for (std::size_t i = 0; i < n; ++i) {
    tags.push_back({dlat * static_cast<double>(i), dlon * static_cast<double>(i)});
  }
  return tags;
}

void check_invariants(const KeyframeSet& kfs, const FrameDatabase& db) {
  validate(kfs, db);
  CHECK(kfs.indices.size() >= 2);
  CHECK(kfs.ratio ==
        doctest::Approx(static_cast<double>(kfs.indices.size()) / static_cast<double>(db.size())));
}

}  // namespace

TEST_CASE("select_medoid wraps the clustering and attaches AMS") {
  const auto db = testutil::db_from_angles_deg({-1.0, 0.0, 1.0, 89.0, 90.0, 91.0});
  const KeyframeSet kfs = select_medoid(db, 0.33, {});
  check_invariants(kfs, db);
  REQUIRE(kfs.indices.size() == 2);  // round(0.33 * 6) = 2
  CHECK(kfs.indices[0] <= 2);
  CHECK(kfs.indices[1] >= 3);
  REQUIRE(kfs.ams.has_value());
  CHECK(*kfs.ams == doctest::Approx(recompute_ams(db, kfs.indices)).epsilon(1e-9));
}

TEST_CASE("select_medoid rejects out-of-range ratios") {
  const auto db = testutil::random_unit_db(6, 3, 1);
  CHECK_THROWS_AS(select_medoid(db, 1.0, {}), std::invalid_argument);   // k = N
  CHECK_THROWS_AS(select_medoid(db, 0.01, {}), std::invalid_argument);  // k = 0
}

TEST_CASE("select_medoid at the smallest valid instance") {
  const auto db = testutil::db_from_angles_deg({0.0, 45.0, 90.0});
  const KeyframeSet kfs = select_medoid(db, 0.67, {});  // k = 2, one non-medoid
  check_invariants(kfs, db);
  CHECK(kfs.indices.size() == 2);
}

TEST_CASE("select_similarity on a constant sequence pads to two keyframes") {
  const auto db = constant_db(10);
  const KeyframeSet kfs = select_similarity(db, 0.9);
  check_invariants(kfs, db);
  CHECK(kfs.indices == std::vector<std::size_t>{0, 9});
}

TEST_CASE("select_similarity picks every frame when neighbors are orthogonal") {
  // alternating e1 / e2
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 8; ++i) {
    rows.push_back(i % 2 == 0 ? std::vector<float>{1, 0, 0} : std::vector<float>{0, 1, 0});
  }
  const auto db = testutil::db_from_rows(rows);
  const KeyframeSet kfs = select_similarity(db, 0.5);
  CHECK(kfs.indices.size() == db.size());
}

TEST_CASE("select_similarity matches a scalar simulation of the scan") {
  const double step = 2.0;  // degrees per frame
  const std::size_t n = 60;
  const auto db = drift_db(n, step);
  const double threshold_deg = 13.0;  // not a multiple of the step
  const double threshold = std::cos(threshold_deg * 3.14159265358979323846 / 180.0);

  // independent simulation on the angles themselves
  std::vector<std::size_t> expected{0};
  std::size_t last = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double gap_deg = step * static_cast<double>(i - last);
    if (std::cos(gap_deg * 3.14159265358979323846 / 180.0) < threshold) {
      expected.push_back(i);
      last = i;
    }
  }

  const KeyframeSet kfs = select_similarity(db, threshold);
  check_invariants(kfs, db);
  CHECK(kfs.indices == expected);
  CHECK(kfs.indices.size() == 9);  // 60 frames / 7-frame stride, starting at 0
}

TEST_CASE("select_distance selects every third frame at the paper's threshold scale") {
  auto db = constant_db(10);
  db.bind_geotags(line_tags(10, 5e-5, 0.0));
  const KeyframeSet kfs = select_distance(db, 0.0001);
  check_invariants(kfs, db);
  CHECK(kfs.indices == std::vector<std::size_t>{0, 3, 6, 9});
}

TEST_CASE("select_distance pads when the path never moves") {
  auto db = constant_db(8);
  db.bind_geotags(std::vector<GeoTag>(8, GeoTag{51.75, -1.26}));
  const KeyframeSet kfs = select_distance(db, 0.0001);
  CHECK(kfs.indices == std::vector<std::size_t>{0, 7});
}

TEST_CASE("select_distance without geotags points at other strategies") {
  const auto db = constant_db(8);
  CHECK_THROWS_WITH_AS(select_distance(db, 0.0001), doctest::Contains("strategy"), data_error);
}

TEST_CASE("select_fixed_rate lattice examples") {
  const auto db10 = testutil::random_unit_db(10, 3, 8);
  CHECK(select_fixed_rate(db10, 2).indices == std::vector<std::size_t>{2, 7});
  CHECK(select_fixed_rate(db10, 10).indices ==
        std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK_THROWS_AS(select_fixed_rate(db10, 1), std::invalid_argument);
  CHECK_THROWS_AS(select_fixed_rate(db10, 11), std::invalid_argument);
}

TEST_CASE("scan strategies are deterministic and threshold-monotone") {
  const auto db = drift_db(80, 1.5);
  const KeyframeSet a = select_similarity(db, 0.97);
  const KeyframeSet b = select_similarity(db, 0.97);
  CHECK(a.indices == b.indices);

  // lowering the similarity threshold never increases the count
  std::size_t prev = SIZE_MAX;
  for (double t : {0.995, 0.98, 0.9, 0.5}) {
    const std::size_t count = select_similarity(db, t).indices.size();
    CHECK(count <= prev);
    prev = count;
  }

  auto geo = constant_db(50);
  geo.bind_geotags(line_tags(50, 3e-5, 2e-5));
  // raising the distance threshold never increases the count
  prev = SIZE_MAX;
  for (double t : {5e-5, 1e-4, 3e-4, 1e-3}) {
    const std::size_t count = select_distance(geo, t).indices.size();
    CHECK(count <= prev);
    prev = count;
  }
}

TEST_CASE("ratio-targeted calibration lands near the requested count") {
  const auto db = drift_db(100, 1.0);
  const KeyframeSet sim = select_similarity_at_ratio(db, 0.2);
  check_invariants(sim, db);
  // a smooth drift lets the bisection hit the target exactly
  CHECK(sim.indices.size() == 20);

  auto geo = constant_db(100);
  geo.bind_geotags(line_tags(100, 4e-5, 0.0));
  const KeyframeSet dist = select_distance_at_ratio(geo, 0.25);
  check_invariants(dist, geo);
  CHECK(std::abs(static_cast<long long>(dist.indices.size()) - 25) <= 1);
}

TEST_CASE("keyframe JSON round trip") {
  const auto db = testutil::db_from_angles_deg({-1.0, 0.0, 1.0, 89.0, 90.0, 91.0});
  const KeyframeSet kfs = select_medoid(db, 0.33, {});
  const nlohmann::json j = to_json(kfs);
  CHECK(j.at("strategy") == "medoid");
  CHECK(j.at("indices").size() == 2);
  CHECK_FALSE(j.at("ams").is_null());

  const KeyframeSet back = keyframe_set_from_json(j);
  CHECK(back.indices == kfs.indices);
  CHECK(back.strategy == kfs.strategy);
  CHECK(back.ratio == kfs.ratio);
  CHECK(*back.ams == *kfs.ams);

  testutil::TempDir dir("kfs");
  save_keyframes(dir.path / "kf.json", kfs);
  const KeyframeSet loaded = load_keyframes(dir.path / "kf.json");
  CHECK(loaded.indices == kfs.indices);

  // ams on a non-medoid strategy is an invariant violation
  nlohmann::json broken = j;
  broken["strategy"] = "fixed_rate";
  CHECK_THROWS_AS(validate(keyframe_set_from_json(broken), db), data_error);

  // non-JSON file
  std::ofstream(dir.path / "bad.json") << "not json";
  CHECK_THROWS_AS(load_keyframes(dir.path / "bad.json"), data_error);
}

TEST_CASE("validate rejects malformed keyframe sets") {
  const auto db = testutil::random_unit_db(10, 3, 2);
  KeyframeSet kfs;
  kfs.strategy = Strategy::fixed_rate;
  kfs.indices = {3};
  CHECK_THROWS_AS(validate(kfs, db), data_error);  // fewer than 2
  kfs.indices = {3, 3};
  CHECK_THROWS_AS(validate(kfs, db), data_error);  // not strictly increasing
  kfs.indices = {3, 12};
  CHECK_THROWS_AS(validate(kfs, db), data_error);  // out of range
}

TEST_CASE("strategy names round trip") {
  for (Strategy s :
       {Strategy::medoid, Strategy::similarity, Strategy::distance, Strategy::fixed_rate}) {
    CHECK(strategy_from_string(to_string(s)) == s);
  }
  CHECK_THROWS_AS(strategy_from_string("kmeans"), std::invalid_argument);
}
