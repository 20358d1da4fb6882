#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vpr {

// Malformed or inconsistent input data: bad files, mismatched bindings,
// incompatible databases. The CLI maps this to exit code 2.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GeoTag {
  double lat = 0.0;
  double lon = 0.0;
};

// Manhattan distance in raw degrees, |dlat| + |dlon|.
double manhattan_deg(const GeoTag& a, const GeoTag& b);

// One unit-normalized embedding. Stored as float32 to match the on-disk
// format; all arithmetic happens in double.
struct FeatureVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
  std::span<const float> span() const { return values; }
};

// Raw dot product of two unit vectors. Throws data_error on dimension
// mismatch. Symmetric bit-for-bit: the accumulation order does not depend
// on operand order.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

// 1 - cos(a, b), clamped to [0, 2] against rounding.
double distance(std::span<const float> a, std::span<const float> b);

// Temporally ordered sequence of unit feature vectors with optional
// geotags. Immutable after construction (geotag binding aside), so
// concurrent reads are safe.
class FrameDatabase {
 public:
  FrameDatabase() = default;

  // Takes row-major count*dim floats. Enforces the unit-norm invariant:
  // norms within 1e-5 of 1 pass untouched, deviations up to 1e-3 are
  // renormalized, anything worse (including zero vectors) is rejected
  // with the frame index in the message.
  FrameDatabase(std::size_t dim, std::vector<float> data, std::string source_label = {});

  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> frame(std::size_t i) const;
  std::span<const float> flat() const { return data_; }

  bool has_geotags() const { return geotags_.has_value(); }
  const std::vector<GeoTag>& geotags() const;
  // One tag per frame; anything else is a data_error.
  void bind_geotags(std::vector<GeoTag> tags);

  const std::string& source_label() const { return label_; }

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::optional<std::vector<GeoTag>> geotags_;
  std::string label_;
};

struct GroundTruth {
  enum class Mode { frame, gps };

  Mode mode = Mode::frame;
  std::vector<std::size_t> frame_truth;  // frame mode: query index -> db frame
  std::vector<GeoTag> gps_truth;         // gps mode: query index -> true location

  std::size_t size() const {
    return mode == Mode::frame ? frame_truth.size() : gps_truth.size();
  }
};

enum class FeatureFormat { binary, csv };

// Binary layout: magic "VPRF", u32 version = 1, u32 count, u32 dim, then
// count*dim little-endian float32, row-major. CSV: one frame per line,
// dim comma-separated decimals.
FrameDatabase load_features(const std::filesystem::path& path, FeatureFormat format);
// Sniffs the magic bytes to pick the format.
FrameDatabase load_features_auto(const std::filesystem::path& path);
void save_features(const std::filesystem::path& path, const FrameDatabase& db,
                   FeatureFormat format = FeatureFormat::binary);

// Geotag CSV: header "frame,lat,lon", one row per frame, every index
// exactly once (any order).
std::vector<GeoTag> load_geotags(const std::filesystem::path& path);
void save_geotags(const std::filesystem::path& path, std::span<const GeoTag> tags);

// Ground-truth CSV: header "query,db" (frame mode) or "query,lat,lon"
// (GPS mode), one row per query.
GroundTruth load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const std::filesystem::path& path, const GroundTruth& gt);

}  // namespace vpr
