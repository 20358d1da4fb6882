#include "vpr/featurestore.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vpr {

namespace {

constexpr double kNormPassTol = 1e-5;  // |norm - 1| within this: keep as-is
constexpr double kNormFixTol = 1e-3;   // within this: renormalize; beyond: reject

constexpr char kMagic[4] = {'V', 'P', 'R', 'F'};
constexpr std::uint32_t kVersion = 1;

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>(v >> 8 & 0xff),
                              static_cast<unsigned char>(v >> 16 & 0xff),
                              static_cast<unsigned char>(v >> 24 & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw data_error(path.string() + ": " + what);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(const std::string& field, T& out) {
  const std::string t = trim(field);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

double manhattan_deg(const GeoTag& a, const GeoTag& b) {
  return std::abs(a.lat - b.lat) + std::abs(a.lon - b.lon);
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw data_error("feature dimension mismatch: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + " (incompatible databases)");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return dot;
}

double distance(std::span<const float> a, std::span<const float> b) {
  const double d = 1.0 - cosine_similarity(a, b);
  return std::clamp(d, 0.0, 2.0);
}

FrameDatabase::FrameDatabase(std::size_t dim, std::vector<float> data, std::string source_label)
    : dim_(dim), data_(std::move(data)), label_(std::move(source_label)) {
  if (dim_ == 0) throw data_error("feature dimension must be positive");
  if (data_.size() % dim_ != 0) {
    throw data_error("feature data size " + std::to_string(data_.size()) +
                     " is not a multiple of dim " + std::to_string(dim_));
  }
  const std::size_t n = data_.size() / dim_;
  for (std::size_t i = 0; i < n; ++i) {
    float* row = data_.data() + i * dim_;
    double sq = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) sq += static_cast<double>(row[j]) * row[j];
    const double norm = std::sqrt(sq);
    if (norm == 0.0) {
      throw data_error("frame " + std::to_string(i) + " is a zero vector");
    }
    const double dev = std::abs(norm - 1.0);
    if (dev <= kNormPassTol) continue;
    if (dev > kNormFixTol) {
      throw data_error("frame " + std::to_string(i) + " has norm " + std::to_string(norm) +
                       ", beyond the renormalization tolerance");
    }
    for (std::size_t j = 0; j < dim_; ++j) {
      row[j] = static_cast<float>(row[j] / norm);
    }
  }
}

std::span<const float> FrameDatabase::frame(std::size_t i) const {
  if (i >= size()) {
    throw std::out_of_range("frame index " + std::to_string(i) + " out of range (size " +
                            std::to_string(size()) + ")");
  }
  return {data_.data() + i * dim_, dim_};
}

const std::vector<GeoTag>& FrameDatabase::geotags() const {
  if (!geotags_) throw data_error("database '" + label_ + "' has no geotags bound");
  return *geotags_;
}

void FrameDatabase::bind_geotags(std::vector<GeoTag> tags) {
  if (tags.size() != size()) {
    throw data_error("geotag count " + std::to_string(tags.size()) + " does not match frame count " +
                     std::to_string(size()));
  }
  geotags_ = std::move(tags);
}

namespace {

FrameDatabase load_features_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");
  unsigned char header[16];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (in.gcount() != sizeof header) fail(path, "truncated header");
  if (std::memcmp(header, kMagic, 4) != 0) fail(path, "bad magic bytes, expected VPRF");
  const std::uint32_t version = read_u32_le(header + 4);
  if (version != kVersion) fail(path, "unsupported version " + std::to_string(version));
  const std::uint32_t count = read_u32_le(header + 8);
  const std::uint32_t dim = read_u32_le(header + 12);
  if (count == 0 || dim == 0) fail(path, "empty database (count or dim is zero)");

  const std::size_t n_floats = static_cast<std::size_t>(count) * dim;
  std::vector<unsigned char> raw(n_floats * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    fail(path, "payload shorter than count*dim floats (count mismatch)");
  }
  char extra;
  if (in.read(&extra, 1), in.gcount() != 0) fail(path, "trailing bytes after payload (count mismatch)");

  std::vector<float> data(n_floats);
  for (std::size_t i = 0; i < n_floats; ++i) {
    data[i] = std::bit_cast<float>(read_u32_le(raw.data() + i * 4));
  }
  return FrameDatabase(dim, std::move(data), path.stem().string());
}

FrameDatabase load_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");
  std::vector<float> data;
  std::size_t dim = 0;
  std::size_t row = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (dim == 0) {
      dim = fields.size();
    } else if (fields.size() != dim) {
      fail(path, "frame " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                     " values, expected " + std::to_string(dim));
    }
    for (const auto& f : fields) {
      float v;
      if (!parse_number(f, v)) {
        fail(path, "frame " + std::to_string(row) + ": non-numeric value '" + f + "'");
      }
      data.push_back(v);
    }
    ++row;
  }
  if (row == 0) fail(path, "no frames in file");
  return FrameDatabase(dim, std::move(data), path.stem().string());
}

}  // namespace

FrameDatabase load_features(const std::filesystem::path& path, FeatureFormat format) {
  return format == FeatureFormat::binary ? load_features_binary(path) : load_features_csv(path);
}

FrameDatabase load_features_auto(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");
  char magic[4] = {};
  in.read(magic, 4);
  const bool binary = in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0;
  return load_features(path, binary ? FeatureFormat::binary : FeatureFormat::csv);
}

void save_features(const std::filesystem::path& path, const FrameDatabase& db, FeatureFormat format) {
  std::ofstream out(path, format == FeatureFormat::binary ? std::ios::binary : std::ios::out);
  if (!out) fail(path, "cannot open file for writing");
  if (format == FeatureFormat::binary) {
    out.write(kMagic, 4);
    write_u32_le(out, kVersion);
    write_u32_le(out, static_cast<std::uint32_t>(db.size()));
    write_u32_le(out, static_cast<std::uint32_t>(db.dim()));
    for (float v : db.flat()) {
      write_u32_le(out, std::bit_cast<std::uint32_t>(v));
    }
  } else {
    char buf[64];
    for (std::size_t i = 0; i < db.size(); ++i) {
      const auto f = db.frame(i);
      for (std::size_t j = 0; j < db.dim(); ++j) {
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(f[j]));
        out << (j ? "," : "") << buf;
      }
      out << '\n';
    }
  }
  if (!out) fail(path, "write failed");
}

std::vector<GeoTag> load_geotags(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "frame,lat,lon") {
    fail(path, "expected header 'frame,lat,lon'");
  }
  std::vector<std::pair<std::size_t, GeoTag>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    std::size_t idx;
    GeoTag tag;
    if (fields.size() != 3 || !parse_number(fields[0], idx) || !parse_number(fields[1], tag.lat) ||
        !parse_number(fields[2], tag.lon)) {
      fail(path, "line " + std::to_string(lineno) + ": expected 'frame,lat,lon' numbers");
    }
    rows.emplace_back(idx, tag);
  }
  if (rows.empty()) fail(path, "no geotag rows");
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<GeoTag> tags;
  tags.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != i) {
      fail(path, rows[i].first < i || (i > 0 && rows[i].first == rows[i - 1].first)
                     ? "duplicate frame index " + std::to_string(rows[i].first)
                     : "missing frame index " + std::to_string(i));
    }
    tags.push_back(rows[i].second);
  }
  return tags;
}

void save_geotags(const std::filesystem::path& path, std::span<const GeoTag> tags) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open file for writing");
  out << "frame,lat,lon\n";
  char buf[96];
  for (std::size_t i = 0; i < tags.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.10f,%.10f", i, tags[i].lat, tags[i].lon);
    out << buf << '\n';
  }
  if (!out) fail(path, "write failed");
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");
  std::string line;
  if (!std::getline(in, line)) fail(path, "empty file");
  const std::string header = trim(line);
  GroundTruth gt;
  if (header == "query,db") {
    gt.mode = GroundTruth::Mode::frame;
  } else if (header == "query,lat,lon") {
    gt.mode = GroundTruth::Mode::gps;
  } else {
    fail(path, "expected header 'query,db' or 'query,lat,lon'");
  }
  std::vector<std::pair<std::size_t, std::pair<std::size_t, GeoTag>>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    std::size_t q;
    std::size_t dbidx = 0;
    GeoTag tag;
    bool ok = false;
    if (gt.mode == GroundTruth::Mode::frame) {
      ok = fields.size() == 2 && parse_number(fields[0], q) && parse_number(fields[1], dbidx);
    } else {
      ok = fields.size() == 3 && parse_number(fields[0], q) && parse_number(fields[1], tag.lat) &&
           parse_number(fields[2], tag.lon);
    }
    if (!ok) fail(path, "line " + std::to_string(lineno) + ": malformed row");
    rows.push_back({q, {dbidx, tag}});
  }
  if (rows.empty()) fail(path, "no ground-truth rows");
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != i) {
      fail(path, "query indices must cover 0.." + std::to_string(rows.size() - 1) +
                     " exactly once (problem near index " + std::to_string(rows[i].first) + ")");
    }
    if (gt.mode == GroundTruth::Mode::frame) {
      gt.frame_truth.push_back(rows[i].second.first);
    } else {
      gt.gps_truth.push_back(rows[i].second.second);
    }
  }
  return gt;
}

void save_ground_truth(const std::filesystem::path& path, const GroundTruth& gt) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open file for writing");
  char buf[96];
  if (gt.mode == GroundTruth::Mode::frame) {
    out << "query,db\n";
    for (std::size_t i = 0; i < gt.frame_truth.size(); ++i) {
      out << i << ',' << gt.frame_truth[i] << '\n';
    }
  } else {
    out << "query,lat,lon\n";
    for (std::size_t i = 0; i < gt.gps_truth.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.10f,%.10f", i, gt.gps_truth[i].lat, gt.gps_truth[i].lon);
      out << buf << '\n';
    }
  }
  if (!out) fail(path, "write failed");
}

}  // namespace vpr
