#include "fieldnav/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <unistd.h>

#include "fieldnav/config.hpp"
#include "fieldnav/error.hpp"

namespace fieldnav {

using nlohmann::json;

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

 private:
  void put(std::uint64_t v, int n) {
    for (int b = 0; b < n; ++b) out_.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8(const char* field) { return static_cast<std::uint8_t>(get(1, field)); }
  std::uint16_t u16(const char* field) { return static_cast<std::uint16_t>(get(2, field)); }
  std::uint32_t u32(const char* field) { return static_cast<std::uint32_t>(get(4, field)); }
  std::uint64_t u64(const char* field) { return get(8, field); }
  double f64(const char* field) { return std::bit_cast<double>(get(8, field)); }
  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  std::uint64_t get(int n, const char* field) {
    if (remaining() < static_cast<std::size_t>(n)) {
      throw Error(ErrorCode::FormatError, std::string("truncated input while reading '") + field + "'");
    }
    std::uint64_t v = 0;
    for (int b = 0; b < n; ++b) v |= static_cast<std::uint64_t>(in_[pos_ + b]) << (8 * b);
    pos_ += n;
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_mxf1(const FieldFile& file) {
  const std::size_t n = file.spec.voxel_count();
  if (file.kind == FieldKind::Occupancy ? file.occupancy.size() != n : file.values.size() != n * file.components()) {
    throw Error(ErrorCode::DimMismatch, "MXF1 payload does not match dims");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kMxf1HeaderBytes + n * 8 * file.components());
  Writer w(out);
  for (char c : std::string_view("MXF1")) w.u8(static_cast<std::uint8_t>(c));
  w.u16(1);
  w.u8(static_cast<std::uint8_t>(file.kind));
  for (int a = 0; a < 3; ++a) w.u32(static_cast<std::uint32_t>(file.spec.dims[a]));
  w.f64(file.spec.resolution);
  for (int a = 0; a < 3; ++a) w.f64(file.spec.origin[a]);
  if (file.kind == FieldKind::Occupancy) {
    out.insert(out.end(), file.occupancy.begin(), file.occupancy.end());
  } else {
    for (double v : file.values) w.f64(v);
  }
  return out;
}

FieldFile decode_mxf1(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8("magic"));
  if (std::string_view(magic, 4) != "MXF1") throw Error(ErrorCode::FormatError, "bad 'magic': expected MXF1");
  const auto version = r.u16("version");
  if (version != 1) throw Error(ErrorCode::FormatError, "unsupported 'version' " + std::to_string(version));
  const auto kind = r.u8("kind");
  if (kind > 3) throw Error(ErrorCode::FormatError, "unknown 'kind' " + std::to_string(kind));
  FieldFile f;
  f.kind = static_cast<FieldKind>(kind);
  for (int a = 0; a < 3; ++a) {
    const auto d = r.u32("dims");
    if (d < 3 || d > 4096) throw Error(ErrorCode::FormatError, "invalid 'dims' entry " + std::to_string(d));
    f.spec.dims[a] = static_cast<int>(d);
  }
  f.spec.resolution = r.f64("resolution");
  if (!(f.spec.resolution > 0.0) || !std::isfinite(f.spec.resolution)) {
    throw Error(ErrorCode::FormatError, "invalid 'resolution'");
  }
  for (int a = 0; a < 3; ++a) f.spec.origin[a] = r.f64("origin");
  const std::size_t n = f.spec.voxel_count();
  const std::size_t expected = f.kind == FieldKind::Occupancy ? n : n * 8 * f.components();
  if (r.remaining() != expected) {
    throw Error(ErrorCode::FormatError, "'payload' length " + std::to_string(r.remaining()) + " != expected " +
                                            std::to_string(expected));
  }
  if (f.kind == FieldKind::Occupancy) {
    f.occupancy.assign(bytes.begin() + static_cast<std::ptrdiff_t>(r.position()), bytes.end());
    for (auto v : f.occupancy) {
      if (v > 1) throw Error(ErrorCode::FormatError, "'payload' occupancy byte not 0/1");
    }
  } else {
    f.values.resize(n * f.components());
    for (auto& v : f.values) v = r.f64("payload");
  }
  return f;
}

FieldFile to_file(const OccupancyGrid& grid) {
  return {FieldKind::Occupancy, grid.spec(), {grid.cells().begin(), grid.cells().end()}, {}};
}
FieldFile to_file(const ConductivityGrid& grid) { return {FieldKind::Conductivity, grid.spec, {}, grid.sigma}; }
FieldFile to_file(const FieldGrid& grid) { return {FieldKind::Field, grid.spec, {}, grid.phi}; }
FieldFile to_file(const GradientField& grid) {
  FieldFile f{FieldKind::Gradient, grid.spec, {}, {}};
  f.values.reserve(grid.g.size() * 3);
  for (const auto& v : grid.g) {
    f.values.push_back(v.x);
    f.values.push_back(v.y);
    f.values.push_back(v.z);
  }
  return f;
}

namespace {

void expect_kind(const FieldFile& f, FieldKind kind, const char* what) {
  if (f.kind != kind) throw Error(ErrorCode::FormatError, std::string("'kind' mismatch: expected ") + what);
}

}  // namespace

OccupancyGrid occupancy_from(const FieldFile& f) {
  expect_kind(f, FieldKind::Occupancy, "occupancy");
  return OccupancyGrid(f.spec, f.occupancy);
}

ConductivityGrid conductivity_from(const FieldFile& f) {
  expect_kind(f, FieldKind::Conductivity, "conductivity");
  return {f.spec, f.values};
}

FieldGrid field_from(const FieldFile& f) {
  expect_kind(f, FieldKind::Field, "field");
  FieldGrid g;
  g.spec = f.spec;
  g.phi = f.values;
  g.converged = true;
  std::size_t best = 0;
  for (std::size_t v = 1; v < g.phi.size(); ++v) {
    if (g.phi[v] > g.phi[best]) best = v;
  }
  g.goal = f.spec.unflat(best);
  return g;
}

GradientField gradient_from(const FieldFile& f) {
  expect_kind(f, FieldKind::Gradient, "gradient");
  GradientField g;
  g.spec = f.spec;
  const std::size_t n = f.spec.voxel_count();
  g.g.resize(n);
  g.free.assign(n, 1);
  for (std::size_t v = 0; v < n; ++v) g.g[v] = {f.values[3 * v], f.values[3 * v + 1], f.values[3 * v + 2]};
  return g;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_bytes_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void write_mxf1(const std::filesystem::path& path, const FieldFile& file) { write_bytes_atomic(path, encode_mxf1(file)); }

FieldFile read_mxf1(const std::filesystem::path& path) { return decode_mxf1(read_bytes(path)); }

std::vector<std::uint8_t> encode_points(std::span<const WorldPoint> points) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + points.size() * 24);
  Writer w(out);
  w.u64(points.size());
  for (const auto& p : points) {
    w.f64(p.x);
    w.f64(p.y);
    w.f64(p.z);
  }
  return out;
}

std::vector<WorldPoint> decode_points(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto count = r.u64("count");
  if (r.remaining() != count * 24) throw Error(ErrorCode::FormatError, "point payload length does not match 'count'");
  std::vector<WorldPoint> pts(count);
  for (auto& p : pts) {
    p.x = r.f64("x");
    p.y = r.f64("y");
    p.z = r.f64("z");
  }
  return pts;
}

namespace {

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

}  // namespace

json world_to_json(const World& world) {
  json boxes = json::array();
  for (const auto& b : world.boxes) boxes.push_back({{"center", vec_json(b.center)}, {"size", vec_json(b.size)}});
  return {{"seed", world.seed},
          {"params", world.params},
          {"ground_height", world.ground_height},
          {"half_extent", world.half_extent},
          {"boxes", boxes}};
}

World world_from_json(const json& j) {
  try {
    World w;
    j.at("seed").get_to(w.seed);
    w.params = j.at("params").get<WorldGenParams>();
    j.at("ground_height").get_to(w.ground_height);
    j.at("half_extent").get_to(w.half_extent);
    for (const auto& b : j.at("boxes")) w.boxes.push_back({vec_from(b.at("center")), vec_from(b.at("size"))});
    return w;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad world document: ") + e.what());
  }
}

json path_to_json(const Path& path, bool decimate) {
  json pts = json::array();
  for (const auto& p : decimate ? path.decimated() : path.waypoints) pts.push_back(vec_json(p));
  return {{"length_voxels", path.length_voxels},
          {"length_m", path.length_meters},
          {"waypoint_count", path.waypoints.size()},
          {"waypoints", pts}};
}

std::string path_to_csv(const Path& path, bool decimate) {
  std::ostringstream os;
  os << "step,x_m,y_m,z_m\n" << std::setprecision(17);
  const auto pts = decimate ? path.decimated() : path.waypoints;
  for (std::size_t i = 0; i < pts.size(); ++i) os << i << ',' << pts[i].x << ',' << pts[i].y << ',' << pts[i].z << '\n';
  return os.str();
}

json trial_to_json(const TrialReport& r, bool include_timing) {
  json log = json::array();
  for (const auto& e : r.log) {
    json item{{"points", e.points}, {"occupied_voxels", e.occupied_voxels}, {"dilation", e.dilation}};
    if (include_timing) item["plan_s"] = e.plan_s;
    log.push_back(item);
  }
  json j{{"success", r.success},
         {"failure", r.failure},
         {"detail", r.detail},
         {"planner", r.planner},
         {"seed", r.seed},
         {"start", vec_json(r.start)},
         {"goal", vec_json(r.goal)},
         {"flown_m", r.flown_path.length_meters},
         {"flown_path", path_to_json(r.flown_path, false)},
         {"planning_iterations", r.planning_iterations},
         {"iterations", log}};
  if (include_timing) {
    j["plan_runtime_s"] = r.plan_runtime_s;
    j["mean_plan_s"] = r.mean_plan_s();
  }
  return j;
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(const std::string& text) {
  return fnv1a(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace fieldnav
