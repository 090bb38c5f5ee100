#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fieldnav/closedloop.hpp"
#include "fieldnav/conductivity.hpp"
#include "fieldnav/grid.hpp"
#include "fieldnav/guidance.hpp"
#include "fieldnav/planner.hpp"
#include "fieldnav/simworld.hpp"
#include "fieldnav/solver.hpp"

namespace fieldnav {

// MXF1 layout, all little-endian:
//   "MXF1" | u16 version=1 | u8 kind | u32 dims[3] | f64 resolution | f64 origin[3] | payload
// Payload is lexicographic with x slowest and z fastest: one u8 per voxel for
// occupancy, one f64 per voxel for scalars, three f64 per voxel for gradients.
enum class FieldKind : std::uint8_t { Occupancy = 0, Conductivity = 1, Field = 2, Gradient = 3 };

inline constexpr std::size_t kMxf1HeaderBytes = 51;

struct FieldFile {
  FieldKind kind = FieldKind::Field;
  GridSpec spec;
  std::vector<std::uint8_t> occupancy;  ///< kind == Occupancy
  std::vector<double> values;           ///< 1 or 3 per voxel otherwise

  std::size_t components() const { return kind == FieldKind::Gradient ? 3 : 1; }
};

std::vector<std::uint8_t> encode_mxf1(const FieldFile& file);
/// Rejects bad magic, unknown version or kind, invalid dims and payload length
/// mismatches with a FormatError naming the offending field.
FieldFile decode_mxf1(std::span<const std::uint8_t> bytes);

FieldFile to_file(const OccupancyGrid& grid);
FieldFile to_file(const ConductivityGrid& grid);
FieldFile to_file(const FieldGrid& grid);
FieldFile to_file(const GradientField& grid);

OccupancyGrid occupancy_from(const FieldFile& file);
ConductivityGrid conductivity_from(const FieldFile& file);
/// Goal is set to the first voxel holding the maximum value.
FieldGrid field_from(const FieldFile& file);
GradientField gradient_from(const FieldFile& file);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
/// Writes to a sibling temporary and renames it into place.
void write_bytes_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

void write_mxf1(const std::filesystem::path& path, const FieldFile& file);
FieldFile read_mxf1(const std::filesystem::path& path);

/// u64 count followed by count (x, y, z) f64 triples.
std::vector<std::uint8_t> encode_points(std::span<const WorldPoint> points);
std::vector<WorldPoint> decode_points(std::span<const std::uint8_t> bytes);

nlohmann::json world_to_json(const World& world);
World world_from_json(const nlohmann::json& j);

nlohmann::json path_to_json(const Path& path, bool decimate = true);
/// CSV with columns step,x_m,y_m,z_m.
std::string path_to_csv(const Path& path, bool decimate = true);

nlohmann::json trial_to_json(const TrialReport& report, bool include_timing = true);

/// 64-bit FNV-1a, used for determinism checks.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a(const std::string& text);

}  // namespace fieldnav
