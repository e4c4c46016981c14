#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flatspec/curves.hpp"
#include "flatspec/geodesy.hpp"
#include "flatspec/surface.hpp"

namespace flatspec {

// Surface file: canonical JSON object with keys `polygons`, `gluings`,
// `marked`. Polygon ids are strings; gluing slots are [polyId, edgeIdx].
SurfaceSpec parse_surface_json(const std::string& text);
SurfaceSpec load_surface_file(const std::string& path);

// Canonical serialization: sorted keys, 17-significant-digit decimals.
// Hashing this string keys the enumeration cache.
std::string canonical_surface_json(const SurfaceSpec& spec);
std::string sha256_hex(const std::string& data);

std::string format_double(double v);  // 17 significant digits

// CSV with columns idx,start,end,hx,hy,len; optional cache header line.
std::string connections_csv(const std::vector<SaddleConnection>& conns,
                            const std::string& surface_hash, double max_length,
                            bool with_header);

// Reads a cache file back; returns nullopt unless the header matches
// exactly.
std::optional<std::vector<SaddleConnection>> read_connections_cache(
    const std::string& path, const std::string& surface_hash, double max_length);
void write_connections_cache(const std::string& path,
                             const std::vector<SaddleConnection>& conns,
                             const std::string& surface_hash, double max_length);

// Curve file: {"type":"path","crossings":[[gluingId,t],...]} with optional
// per-crossing sense, or {"type":"chain","edges":[[scIdx,sense],...],
// "max_length":L} referencing an enumeration.
struct CurveFile {
  bool is_path = true;
  CurvePath path;
  std::vector<std::pair<int, int>> chain_edges;  // (sc index, sense +1/-1)
  std::optional<double> max_length;
};

CurveFile parse_curve_json(const std::string& text);
CurveFile load_curve_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace flatspec
