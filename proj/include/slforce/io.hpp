#pragma once

#include "slforce/core.hpp"
#include "slforce/geometry.hpp"
#include "slforce/stereo.hpp"

#include <map>
#include <string>
#include <vector>

namespace slforce::io {

// 8-bit RGB PNG; channel value = round(255 * v) on write, v = byte / 255
// on read.
void write_png(const std::string& path, const Rgb& image);
Rgb read_png(const std::string& path);

// Little-endian single-channel PFM ("Pf", scale -1.0, bottom-up rows).
// Invalid disparities are stored as -1.0.
void write_pfm(const std::string& path, const stereo::DisparityMap& map);
void write_pfm(const std::string& path, const Grey& values);
stereo::DisparityMap read_pfm(const std::string& path);

// Provenance tags as a color-coded PNG (one color per tag).
void write_provenance_png(const std::string& path,
                          const stereo::DisparityMap& map);

// ASCII PLY with x y z vertex elements in meters.
void write_ply(const std::string& path, const geom::Cloud& cloud,
               const std::string& comment = {});
geom::Cloud read_ply(const std::string& path);

// Flat `key = value` text config; '#' starts a comment. Lookups of missing
// keys throw ConfigError naming the key.
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value);
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// FNV-1a over a file's bytes; provenance stamp for reports.
std::uint64_t hash_file(const std::string& path);

void ensure_directory(const std::string& path);

}  // namespace slforce::io
