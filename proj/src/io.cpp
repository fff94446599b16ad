#include "slforce/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace slforce::io {

namespace {

struct PngCloser {
  std::FILE* f = nullptr;
  ~PngCloser() {
    if (f != nullptr) std::fclose(f);
  }
};

}  // namespace

void write_png(const std::string& path, const Rgb& image) {
  const int h = static_cast<int>(image.rows());
  const int w = static_cast<int>(image.cols());
  PngCloser file{std::fopen(path.c_str(), "wb")};
  if (file.f == nullptr) throw DataError("cannot open for writing: " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("png write failed: " + path);
  }
  png_init_io(png, file.f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w),
               static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(static_cast<size_t>(w) * 3);
  const auto quantize = [](double v) {
    return static_cast<png_byte>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      row[3 * static_cast<size_t>(c) + 0] = quantize(image.r(r, c));
      row[3 * static_cast<size_t>(c) + 1] = quantize(image.g(r, c));
      row[3 * static_cast<size_t>(c) + 2] = quantize(image.b(r, c));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Rgb read_png(const std::string& path) {
  PngCloser file{std::fopen(path.c_str(), "rb")};
  if (file.f == nullptr) throw DataError("cannot open for reading: " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, file.f) != 8 ||
      png_sig_cmp(header, 0, 8) != 0) {
    throw DataError("not a png file: " + path);
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("png read failed: " + path);
  }
  png_init_io(png, file.f);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  Rgb out(h, w);
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  for (int r = 0; r < h; ++r) {
    png_read_row(png, row.data(), nullptr);
    for (int c = 0; c < w; ++c) {
      out.r(r, c) = row[3 * static_cast<size_t>(c) + 0] / 255.0;
      out.g(r, c) = row[3 * static_cast<size_t>(c) + 1] / 255.0;
      out.b(r, c) = row[3 * static_cast<size_t>(c) + 2] / 255.0;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_pfm(const std::string& path, const Grey& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  const int h = static_cast<int>(values.rows());
  const int w = static_cast<int>(values.cols());
  out << "Pf\n" << w << " " << h << "\n-1.0\n";
  // PFM scanlines run bottom-up.
  std::vector<float> row(static_cast<size_t>(w));
  for (int r = h - 1; r >= 0; --r) {
    for (int c = 0; c < w; ++c) row[static_cast<size_t>(c)] = static_cast<float>(values(r, c));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(sizeof(float) * row.size()));
  }
  if (!out) throw DataError("pfm write failed: " + path);
}

void write_pfm(const std::string& path, const stereo::DisparityMap& map) {
  Grey values(map.d.rows(), map.d.cols());
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      values(r, c) = map.valid(static_cast<int>(r), static_cast<int>(c))
                         ? map.d(r, c)
                         : -1.0;
    }
  }
  write_pfm(path, values);
}

stereo::DisparityMap read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for reading: " + path);
  std::string magic;
  in >> magic;
  if (magic != "Pf") throw DataError("unsupported pfm (expect greyscale): " + path);
  int w = 0, h = 0;
  double scale = 0.0;
  in >> w >> h >> scale;
  in.get();  // single whitespace after the header
  if (w <= 0 || h <= 0) throw DataError("bad pfm dimensions: " + path);
  const bool little_endian = scale < 0.0;
  if (!little_endian) throw DataError("big-endian pfm unsupported: " + path);

  stereo::DisparityMap map;
  map.d.resize(h, w);
  map.tag.setConstant(h, w, static_cast<std::uint8_t>(stereo::MatchTag::Unmatched));
  std::vector<float> row(static_cast<size_t>(w));
  for (int r = h - 1; r >= 0; --r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(float) * row.size()));
    if (!in) throw DataError("truncated pfm: " + path);
    for (int c = 0; c < w; ++c) {
      const float v = row[static_cast<size_t>(c)];
      if (v < 0.0f) {
        map.d(r, c) = std::numeric_limits<double>::quiet_NaN();
      } else {
        map.d(r, c) = v;
        map.tag(r, c) = static_cast<std::uint8_t>(stereo::MatchTag::Verified);
      }
    }
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (Eigen::Index i = 0; i < map.d.size(); ++i) {
    const double v = map.d.data()[i];
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  map.d_min = std::isfinite(lo) ? static_cast<int>(std::floor(lo)) : 0;
  map.d_max = static_cast<int>(std::ceil(hi));
  return map;
}

void write_provenance_png(const std::string& path,
                          const stereo::DisparityMap& map) {
  const int h = map.height();
  const int w = map.width();
  Rgb img(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double cr = 0, cg = 0, cb = 0;
      switch (map.tag_at(r, c)) {
        case stereo::MatchTag::Verified: cg = 0.8; break;
        case stereo::MatchTag::Relocated: cr = 0.9; cg = 0.7; break;
        case stereo::MatchTag::Rejected: cr = 0.85; break;
        case stereo::MatchTag::Candidate: cb = 0.9; break;
        case stereo::MatchTag::Unmatched: break;
      }
      img.r(r, c) = cr;
      img.g(r, c) = cg;
      img.b(r, c) = cb;
    }
  }
  write_png(path, img);
}

void write_ply(const std::string& path, const geom::Cloud& cloud,
               const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "ply\nformat ascii 1.0\n";
  out << "comment slforce cloud v1";
  if (!comment.empty()) out << " " << comment;
  out << "\n";
  out << "element vertex " << cloud.rows() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  out << "end_header\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
    out << cloud(i, 0) << " " << cloud(i, 1) << " " << cloud(i, 2) << "\n";
  }
  if (!out) throw DataError("ply write failed: " + path);
}

geom::Cloud read_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open for reading: " + path);
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw DataError("not a ply file: " + path);
  long count = -1;
  bool ascii = false;
  while (std::getline(in, line)) {
    if (line.rfind("format ascii", 0) == 0) ascii = true;
    if (line.rfind("element vertex ", 0) == 0) {
      count = std::stol(line.substr(15));
    }
    if (line == "end_header") break;
  }
  if (!ascii || count < 0) throw DataError("unsupported ply layout: " + path);
  geom::Cloud cloud(count, 3);
  for (long i = 0; i < count; ++i) {
    if (!(in >> cloud(i, 0) >> cloud(i, 1) >> cloud(i, 2))) {
      throw DataError("truncated ply: " + path);
    }
  }
  return cloud;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string{};
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) cfg.values_[key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + v);
  }
}

int Config::get_int(const std::string& key) const {
  const double d = get_double(key);
  const int i = static_cast<int>(std::llround(d));
  if (std::fabs(d - i) > 1e-9) {
    throw ConfigError("config key '" + key + "' is not an integer");
  }
  return i;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(u);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a u64: " + v);
  }
}

bool Config::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "' is not a bool: " + v);
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}
double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
int Config::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}
std::uint64_t Config::get_u64(const std::string& key,
                              std::uint64_t fallback) const {
  return has(key) ? get_u64(key) : fallback;
}
bool Config::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

void Config::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return h;
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw DataError("cannot create directory: " + path);
}

}  // namespace slforce::io
