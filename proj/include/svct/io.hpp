#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "svct/common.hpp"
#include "svct/image.hpp"
#include "svct/restorer.hpp"
#include "svct/sinogram.hpp"

namespace svct {

namespace detail {

inline void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_f32(std::string& s, float f) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, &f, sizeof(bits));
  put_u32(s, bits);
}

/// Bounds-checked little-endian reader over an in-memory file.
struct ByteReader {
  const std::string& bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (pos + n > bytes.size())
      throw DataError(std::string("truncated file: ") + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    pos += 4;
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
  }
  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float f = 0.0f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
  }
  void expect_magic(const char (&magic)[5]) {
    need(4, "magic");
    if (bytes.compare(pos, 4, magic, 4) != 0)
      throw DataError(std::string("bad magic, expected ") + magic);
    pos += 4;
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void check_dims(std::uint32_t w, std::uint32_t h) {
  constexpr std::uint64_t kMaxPixels = 1ull << 28;
  if (w == 0 || h == 0)
    throw DataError("empty image dimensions in header");
  if (static_cast<std::uint64_t>(w) * h > kMaxPixels)
    throw DataError("image dimension overflow");
}

}  // namespace detail

/// Writes bytes to a temp file in the target directory, then renames into
/// place, so readers never observe partial files.
inline void write_file_atomic(const std::string& path,
                              const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw DataError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
      throw DataError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw DataError("cannot move " + tmp + " to " + path + ": " + ec.message());
}

// --- Image raw format: "CVGI", u32 width, u32 height, f32 pixel_size, then
// --- width*height little-endian f32 values in row-major order.

inline void write_image(const std::string& path, const Image& img) {
  img.validate();
  std::string s;
  s.reserve(16 + 4 * static_cast<std::size_t>(img.width()) * img.height());
  s.append("CVGI", 4);
  detail::put_u32(s, static_cast<std::uint32_t>(img.width()));
  detail::put_u32(s, static_cast<std::uint32_t>(img.height()));
  detail::put_f32(s, static_cast<float>(img.pixel_size));
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c)
      detail::put_f32(s, img.data(r, c));
  write_file_atomic(path, s);
}

inline Image read_image(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  detail::ByteReader rd{bytes};
  rd.expect_magic("CVGI");
  const std::uint32_t w = rd.u32("width");
  const std::uint32_t h = rd.u32("height");
  detail::check_dims(w, h);
  const float pixel_size = rd.f32("pixel_size");
  if (!(pixel_size > 0.0f))
    throw DataError("non-positive pixel size in header");
  rd.need(4ull * w * h, "pixel data");
  Image img(static_cast<int>(h), static_cast<int>(w),
            static_cast<double>(pixel_size));
  for (std::uint32_t r = 0; r < h; ++r)
    for (std::uint32_t c = 0; c < w; ++c)
      img.data(static_cast<int>(r), static_cast<int>(c)) = rd.f32("pixel data");
  img.validate();
  return img;
}

// --- Sinogram raw format: "CVGS", u32 views, u32 detectors, f32
// --- detector_spacing, data; full geometry in a JSON sidecar at
// --- <path>.geom.json.

inline std::string sinogram_sidecar_path(const std::string& path) {
  return path + ".geom.json";
}

inline void write_sinogram(const std::string& path, const Sinogram& sino) {
  sino.validate();
  std::string s;
  s.reserve(16 + 4 * static_cast<std::size_t>(sino.num_views()) *
                     sino.num_detectors());
  s.append("CVGS", 4);
  detail::put_u32(s, static_cast<std::uint32_t>(sino.num_views()));
  detail::put_u32(s, static_cast<std::uint32_t>(sino.num_detectors()));
  detail::put_f32(s, static_cast<float>(sino.geometry.detector_spacing));
  for (int v = 0; v < sino.num_views(); ++v)
    for (int d = 0; d < sino.num_detectors(); ++d)
      detail::put_f32(s, sino.data(v, d));
  write_file_atomic(path, s);

  nlohmann::json j;
  j["source_to_detector"] = sino.geometry.source_to_detector;
  j["source_to_isocenter"] = sino.geometry.source_to_isocenter;
  j["num_detectors"] = sino.geometry.num_detectors;
  j["detector_spacing"] = sino.geometry.detector_spacing;
  j["angles"] = sino.geometry.angles;
  write_file_atomic(sinogram_sidecar_path(path), j.dump(2) + "\n");
}

inline Sinogram read_sinogram(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  detail::ByteReader rd{bytes};
  rd.expect_magic("CVGS");
  const std::uint32_t views = rd.u32("views");
  const std::uint32_t dets = rd.u32("detectors");
  detail::check_dims(dets, views);
  rd.f32("detector_spacing");  // informational; the sidecar is authoritative
  rd.need(4ull * views * dets, "sinogram data");

  FanGeometry geom;
  try {
    const nlohmann::json j =
        nlohmann::json::parse(detail::read_file(sinogram_sidecar_path(path)));
    geom.source_to_detector = j.at("source_to_detector").get<double>();
    geom.source_to_isocenter = j.at("source_to_isocenter").get<double>();
    geom.num_detectors = j.at("num_detectors").get<int>();
    geom.detector_spacing = j.at("detector_spacing").get<double>();
    geom.angles = j.at("angles").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad geometry sidecar: ") + e.what());
  }
  if (geom.num_detectors != static_cast<int>(dets) ||
      geom.angles.size() != views)
    throw DataError("geometry sidecar does not match sinogram header");

  Sinogram sino(geom);
  for (std::uint32_t v = 0; v < views; ++v)
    for (std::uint32_t d = 0; d < dets; ++d)
      sino.data(static_cast<int>(v), static_cast<int>(d)) = rd.f32("sinogram data");
  sino.validate();
  return sino;
}

// --- Restorer checkpoint: "CVGR", u32 channels, u32 levels, u32 kernel,
// --- u32 param_count, then f32 parameters.

inline void save_restorer(const std::string& path, const RestorerState& state) {
  state.validate();
  std::string s;
  s.reserve(20 + 4 * static_cast<std::size_t>(state.theta.size()));
  s.append("CVGR", 4);
  detail::put_u32(s, static_cast<std::uint32_t>(state.arch.channels));
  detail::put_u32(s, static_cast<std::uint32_t>(state.arch.levels));
  detail::put_u32(s, static_cast<std::uint32_t>(state.arch.kernel));
  detail::put_u32(s, static_cast<std::uint32_t>(state.theta.size()));
  for (Eigen::Index i = 0; i < state.theta.size(); ++i)
    detail::put_f32(s, static_cast<float>(state.theta(i)));
  write_file_atomic(path, s);
}

inline RestorerState load_restorer(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  detail::ByteReader rd{bytes};
  rd.expect_magic("CVGR");
  RestorerState state;
  state.arch.channels = static_cast<int>(rd.u32("channels"));
  state.arch.levels = static_cast<int>(rd.u32("levels"));
  state.arch.kernel = static_cast<int>(rd.u32("kernel"));
  const std::uint32_t count = rd.u32("param count");
  state.arch.validate();
  if (count != static_cast<std::uint32_t>(state.arch.param_count()))
    throw DataError("checkpoint parameter count does not match architecture");
  rd.need(4ull * count, "parameters");
  state.theta = Eigen::VectorXd(count);
  for (std::uint32_t i = 0; i < count; ++i)
    state.theta(static_cast<Eigen::Index>(i)) = rd.f32("parameters");
  state.validate();
  return state;
}

// --- Lossy 8-bit grayscale PNG export with an HU display window.

namespace detail {

inline void put_be32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

inline void put_png_chunk(std::string& s, const char type[4],
                          const std::string& data) {
  put_be32(s, static_cast<std::uint32_t>(data.size()));
  const std::size_t crc_start = s.size();
  s.append(type, 4);
  s.append(data);
  const auto* p = reinterpret_cast<const Bytef*>(s.data() + crc_start);
  const uLong crc =
      crc32(0L, p, static_cast<uInt>(s.size() - crc_start));
  put_be32(s, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

inline void write_png(const std::string& path, const Image& img,
                      double window_lo = kHuWindowLo,
                      double window_hi = kHuWindowHi) {
  img.validate();
  if (!(window_hi > window_lo))
    throw ConfigError("png: window_hi must exceed window_lo");
  const int w = img.width();
  const int h = img.height();

  std::string raw;
  raw.reserve(static_cast<std::size_t>(h) * (w + 1));
  for (int r = 0; r < h; ++r) {
    raw.push_back('\0');  // filter type 0 (none)
    for (int c = 0; c < w; ++c) {
      const double z =
          (static_cast<double>(img.data(r, c)) - window_lo) / (window_hi - window_lo);
      const double clamped = z < 0.0 ? 0.0 : (z > 1.0 ? 1.0 : z);
      raw.push_back(static_cast<char>(
          static_cast<unsigned char>(std::lround(clamped * 255.0))));
    }
  }

  uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(comp_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &comp_size,
                reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw NumericError("png: deflate failed");
  compressed.resize(comp_size);

  std::string s("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(w));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(h));
  ihdr.push_back(8);     // bit depth
  ihdr.push_back(0);     // grayscale
  ihdr.push_back(0);     // compression
  ihdr.push_back(0);     // filter
  ihdr.push_back(0);     // no interlace
  detail::put_png_chunk(s, "IHDR", ihdr);
  detail::put_png_chunk(s, "IDAT", compressed);
  detail::put_png_chunk(s, "IEND", std::string());
  write_file_atomic(path, s);
}

/// Provenance line embedded in every CSV the toolkit emits.
inline std::string config_hash_comment(const std::string& config_text) {
  std::ostringstream os;
  os << "# config-hash " << std::hex << std::setw(16) << std::setfill('0')
     << fnv1a64(config_text);
  return os.str();
}

}  // namespace svct
