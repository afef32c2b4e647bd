#include <doctest.h>

#include <unistd.h>
#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <svct/svct.hpp>

#include "oracles.hpp"

using namespace svct;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("svct_io_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string scratch(const std::string& name) {
  return (scratch_dir() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  REQUIRE(out.good());
}

std::uint32_t be32(const std::string& s, std::size_t off) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(s[off])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + 3]));
}

}  // namespace

TEST_CASE("image files round-trip bit for bit") {
  RandomStream rng(91);
  const Image img = oracle::random_image(rng, 24, 32, 0.625);
  const std::string path = scratch("img_roundtrip.cvgi");
  write_image(path, img);

  const Image back = read_image(path);
  CHECK(back.height() == 24);
  CHECK(back.width() == 32);
  CHECK(back.pixel_size == img.pixel_size);
  CHECK(oracle::images_equal(img, back));
}

TEST_CASE("image reads are idempotent even for inexact pixel sizes") {
  RandomStream rng(92);
  const Image img = oracle::random_image(rng, 16, 16, 0.4);  // 0.4 is not a float
  const std::string p1 = scratch("img_idem1.cvgi");
  const std::string p2 = scratch("img_idem2.cvgi");
  write_image(p1, img);
  const Image r1 = read_image(p1);
  write_image(p2, r1);
  const Image r2 = read_image(p2);
  CHECK(r1.pixel_size == r2.pixel_size);
  CHECK(oracle::images_equal(r1, r2));
}

TEST_CASE("corrupt image files raise data errors, not crashes") {
  RandomStream rng(93);
  const Image img = oracle::random_image(rng, 16, 16, 0.5);
  const std::string path = scratch("img_corrupt.cvgi");
  write_image(path, img);
  const std::string good = slurp(path);

  const std::string truncated_path = scratch("img_truncated.cvgi");
  spit(truncated_path, good.substr(0, good.size() / 2));
  CHECK_THROWS_AS(read_image(truncated_path), DataError);

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  const std::string bad_magic_path = scratch("img_badmagic.cvgi");
  spit(bad_magic_path, bad_magic);
  CHECK_THROWS_AS(read_image(bad_magic_path), DataError);

  CHECK_THROWS_AS(read_image(scratch("does_not_exist.cvgi")), DataError);

  std::string zero_dims = good;
  zero_dims[4] = zero_dims[5] = zero_dims[6] = zero_dims[7] = '\0';
  const std::string zero_dims_path = scratch("img_zerodims.cvgi");
  spit(zero_dims_path, zero_dims);
  CHECK_THROWS_AS(read_image(zero_dims_path), DataError);
}

TEST_CASE("sinogram files round-trip with their geometry sidecar") {
  FanSpec fan;
  fan.num_detectors = 64;
  const FanGeometry geom = fan.with_views(12, 10.0);
  Sinogram sino(geom);
  RandomStream rng(94);
  for (int v = 0; v < sino.num_views(); ++v)
    for (int d = 0; d < sino.num_detectors(); ++d)
      sino.data(v, d) = static_cast<float>(rng.uniform(-1.0, 1.0));

  const std::string path = scratch("sino.cvgs");
  write_sinogram(path, sino);
  CHECK(fs::exists(sinogram_sidecar_path(path)));

  const Sinogram back = read_sinogram(path);
  CHECK(back.geometry.num_detectors == geom.num_detectors);
  CHECK(back.geometry.source_to_detector == geom.source_to_detector);
  CHECK(back.geometry.source_to_isocenter == geom.source_to_isocenter);
  CHECK(back.geometry.detector_spacing == geom.detector_spacing);
  REQUIRE(back.geometry.angles.size() == geom.angles.size());
  for (std::size_t i = 0; i < geom.angles.size(); ++i)
    CHECK(back.geometry.angles[i] == geom.angles[i]);
  CHECK((back.data == sino.data).all());
}

TEST_CASE("sinogram sidecar mismatches are data errors") {
  FanSpec fan;
  fan.num_detectors = 32;
  const FanGeometry geom = fan.with_views(6, 10.0);
  const Sinogram sino(geom);
  const std::string path = scratch("sino_tamper.cvgs");
  write_sinogram(path, sino);

  std::string sidecar = slurp(sinogram_sidecar_path(path));
  const std::string key = "\"num_detectors\": 32";
  const auto pos = sidecar.find(key);
  REQUIRE(pos != std::string::npos);
  sidecar.replace(pos, key.size(), "\"num_detectors\": 16");
  spit(sinogram_sidecar_path(path), sidecar);
  CHECK_THROWS_AS(read_sinogram(path), DataError);

  fs::remove(sinogram_sidecar_path(path));
  CHECK_THROWS_AS(read_sinogram(path), DataError);
}

TEST_CASE("restorer checkpoints round-trip through float storage") {
  RestorerState state = init_reference_restorer(17);
  const std::string path = scratch("restorer.cvgr");
  save_restorer(path, state);

  const RestorerState back = load_restorer(path);
  CHECK(back.arch == state.arch);
  REQUIRE(back.theta.size() == state.theta.size());
  for (Eigen::Index i = 0; i < state.theta.size(); ++i)
    CHECK(back.theta(i) ==
          static_cast<double>(static_cast<float>(state.theta(i))));

  // Corrupting the parameter count must be detected.
  std::string bytes = slurp(path);
  bytes[16] = static_cast<char>(bytes[16] + 1);
  const std::string tampered = scratch("restorer_tampered.cvgr");
  spit(tampered, bytes);
  CHECK_THROWS_AS(load_restorer(tampered), DataError);
}

TEST_CASE("png export writes a valid grayscale image with windowing") {
  Image img(9, 7, 1.0);
  img.data.setConstant(-1000.0f);
  img.data(4, 3) = 2000.0f;   // window top: byte 255
  img.data(0, 0) = 500.0f;    // mid-window: 127.5 rounds to 128
  const std::string path = scratch("export.png");
  write_png(path, img);

  const std::string bytes = slurp(path);
  REQUIRE(bytes.size() > 8);
  const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  for (int i = 0; i < 8; ++i)
    CHECK(static_cast<unsigned char>(bytes[i]) == sig[i]);

  // IHDR immediately follows the signature.
  CHECK(be32(bytes, 8) == 13);
  CHECK(bytes.substr(12, 4) == "IHDR");
  CHECK(be32(bytes, 16) == 7);   // width
  CHECK(be32(bytes, 20) == 9);   // height
  CHECK(static_cast<unsigned char>(bytes[24]) == 8);  // bit depth
  CHECK(static_cast<unsigned char>(bytes[25]) == 0);  // grayscale

  // Locate IDAT and inflate it.
  std::size_t off = 8;
  std::string idat;
  while (off + 8 <= bytes.size()) {
    const std::uint32_t len = be32(bytes, off);
    const std::string type = bytes.substr(off + 4, 4);
    if (type == "IDAT") idat += bytes.substr(off + 8, len);
    off += 12 + len;
  }
  REQUIRE(!idat.empty());

  std::vector<unsigned char> raw(9 * (7 + 1));
  uLongf raw_len = raw.size();
  REQUIRE(uncompress(raw.data(), &raw_len,
                     reinterpret_cast<const Bytef*>(idat.data()),
                     static_cast<uLong>(idat.size())) == Z_OK);
  REQUIRE(raw_len == raw.size());

  for (int r = 0; r < 9; ++r) CHECK(raw[r * 8] == 0);  // filter type 0
  CHECK(raw[0 * 8 + 1 + 0] == 128);                    // (0,0) mid-gray
  CHECK(raw[4 * 8 + 1 + 3] == 255);                    // (4,3) window top
  CHECK(raw[8 * 8 + 1 + 6] == 0);                      // untouched air pixel
}

TEST_CASE("writes never leave temp droppings next to their outputs") {
  RandomStream rng(95);
  const Image img = oracle::random_image(rng, 8, 8, 0.5);
  write_image(scratch("atomic.cvgi"), img);
  int leftovers = 0;
  for (const auto& entry : fs::directory_iterator(scratch_dir()))
    if (entry.path().string().find(".tmp") != std::string::npos) ++leftovers;
  CHECK(leftovers == 0);
}

TEST_CASE("csv provenance comments are stable hashes of the config text") {
  const std::string a = config_hash_comment("views=18\nseed=1\n");
  const std::string b = config_hash_comment("views=18\nseed=1\n");
  const std::string c = config_hash_comment("views=36\nseed=1\n");
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.rfind("# config-hash ", 0) == 0);
  CHECK(a.size() == std::string("# config-hash ").size() + 16);
  for (char ch : a.substr(14))
    CHECK(((ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'f')));
}
