#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <svct/svct.hpp>

#include "oracles.hpp"

using namespace svct;
namespace fs = std::filesystem;

namespace {

const char* cli_binary() { return std::getenv("SVCT_CLI"); }

fs::path cli_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("svct_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string at(const std::string& name) { return (cli_dir() / name).string(); }

int run_cli(const std::string& args) {
  const std::string log = at("last_run.log");
  const std::string cmd =
      std::string(cli_binary()) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

// Small geometry shared by every CLI invocation below.
const char* kGeo = "--detectors 128";

}  // namespace

#define REQUIRE_CLI() \
  do {                \
    if (!cli_binary()) { MESSAGE("SVCT_CLI not set; skipping"); return; } \
  } while (0)

TEST_CASE("cli phantom output matches the library generator") {
  REQUIRE_CLI();
  REQUIRE(run_cli("phantom --kind shepp --size 48 --out " + at("p.cvgi")) == 0);
  const Image img = read_image(at("p.cvgi"));
  CHECK(oracle::images_equal(img, shepp_logan(48, 48)));
  CHECK(fs::exists(at("p.cvgi.config.txt")));

  REQUIRE(run_cli("phantom --kind ellipses --size 48 --seed 7 --ellipses 3 --out " +
                  at("e1.cvgi")) == 0);
  REQUIRE(run_cli("phantom --kind ellipses --size 48 --seed 7 --ellipses 3 --out " +
                  at("e2.cvgi")) == 0);
  CHECK(slurp(at("e1.cvgi")) == slurp(at("e2.cvgi")));

  REQUIRE(run_cli("phantom --kind shepp --size 48 --out " + at("p2.cvgi") +
                  " --png " + at("p2.png")) == 0);
  CHECK(fs::exists(at("p2.png")));
}

TEST_CASE("cli degrade at level zero echoes the input image") {
  REQUIRE_CLI();
  REQUIRE(run_cli("phantom --kind shepp --size 48 --out " + at("d_in.cvgi")) == 0);
  REQUIRE(run_cli("degrade --level 0 --in " + at("d_in.cvgi") + " --out " +
                  at("d_out.cvgi") + " " + kGeo) == 0);
  CHECK(oracle::images_equal(read_image(at("d_in.cvgi")),
                             read_image(at("d_out.cvgi"))));
}

TEST_CASE("cli oracle reconstruction round-trips the phantom exactly") {
  REQUIRE_CLI();
  REQUIRE(run_cli("phantom --kind shepp --size 48 --out " + at("r_clean.cvgi")) == 0);
  REQUIRE(run_cli("degrade --level 8 --in " + at("r_clean.cvgi") + " --out " +
                  at("r_degraded.cvgi") + " " + kGeo) == 0);
  REQUIRE(run_cli("reconstruct --strategy sequential --level 8 "
                  "--restorer oracle --oracle-image " + at("r_clean.cvgi") +
                  " --in " + at("r_degraded.cvgi") + " --out " + at("r_out.cvgi") +
                  " --trace " + at("r_trace.csv") + " " + kGeo) == 0);

  CHECK(oracle::images_equal(read_image(at("r_out.cvgi")),
                             read_image(at("r_clean.cvgi"))));

  const std::string trace = slurp(at("r_trace.csv"));
  CHECK(trace.find("step,level_before,level_after,ssim_prev,reset_flag") !=
        std::string::npos);
  CHECK(trace.find("# config-hash ") != std::string::npos);
  CHECK(count_lines(trace) == 2 + 8);  // comment + header + one row per step
}

TEST_CASE("cli evaluate emits one metric row plus provenance") {
  REQUIRE_CLI();
  REQUIRE(run_cli("phantom --kind shepp --size 48 --out " + at("m_a.cvgi")) == 0);
  REQUIRE(run_cli("degrade --level 8 --in " + at("m_a.cvgi") + " --out " +
                  at("m_b.cvgi") + " " + kGeo) == 0);

  REQUIRE(run_cli("evaluate --ref " + at("m_a.cvgi") + " --test " + at("m_b.cvgi") +
                  " --out " + at("m.csv")) == 0);
  const std::string csv = slurp(at("m.csv"));
  CHECK(csv.find("rmse_hu,psnr_db,ssim") != std::string::npos);
  CHECK(csv.find("# config-hash ") != std::string::npos);
  CHECK(csv.find("# psnr_exact") == std::string::npos);

  REQUIRE(run_cli("evaluate --ref " + at("m_a.cvgi") + " --test " + at("m_a.cvgi") +
                  " --out " + at("m_same.csv")) == 0);
  CHECK(slurp(at("m_same.csv")).find("# psnr_exact 1") != std::string::npos);
}

TEST_CASE("cli compare and ablate write well-formed tables") {
  REQUIRE_CLI();
  const std::string base = "--phantom shepp --size 48 --views 18 "
                           "--restorer oracle " + std::string(kGeo);

  REQUIRE(run_cli("compare " + base + " --strategies sequential,spdps --nfe 6 "
                  "--m 4 --out " + at("cmp.csv")) == 0);
  const std::string cmp = slurp(at("cmp.csv"));
  CHECK(cmp.find("strategy,nfe,rmse_hu,psnr_db,ssim") != std::string::npos);
  CHECK(count_lines(cmp) == 2 + 2);
  CHECK(cmp.find("sequential,8,") != std::string::npos);
  CHECK(cmp.find("spdps,6,") != std::string::npos);

  REQUIRE(run_cli("ablate " + base + " --tau 0.97,1.0 --m 2,4 --nfe 6 --out " +
                  at("abl.csv")) == 0);
  const std::string abl = slurp(at("abl.csv"));
  CHECK(abl.find("tau,m,nfe,rmse_hu,psnr_db,ssim") != std::string::npos);
  CHECK(count_lines(abl) == 2 + 4);
}

TEST_CASE("cli train writes checkpoints and a loss history deterministically") {
  REQUIRE_CLI();
  {
    std::ofstream cfg(at("train.cfg"));
    cfg << "# desk-scale smoke config\n"
        << "images=4\nsize=32\nellipses=3\ndata_seed=100\n"
        << "seed=5\nepochs=1\nbatch=2\nlr=0.02\ndetectors=96\n";
  }
  REQUIRE(run_cli("train --config " + at("train.cfg") + " --out " + at("w1.cvgr") +
                  " --ema-out " + at("w1_ema.cvgr")) == 0);
  CHECK(fs::exists(at("w1.cvgr.history.csv")));
  CHECK(fs::exists(at("w1_ema.cvgr")));

  const RestorerState state = load_restorer(at("w1.cvgr"));
  CHECK(state.arch.levels == 9);

  const std::string history = slurp(at("w1.cvgr.history.csv"));
  CHECK(history.find("iteration,loss_restore,loss_compose") != std::string::npos);
  CHECK(count_lines(history) == 2 + 2);  // comment + header + 2 iterations

  REQUIRE(run_cli("train --config " + at("train.cfg") + " --out " + at("w2.cvgr")) == 0);
  CHECK(slurp(at("w1.cvgr")) == slurp(at("w2.cvgr")));
}

TEST_CASE("cli exit codes separate usage, data, and numeric failures") {
  REQUIRE_CLI();
  CHECK(run_cli("") == 2);                      // missing subcommand
  CHECK(run_cli("frobnicate") == 2);            // unknown subcommand
  CHECK(run_cli("phantom --size 48") == 2);     // missing required --out
  CHECK(run_cli("phantom --kind nope --size 48 --out " + at("x.cvgi")) == 2);

  CHECK(run_cli("degrade --level 1 --in " + at("missing.cvgi") + " --out " +
                at("x.cvgi") + " " + kGeo) == 3);

  REQUIRE(run_cli("phantom --kind shepp --size 48 --out " + at("ec.cvgi")) == 0);
  CHECK(run_cli("degrade --in " + at("ec.cvgi") + " --out " + at("x.cvgi") +
                " " + kGeo) == 2);  // neither --level nor --views
  CHECK(run_cli("reconstruct --level 99 --in " + at("ec.cvgi") + " --out " +
                at("x.cvgi") + " " + kGeo) == 2);

  {
    std::ofstream cfg(at("diverge.cfg"));
    cfg << "images=8\nsize=32\nellipses=3\nepochs=1\nbatch=2\n"
        << "lr=1e12\ndetectors=96\n";
  }
  CHECK(run_cli("train --config " + at("diverge.cfg") + " --out " +
                at("wd.cvgr")) == 4);
  CHECK(fs::exists(at("wd.cvgr.history.csv")));  // partial history preserved
}
