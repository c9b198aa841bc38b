#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "imcgl/cli_io.hpp"
#include "imcgl/errors.hpp"

using namespace imcgl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("imcgl_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig config_from(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header = nullptr) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("checkpoint layout and roundtrip") {
  std::mt19937_64 rng(1);
  const SpectralField u = random_field(3, rng, 2.5, 0.1);
  ModelParams p;
  p.N = 7;
  p.K = 3;
  p.omega = -0.75;
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, u, p);
  const std::string bytes = out.str();
  REQUIRE(bytes.size() == 52u + 16u * 343u);
  CHECK(bytes.substr(0, 4) == "IMCG");
  const auto u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes[at + i])) << (8 * i);
    return v;
  };
  CHECK(u32(4) == kCheckpointVersion);
  CHECK(u32(8) == 3u);
  CHECK(u32(12) == 7u);
  CHECK(u32(16) == 3u);
  double omega;
  std::memcpy(&omega, bytes.data() + 20, 8);
  CHECK(omega == -0.75);
  CHECK(u32(44) == 343u);
  CHECK(u32(48) == 0u);
  double re0;
  std::memcpy(&re0, bytes.data() + 52, 8);
  CHECK(re0 == u.coeffs()[0].real());

  std::istringstream in(bytes);
  const Checkpoint ck = read_checkpoint(in);
  CHECK(ck.header.N == 7u);
  CHECK(ck.header.K == 3u);
  CHECK(ck.field.grid_radius() == 3);
  CHECK(std::memcmp(ck.field.coeffs().data(), u.coeffs().data(), sizeof(Complex) * 343) == 0);

  const fs::path dir = scratch("checkpoint");
  save_field(dir / "u.imcg", u, p);
  CHECK(slurp(dir / "u.imcg") == bytes);
  CHECK(load_field(dir / "u.imcg").field.coeffs() == u.coeffs());
}

TEST_CASE("checkpoint errors are distinct") {
  std::mt19937_64 rng(2);
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, random_field(2, rng, 1.0), ModelParams{});
  const std::string bytes = out.str();

  std::istringstream truncated(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_WITH_AS(read_checkpoint(truncated), "coefficient count mismatch", FormatError);
  std::istringstream extra(bytes + "x");
  CHECK_THROWS_WITH_AS(read_checkpoint(extra), "coefficient count mismatch", FormatError);
  std::string bad_count = bytes;
  bad_count[44] = char(bad_count[44] + 1);
  std::istringstream count(bad_count);
  CHECK_THROWS_WITH_AS(read_checkpoint(count), "coefficient count mismatch", FormatError);
  std::string bad_version = bytes;
  bad_version[4] = 9;
  std::istringstream version(bad_version);
  CHECK_THROWS_AS(read_checkpoint(version), VersionError);
  std::istringstream magic("IMCX" + bytes.substr(4));
  CHECK_THROWS_AS(read_checkpoint(magic), FormatError);
}

TEST_CASE("config parsing and validation") {
  const RunConfig d = config_from("");
  CHECK(d.model.omega == 1.5);
  CHECK(d.grid.grid_radius == 4);
  CHECK(d.seed == 1u);

  const RunConfig c = config_from(
      "[model]\nomega = -2\nN = 12\nK = 5\n[grid]\nradius = 5\n[integrator]\ndt = 0.005\nscheme = etd1\n"
      "[override]\nmode = linear\nlinear_rate = 0.5, -1\n[smoothness]\nh = 0.4, 0.2, 0.1\n[cone]\nqims_C2 = inf\n");
  CHECK(c.model.omega == -2.0);
  CHECK(c.model.N == 12);
  CHECK(c.integrator.scheme == Scheme::ETD1);
  CHECK(c.overrides.mode == NonlinearityMode::Linear);
  CHECK(c.overrides.linear_rate == Complex(0.5, -1.0));
  CHECK(c.smoothness.h.size() == 3u);
  CHECK(std::isinf(c.cone.qims_C2));

  const std::string echo = format_config(c);
  CHECK(format_config(config_from(echo)) == echo);

  CHECK_THROWS_WITH_AS(config_from("[model]\nomega = 0\n"), "invalid omega: requires omega ≠ 0", ConfigError);
  CHECK_THROWS_AS(config_from("[model]\nomega = fast\n"), ParseError);
  CHECK_THROWS_AS(config_from("[model\n"), ParseError);
  CHECK_THROWS_WITH_AS(config_from("[model]\nomegga = 1\n"), "<config>: unknown key [model] omegga", ConfigError);
  CHECK_THROWS_WITH_AS(config_from("[integrator]\ndt = 0.03\nhorizon = 1.0\n"),
                       "invalid [integrator] horizon: requires a positive multiple of dt", ConfigError);
}

TEST_CASE("simulate with the zero override decays like e^{-2t}") {
  RunConfig cfg = config_from(
      "[integrator]\ndt = 0.01\nhorizon = 1\n[override]\nmode = zero\nt_map = false\n"
      "[initial]\nkind = mode\nmode = 0, 0, 0\namplitude = 3\n");
  cfg.experiment = "simulate";
  cfg.out = scratch("simulate");
  run_experiment(cfg);
  std::string header;
  const auto rows = read_csv(cfg.out / "energy.csv", &header);
  CHECK(header == "t,energy,h1_norm,low_norm,high_norm");
  REQUIRE(rows.size() == 101u);
  for (const auto& r : rows) CHECK(std::abs(r[1] - 9.0 * std::exp(-2.0 * r[0])) <= 1e-10 * 9.0);
  CHECK(fs::exists(cfg.out / "config.ini"));
  CHECK(slurp(cfg.out / "manifest.json").find(kCodeVersion) != std::string::npos);
  CHECK(load_field(cfg.out / "final.imcg").field.grid_radius() == 4);
  const std::string csv = slurp(cfg.out / "energy.csv");
  CHECK(csv.back() == '\n');
}

TEST_CASE("n-search table and determinism") {
  RunConfig cfg = config_from("[integrator]\ndt = 0.02\n[n_search]\nK = 8\nsamples = 2\ntransient = 0.1\n");
  cfg.experiment = "n-search";
  cfg.out = scratch("nsearch_a");
  run_experiment(cfg);
  const auto rows = read_csv(cfg.out / "n_search.csv");
  REQUIRE(rows.size() == 2u);
  CHECK(rows[0][0] == 9.0);
  CHECK(rows[1][0] == 10.0);
  for (const auto& r : rows) CHECK((r[2] <= r[3]) == (r[4] == 1.0));

  RunConfig again = cfg;
  again.out = scratch("nsearch_b");
  run_experiment(again);
  for (const char* f : {"n_search.csv", "samples.csv", "config.ini", "manifest.json"})
    CHECK(slurp(cfg.out / f) == slurp(again.out / f));

  RunConfig other = cfg;
  other.seed = 2;
  other.out = scratch("nsearch_c");
  run_experiment(other);
  CHECK(slurp(cfg.out / "samples.csv") != slurp(other.out / "samples.csv"));
}

TEST_CASE("failures leave a machine-readable record") {
  RunConfig cfg = config_from(
      "[integrator]\ndt = 0.02\n[manifold]\nsamples = 1\nmax_newton = 0\nfallback = false\n");
  cfg.experiment = "build-manifold";
  cfg.out = scratch("failure");
  std::ostringstream err;
  const int status = run_and_report(cfg, err);
  CHECK(status != 0);
  const std::string record = slurp(cfg.out / "error.json");
  CHECK(record.find("\"kind\": \"convergence\"") != std::string::npos);
  CHECK(record.find("best_residual") != std::string::npos);
  CHECK(err.str().find("\"status\":\"error\"") != std::string::npos);

  cfg.experiment = "no-such-thing";
  CHECK(run_and_report(cfg, err) == 2);
}
