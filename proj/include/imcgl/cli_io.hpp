#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "imcgl/manifold_builder.hpp"

namespace imcgl {

extern const char* const kCodeVersion;
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary field layout: "IMCG", version, grid radius, N, K (u32), omega, beta,
/// gamma (f64), count (u64), then count (re, im) f64 pairs in lexicographic
/// (k, l, m) order. Everything little-endian.
struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  std::uint32_t grid_radius = 0;
  std::uint32_t N = 0;
  std::uint32_t K = 0;
  double omega = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  std::uint64_t count = 0;
};

struct Checkpoint {
  CheckpointHeader header;
  SpectralField field;
};

void write_checkpoint(std::ostream& out, const SpectralField& u, const ModelParams& params);
Checkpoint read_checkpoint(std::istream& in);
void save_field(const std::filesystem::path& path, const SpectralField& u, const ModelParams& params);
Checkpoint load_field(const std::filesystem::path& path);

enum class InitialKind { Random, Mode, Checkpoint };

struct InitialSpec {
  InitialKind kind = InitialKind::Random;
  double amplitude = 0.5;   // ||u0||_H
  double decay = 0.2;       // random: coefficients ~ exp(-decay |n|^2)
  ModeIndex mode;
  std::string checkpoint;
};

struct NSearchSpec {
  int K = 8;
  double epsilon = 1.0 / 16.0;
  int N_lo = 9;
  int N_hi = 200;
  int samples = 20;
  double transient = 1.0;   // samples are random starts evolved this long
};

struct ConeSpec {
  int pairs = 10;
  double horizon = 5.0;
  double transient = 0.0;
  int admissibility_samples = 4;
  ConeOptions options;
  double qims_kappa = 0.25;
  double qims_C2 = std::numeric_limits<double>::infinity();
};

struct ManifoldSpec {
  ManifoldOptions options;  // integrator is taken from the run
  int samples = 10;
  double amplitude = 0.05;  // ||u_plus||_H
};

struct TrackSpec {
  int starts = 20;
  double horizon = 0.5;
  double fit_start = 0.1;
  bool sensitivity = false;
};

struct SmoothnessSpec {
  std::vector<double> h{0.5, 0.25};
  int directions = 2;
};

struct CalibrateSpec {
  int starts = 4;
  double horizon = 10.0;
  double tail_fraction = 0.5;
  double margin = 2.0;
};

struct RunConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::filesystem::path out = "imcgl-out";
  ModelParams model;
  Discretization grid;
  Overrides overrides;
  IntegratorConfig integrator;
  InitialSpec initial;
  NSearchSpec n_search;
  ConeSpec cone;
  ManifoldSpec manifold;
  TrackSpec track;
  SmoothnessSpec smoothness;
  CalibrateSpec calibrate;

  Model build_model() const;
  ManifoldOptions manifold_options() const;
};

const std::vector<std::string>& subcommands();

/// INI text with [model], [grid], [integrator], [override], [run], [initial],
/// [n_search], [cone], [manifold], [track], [smoothness], [calibrate].
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);
/// Every key with its resolved value; parses back to the same config.
std::string format_config(const RunConfig& cfg);
/// Throws ConfigError naming the key and the rule it breaks.
void validate(const RunConfig& cfg);

/// Random field with Gaussian coefficients ~ exp(-decay |n|^2), scaled to ||u||_H = h_norm.
SpectralField random_field(int grid_radius, std::mt19937_64& rng, double h_norm, double decay = 0.0);
SpectralField initial_state(const RunConfig& cfg, std::mt19937_64& rng);

/// Runs cfg.experiment into cfg.out; throws imcgl::Error on failure.
void run_experiment(const RunConfig& cfg);
/// run_experiment with failures turned into an error record; returns the exit status.
int run_and_report(const RunConfig& cfg, std::ostream& err);
/// Writes error.json into dir (when non-empty) and one JSON line to err.
void report_error(const std::filesystem::path& dir, const std::string& experiment, const std::exception& e,
                  std::ostream& err);
int exit_status(const std::exception& e);

}  // namespace imcgl
