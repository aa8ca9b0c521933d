#pragma once
// Experiment configuration, orchestration, and persistence.
//
// Config files are INI-style text (sections in brackets, key = value, '#' or
// ';' comment lines); parse_config reports structural problems as ParseError
// with line/column and collects every semantic violation into one
// ValidationError. Time series go to observables.csv (fixed 26-column
// schema, 17 significant digits), ensembles to ensemble.csv, summaries to
// summary.json, states to the "EDWF" binary checkpoint format with a
// trailing CRC-32. All writes are temp-then-rename.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edlab/best_match.hpp"
#include "edlab/evolution.hpp"
#include "edlab/potential.hpp"
#include "edlab/sampler.hpp"

namespace edlab {

enum class ShiftPolicy { Fixed, BestMatchTranslation, BestMatchRotation, BestMatchBoth };
enum class InitialKind { Gaussian, PlaneWave };

struct SamplerConfig {
  std::int64_t chains = 10000;
  std::uint64_t seed = 0;          // 0: use the master seed
  std::int64_t record_stride = 0;  // 0: record the final instant only
  double fluctuation_scale = 1.0;
};

struct LapseConfig {
  LapseProfile profile;
  double x0_start = 0.0;
};

struct ExperimentConfig {
  int spatial_dim = 1;
  int particles = 1;
  std::vector<std::int64_t> points;  // one entry per configuration axis
  std::vector<double> lengths;

  std::vector<double> masses;
  double hbar = 1.0;
  double eta = 1.0;

  PotentialSpec potential = PotentialSpec::free();

  InitialKind initial_kind = InitialKind::Gaussian;
  GaussianSpec gaussian;
  std::vector<std::int64_t> modes;

  ShiftPolicy policy = ShiftPolicy::Fixed;
  std::vector<double> lambda_dot, zeta_dot;  // fixed-policy values

  SolverParams solver;
  std::optional<LapseConfig> lapse;
  std::optional<SamplerConfig> sampler;

  std::string output_dir = "out";
  std::int64_t checkpoint_stride = 0;  // 0: final checkpoint only
  std::uint64_t master_seed = 1;

  GridSpec make_grid() const;
  ParticleSystem make_system() const;
  ShiftVelocity fixed_shift() const;
};

// Throws ParseError (structure) or ValidationError (all violations at once).
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

// Human-readable schema: every section, key, default, and constraint.
std::string describe_config();

// --- checkpoints -----------------------------------------------------------

struct Checkpoint {
  WaveFunction psi;
  ParticleSystem system;
};

void write_checkpoint(const WaveFunction& psi, const ParticleSystem& sys,
                      const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

// IEEE CRC-32 (reflected, polynomial 0xEDB88320); crc32_ieee("123456789")
// equals 0xCBF43926.
std::uint32_t crc32_ieee(const unsigned char* data, std::size_t n);

// --- text artifacts ----------------------------------------------------------

struct ObservableRow {
  ObservableReport rep;
  ShiftVelocity shift;
  double x0 = 0.0;
  double beta = 1.0;
};

std::string observables_csv_header();
std::string observables_csv(const std::vector<ObservableRow>& rows, int spatial_dim,
                            const ParticleSystem& sys);
void write_ensemble_csv(const std::string& path, const TrajectoryEnsemble& ensemble);
void atomic_write(const std::string& path, const std::string& content);

// --- orchestration ------------------------------------------------------------

enum class RunMode { Evolve, BestMatch, Sample, Parametrized, Verify };

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalFailure = 3;
inline constexpr int kExitCheckFailure = 4;

// Runs one experiment, writes its artifacts under cfg.output_dir, and maps
// errors to exit codes (0 ok, 2 config, 3 numerical, 4 failed checks).
int run_experiment(const ExperimentConfig& cfg, RunMode mode);

}  // namespace edlab
