#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "edlab/io.hpp"
#include "edlab/state.hpp"

using namespace edlab;
namespace fs = std::filesystem;

namespace {

const char* kGoodConfig = R"ini(
# minimal run
[grid]
spatial_dim = 1
particles = 2
points = 128
lengths = 26.0

[system]
masses = 1.0, 2.0
hbar = 0.5

[potential]
family = pair_spring
spring_k = 0.8

[initial]
kind = gaussian
centers = -2.0, 1.0
widths = 1.5
wavevectors = 0.4, -0.1

[shift]
policy = fixed
lambda_dot = 0.25

[solver]
backend = split
dt = 0.002
steps = 10

[output]
directory = /tmp/edlab_io_test
)ini";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("a complete config parses with broadcasting and defaults") {
  const ExperimentConfig cfg = parse_config_text(kGoodConfig);
  CHECK(cfg.spatial_dim == 1);
  CHECK(cfg.particles == 2);
  CHECK(cfg.points == std::vector<std::int64_t>{128, 128});   // broadcast per axis
  CHECK(cfg.lengths == std::vector<double>{26.0, 26.0});
  CHECK(cfg.masses == std::vector<double>{1.0, 2.0});
  CHECK(cfg.hbar == 0.5);
  CHECK(cfg.eta == 0.5);  // eta follows hbar unless set
  CHECK(family_name(cfg.potential.family) == "pair-spring");
  CHECK(cfg.gaussian.widths == std::vector<double>{1.5, 1.5});
  CHECK(cfg.policy == ShiftPolicy::Fixed);
  CHECK(cfg.lambda_dot == std::vector<double>{0.25});
  CHECK(cfg.solver.dt == 0.002);
  CHECK(cfg.solver.steps == 10);
  CHECK(!cfg.lapse.has_value());
  CHECK(!cfg.sampler.has_value());
  CHECK(cfg.output_dir == "/tmp/edlab_io_test");

  const GridSpec g = cfg.make_grid();
  CHECK(g.dim() == 2);
  const ParticleSystem sys = cfg.make_system();
  CHECK(sys.total_mass() == 3.0);
  const ShiftVelocity shift = cfg.fixed_shift();
  CHECK(shift.lambda_dot[0] == 0.25);
}

TEST_CASE("structural problems report line and column") {
  auto line_of = [](const std::string& text) {
    try {
      parse_config_text(text);
    } catch (const ParseError& e) {
      return e.line;
    }
    return -1;
  };

  CHECK(line_of("[grid\npoints = 8") == 1);              // unclosed section
  CHECK(line_of("[grid]\npoints 8") == 2);               // missing '='
  CHECK(line_of("points = 8\n[grid]") == 1);             // key before any section
  CHECK(line_of("[grid]\npoints = 8\npoints = 9") == 3); // duplicate key
  CHECK(line_of("[]\n") == 1);                           // empty section name
}

TEST_CASE("semantic violations are collected into one error") {
  const char* bad = R"ini(
[grid]
spatial_dim = 7
particles = 1
points = 4
lengths = -3.0

[system]
masses = 0.0
)ini";
  try {
    parse_config_text(bad);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.violations.size() >= 3);  // dim, points, lengths, masses
  }
}

TEST_CASE("unknown keys are rejected by name") {
  try {
    parse_config_text(std::string(kGoodConfig) + "\n[typo_section]\nfoo = 1\n");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    REQUIRE(!e.violations.empty());
    CHECK(e.violations[0].find("typo_section") != std::string::npos);
  }
}

TEST_CASE("the schema description covers every section") {
  const std::string schema = describe_config();
  for (const char* section :
       {"[grid]", "[system]", "[potential]", "[initial]", "[shift]", "[solver]",
        "[lapse]", "[sampler]", "[output]"})
    CHECK(schema.find(section) != std::string::npos);
}

TEST_CASE("crc32 matches the reference vector") {
  const unsigned char msg[] = "123456789";
  CHECK(crc32_ieee(msg, 9) == 0xCBF43926u);
  CHECK(crc32_ieee(msg, 0) == 0x00000000u);
}

TEST_CASE("checkpoints survive a round trip bit for bit") {
  TempDir dir("edlab_ckpt_test");
  const GridSpec g = GridSpec::uniform(1, 1, 64, 16.0);
  const ParticleSystem sys({1.5}, 0.9, 1.1);
  GaussianSpec gs;
  gs.centers = {0.3};
  gs.widths = {1.0};
  gs.wavevectors = {0.7};
  WaveFunction psi = gaussian_packet(g, gs);
  psi.t = 0.625;

  const std::string path = (dir.path / "state.edwf").string();
  write_checkpoint(psi, sys, path);
  const Checkpoint back = read_checkpoint(path);

  CHECK(back.psi.t == psi.t);
  CHECK(back.psi.grid.same_shape(g));
  CHECK(back.system.masses == sys.masses);
  CHECK(back.system.hbar == sys.hbar);
  CHECK(back.system.eta == sys.eta);
  REQUIRE(back.psi.amp.size() == psi.amp.size());
  for (std::size_t i = 0; i < psi.amp.size(); ++i) CHECK(back.psi.amp[i] == psi.amp[i]);
}

TEST_CASE("checkpoint reader rejects damaged files precisely") {
  TempDir dir("edlab_ckpt_damage");
  const GridSpec g = GridSpec::uniform(1, 1, 64, 16.0);
  const ParticleSystem sys({1.0}, 1.0);
  GaussianSpec gs;
  gs.centers = {0.0};
  gs.widths = {1.0};
  gs.wavevectors = {0.0};
  const WaveFunction psi = gaussian_packet(g, gs);
  const std::string path = (dir.path / "state.edwf").string();
  write_checkpoint(psi, sys, path);
  const std::string raw = slurp(path);

  auto write_variant = [&](const std::string& content) {
    const std::string p = (dir.path / "variant.edwf").string();
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    return p;
  };

  // truncation beats every other diagnosis
  CHECK_THROWS_AS(read_checkpoint(write_variant(raw.substr(0, 10))), TruncatedFile);

  std::string wrong_magic = raw;
  wrong_magic[0] = 'X';
  CHECK_THROWS_AS(read_checkpoint(write_variant(wrong_magic)), BadMagic);

  std::string wrong_version = raw;
  wrong_version[4] = 99;
  CHECK_THROWS_AS(read_checkpoint(write_variant(wrong_version)), VersionMismatch);

  std::string flipped = raw;
  flipped[64] = static_cast<char>(flipped[64] ^ 0x10);  // payload byte
  CHECK_THROWS_AS(read_checkpoint(write_variant(flipped)), ChecksumMismatch);

  CHECK_THROWS_AS(read_checkpoint((dir.path / "missing.edwf").string()), TruncatedFile);
}

TEST_CASE("atomic write replaces content completely") {
  TempDir dir("edlab_atomic");
  const std::string path = (dir.path / "note.txt").string();
  atomic_write(path, "first version, long enough to notice truncation");
  atomic_write(path, "second");
  CHECK(slurp(path) == "second");
  CHECK(!fs::exists(path + ".tmp"));
}

TEST_CASE("observable csv has the fixed schema and pi0 mirrors the energy") {
  const GridSpec g = GridSpec::uniform(1, 1, 64, 16.0);
  const ParticleSystem sys({1.0}, 1.0);
  GaussianSpec gs;
  gs.centers = {0.0};
  gs.widths = {1.0};
  gs.wavevectors = {0.5};
  const WaveFunction psi = gaussian_packet(g, gs);
  const std::vector<double> v(static_cast<std::size_t>(g.total_points()), 0.0);
  const ShiftVelocity shift = ShiftVelocity::zero(1);

  const std::string header = observables_csv_header();
  CHECK(header.rfind("t,norm,energy,", 0) == 0);
  const auto count_commas = [](const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += (c == ',');
    return n;
  };
  CHECK(count_commas(header) == 25);  // 26 columns

  ObservableRow row;
  row.rep = observable_report(psi, sys, v, shift);
  row.shift = shift;
  const std::string csv = observables_csv({row}, 1, sys);
  // header plus one data line
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 2);
  const std::string data = csv.substr(csv.find('\n') + 1);
  CHECK(count_commas(data) == 25);

  // pi0 (last column) = -energy (third column)
  std::vector<std::string> cells;
  std::string cell;
  for (char c : data) {
    if (c == ',' || c == '\n') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  REQUIRE(cells.size() == 26);
  CHECK(std::stod(cells[25]) == -std::stod(cells[2]));
}

TEST_CASE("an evolve run writes its artifact set and exits clean") {
  TempDir dir("edlab_run_evolve");
  ExperimentConfig cfg = parse_config_text(kGoodConfig);
  cfg.output_dir = (dir.path / "out").string();
  CHECK(run_experiment(cfg, RunMode::Evolve) == kExitOk);
  CHECK(fs::exists(dir.path / "out" / "observables.csv"));
  CHECK(fs::exists(dir.path / "out" / "summary.json"));
  CHECK(fs::exists(dir.path / "out" / "checkpoint_final.edwf"));

  const Checkpoint final_state = read_checkpoint((dir.path / "out" / "checkpoint_final.edwf").string());
  CHECK(final_state.psi.t == doctest::Approx(0.002 * 10).epsilon(1e-12));

  const std::string summary = slurp(dir.path / "out" / "summary.json");
  CHECK(summary.find("\"mode\"") != std::string::npos);
  CHECK(summary.find("\"final_norm\"") != std::string::npos);
  CHECK(summary.find("\"constraint_check\"") != std::string::npos);
}

TEST_CASE("a config whose packet cannot be resolved exits with a config error") {
  TempDir dir("edlab_run_bad");
  ExperimentConfig cfg = parse_config_text(kGoodConfig);
  cfg.output_dir = (dir.path / "out").string();
  cfg.gaussian.widths = {0.3, 0.3};  // below 4h on this grid
  CHECK(run_experiment(cfg, RunMode::Evolve) == kExitConfigError);
  // config errors are reported before any run, so no artifacts appear
  CHECK(!fs::exists(dir.path / "out" / "summary.json"));
  CHECK(!fs::exists(dir.path / "out" / "observables.csv"));
}
