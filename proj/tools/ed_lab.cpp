// Command-line front end for the entropic-dynamics laboratory.
//
// Exit codes: 0 success, 2 configuration problem, 3 numerical failure,
// 4 verification check failure.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "edlab/io.hpp"
#include "edlab/log.hpp"
#include "edlab/parallel.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::string output;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string backend;
};

void add_common(CLI::App* sub, CommonOpts& opts, bool config_required) {
  auto* c = sub->add_option("--config", opts.config, "experiment config file (INI)");
  if (config_required) c->required();
  sub->add_option("--output", opts.output, "artifact directory (overrides the config)");
  sub->add_option("--seed", opts.seed, "master seed (overrides the config)")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  sub->add_option("--threads", opts.threads, "worker threads, 0 = hardware")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--backend", opts.backend, "evolution backend")
      ->check(CLI::IsMember({"split", "cn"}));
}

int dispatch(const CommonOpts& opts, edlab::RunMode mode) {
  edlab::set_thread_count(opts.threads);
  edlab::ExperimentConfig cfg;
  try {
    if (!opts.config.empty()) cfg = edlab::parse_config(opts.config);
  } catch (const edlab::Error& e) {
    edlab::log::error(e.what());
    return edlab::kExitConfigError;
  }
  if (!opts.output.empty()) cfg.output_dir = opts.output;
  if (opts.seed_set) cfg.master_seed = opts.seed;
  if (opts.backend == "split") cfg.solver.backend = edlab::Backend::SplitStep;
  if (opts.backend == "cn") cfg.solver.backend = edlab::Backend::CrankNicolson;
  return edlab::run_experiment(cfg, mode);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relational entropic-dynamics laboratory"};
  app.require_subcommand(1);

  CommonOpts evolve_opts, bm_opts, sample_opts, param_opts, verify_opts;

  auto* evolve = app.add_subcommand("evolve", "propagate a state and record observables");
  add_common(evolve, evolve_opts, true);
  auto* bm = app.add_subcommand("best-match", "solve the frame conditions on a state");
  add_common(bm, bm_opts, true);
  auto* sample = app.add_subcommand("sample", "draw trajectory ensembles along a run");
  add_common(sample, sample_opts, true);
  auto* param = app.add_subcommand("parametrized",
                                   "evolve in label time with a lapse profile");
  add_common(param, param_opts, true);
  auto* verify = app.add_subcommand("verify", "run the built-in consistency battery");
  add_common(verify, verify_opts, false);
  auto* describe = app.add_subcommand("describe-config", "print the config schema");

  CLI11_PARSE(app, argc, argv);

  if (describe->parsed()) {
    std::fputs(edlab::describe_config().c_str(), stdout);
    return edlab::kExitOk;
  }
  if (evolve->parsed()) return dispatch(evolve_opts, edlab::RunMode::Evolve);
  if (bm->parsed()) return dispatch(bm_opts, edlab::RunMode::BestMatch);
  if (sample->parsed()) return dispatch(sample_opts, edlab::RunMode::Sample);
  if (param->parsed()) return dispatch(param_opts, edlab::RunMode::Parametrized);
  if (verify->parsed()) return dispatch(verify_opts, edlab::RunMode::Verify);
  return edlab::kExitConfigError;
}
