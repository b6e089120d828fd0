// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

// flsim: run, sweep, or validate a federated-learning detection experiment.
//
//   flsim run      --config exp.cfg [--out DIR] [--seed N]
//   flsim sweep    --config exp.cfg --axis lambda --values 1,0.6,0.2 [--out DIR] [--seed N]
//   flsim validate --config exp.cfg
//
// Exit codes: 0 ok, 2 config error, 3 runtime failure.
// FLSIM_THREADS caps the number of worker threads.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fldetect/config.hpp"
#include "fldetect/errors.hpp"
#include "fldetect/runner.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::string axis;
  std::string values;
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config, "experiment config file")->required();
  cmd->add_option("--out", opt.out, "output directory (overrides [output] dir)");
  cmd->add_option("--seed", opt.seed, "master seed (overrides seed)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated learning simulator with malicious-client detection"};
  app.require_subcommand(1);
  Options opt;

  auto* run = app.add_subcommand("run", "run one experiment");
  add_common(run, opt);
  auto* sweep = app.add_subcommand("sweep", "run one experiment per axis value");
  add_common(sweep, opt);
  sweep->add_option("--axis", opt.axis, "num_malicious, degree or lambda")->required();
  sweep->add_option("--values", opt.values, "comma-separated axis values")->required();
  auto* validate = app.add_subcommand("validate", "check a config file and print it");
  validate->add_option("--config", opt.config, "experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : fld::kExitConfig;
  }

  fld::ExperimentConfig cfg;
  try {
    cfg = fld::load_config(opt.config);
    if (opt.out) cfg.output.dir = *opt.out;
    if (opt.seed) cfg.seed = *opt.seed;
  } catch (const fld::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return fld::kExitConfig;
  }

  if (validate->parsed()) {
    std::cout << fld::serialize_config(cfg);
    return fld::kExitOk;
  }
  if (run->parsed()) return fld::cmd_run(cfg, std::cerr);

  try {
    const auto axis = fld::parse_sweep_axis(opt.axis);
    const auto values = fld::parse_value_list(opt.values);
    return fld::cmd_sweep(cfg, axis, values, std::cerr);
  } catch (const fld::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return fld::kExitConfig;
  }
}
