// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment runner behind the flsim CLI. Output files:
//
//   trace.csv             one row per round
//   summary.json          final metrics, detection events, config echo
//   scores_benign.dat     "<round> <mean benign score>"  (round counts across restarts)
//   scores_malicious.dat  "<round> <mean malicious score>"
//   tacc.dat              "<round> <test accuracy>"  (only with eval_every > 0)
//   sweep.csv             "<axis>,dacc,fpr,fnr,tacc,asr", one row per cell

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fldetect/config.hpp"
#include "fldetect/sim.hpp"

namespace fld {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr std::string_view kTraceHeader =
    "iteration,restart_segment,mean_score_benign,mean_score_malicious,selected_k,"
    "flagged_count,fallback_used,global_loss";

/// printf("%.6g") formatting used by every CSV and data file.
std::string format_number(double x);

std::string trace_csv(const std::vector<RoundRecord>& records);

/// Effective configuration as JSON text (byz_param and trigger resolved).
std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Writes every per-run file into `dir` (created if missing).
void write_run_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                       const std::filesystem::path& dir);

/// Runs one experiment into cfg.output.dir. Returns an exit code.
int cmd_run(const ExperimentConfig& cfg, std::ostream& log);

enum class SweepAxis { NumMalicious, Degree, Lambda };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view name);

/// Parses "1,0.5,0.1" into numbers; throws ConfigError.
std::vector<double> parse_value_list(std::string_view text);

/// `base` with the axis set to `value` and the per-cell seed applied.
/// Throws ConfigError when the value is not valid for the axis.
ExperimentConfig sweep_cell_config(const ExperimentConfig& base, SweepAxis axis, double value);

/// Runs one experiment per value into cfg.output.dir/<axis>_<value>/ and
/// writes sweep.csv. Returns an exit code.
int cmd_sweep(const ExperimentConfig& cfg, SweepAxis axis, std::span<const double> values,
              std::ostream& log);

}  // namespace fld
