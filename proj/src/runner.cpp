// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#include "fldetect/runner.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fldetect/errors.hpp"
#include "fldetect/rng.hpp"

namespace fld {
namespace {

using json = nlohmann::ordered_json;

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json config_json(const ExperimentConfig& c, double trigger_value) {
  json j;
  j["seed"] = c.seed;
  j["federation"] = {{"clients", c.federation.clients},
                     {"malicious", c.federation.malicious},
                     {"rounds", c.federation.rounds},
                     {"learning_rate", c.federation.learning_rate},
                     {"max_restarts", c.federation.max_restarts},
                     {"eval_every", c.federation.eval_every}};
  j["data"] = {{"source", c.data.source == DataSource::Csv ? "csv" : "synthetic"},
               {"csv_path", c.data.csv_path},
               {"classes", c.data.classes},
               {"features", c.data.features},
               {"examples_per_client", c.data.examples_per_client},
               {"degree", c.data.degree},
               {"test_fraction", c.data.test_fraction}};
  j["model"] = {{"kind", to_string(c.model.kind)}, {"hidden", c.model.hidden}};
  j["aggregator"] = {{"rule", to_string(c.aggregator.rule)},
                     {"byz_param", c.effective_byz_param()}};
  j["attack"] = {{"kind", to_string(c.attack.kind)},
                 {"scale_factor", c.attack.scale_factor},
                 {"target_label", c.attack.target_label},
                 {"alie_z", c.attack.alie_z},
                 {"trigger_size", c.attack.trigger_size},
                 {"trigger_value", trigger_value},
                 {"dba_parts", c.attack.dba_parts},
                 {"adaptive_lambda", c.attack.adaptive_lambda},
                 {"adaptive_base", to_string(c.attack.adaptive_base)},
                 {"adaptive_steps", c.attack.adaptive_steps},
                 {"adaptive_step_size", c.attack.adaptive_step_size}};
  j["detector"] = {{"enabled", c.detector.enabled},
                   {"variant", to_string(c.detector.variant)},
                   {"window", c.detector.window},
                   {"start_iteration", c.detector.start_iteration},
                   {"max_clusters", c.detector.max_clusters},
                   {"gap_samples", c.detector.gap_samples}};
  j["output"] = {{"dir", c.output.dir}};
  return j;
}

std::string series(const std::vector<RoundRecord>& records, double RoundRecord::*field) {
  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double v = records[i].*field;
    if (std::isnan(v)) continue;
    out += std::to_string(i + 1) + " " + format_number(v) + "\n";
  }
  return out;
}

int guarded(std::ostream& log, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string trace_csv(const std::vector<RoundRecord>& records) {
  std::string out(kTraceHeader);
  out += "\n";
  for (const auto& r : records) {
    out += std::to_string(r.iteration) + "," + std::to_string(r.restart_segment) + "," +
           format_number(r.mean_score_benign) + "," + format_number(r.mean_score_malicious) + "," +
           std::to_string(r.selected_k) + "," + std::to_string(r.flagged_count) + "," +
           (r.fallback_used ? "1" : "0") + "," + format_number(r.global_loss) + "\n";
  }
  return out;
}

std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
  json j;
  j["seed"] = cfg.seed;
  j["metrics"] = {{"dacc", result.metrics.dacc},
                  {"fpr", result.metrics.fpr},
                  {"fnr", result.metrics.fnr},
                  {"tacc", result.metrics.tacc},
                  {"asr", result.metrics.asr}};
  const auto first = result.first_detection();
  j["detection_iteration"] = first ? json(*first) : json(nullptr);
  j["flagged"] = result.flagged;
  j["malicious"] = result.truth;
  json events = json::array();
  for (const auto& e : result.events)
    events.push_back({{"segment", e.segment},
                      {"iteration", e.iteration},
                      {"flagged", e.flagged},
                      {"restarted", e.restarted}});
  j["events"] = std::move(events);
  j["rounds_run"] = result.records.size();
  j["l_smooth"] = number_or_null(result.l_smooth);
  j["config"] = config_json(cfg, result.trigger_value);
  return j.dump(2) + "\n";
}

void write_run_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "trace.csv", trace_csv(result.records));
  write_file(dir / "summary.json", summary_json(cfg, result));
  write_file(dir / "scores_benign.dat", series(result.records, &RoundRecord::mean_score_benign));
  write_file(dir / "scores_malicious.dat",
             series(result.records, &RoundRecord::mean_score_malicious));
  if (cfg.federation.eval_every > 0) {
    std::string tacc;
    for (std::size_t i = 0; i < result.records.size(); ++i)
      if (result.records[i].tacc_snapshot)
        tacc += std::to_string(i + 1) + " " + format_number(*result.records[i].tacc_snapshot) +
                "\n";
    write_file(dir / "tacc.dat", tacc);
  }
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    const auto result = run_experiment(cfg);
    write_run_outputs(cfg, result, cfg.output.dir);
    const auto& m = result.metrics;
    log << "dacc=" << format_number(m.dacc) << " fpr=" << format_number(m.fpr)
        << " fnr=" << format_number(m.fnr) << " tacc=" << format_number(m.tacc)
        << " asr=" << format_number(m.asr) << " -> " << cfg.output.dir << "\n";
    return kExitOk;
  });
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::NumMalicious: return "num_malicious";
    case SweepAxis::Degree: return "degree";
    case SweepAxis::Lambda: return "lambda";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "num_malicious") return SweepAxis::NumMalicious;
  if (name == "degree") return SweepAxis::Degree;
  if (name == "lambda") return SweepAxis::Lambda;
  throw ConfigError("unknown sweep axis '" + std::string(name) +
                    "' (expected num_malicious, degree or lambda)");
}

std::vector<double> parse_value_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view item = text.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || p != item.data() + item.size() || !std::isfinite(v))
      throw ConfigError("bad sweep value '" + std::string(item) + "'");
    out.push_back(v);
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("empty sweep value list");
  return out;
}

ExperimentConfig sweep_cell_config(const ExperimentConfig& base, SweepAxis axis, double value) {
  ExperimentConfig cfg = base;
  switch (axis) {
    case SweepAxis::NumMalicious:
      if (value < 0.0 || value != std::floor(value))
        throw ConfigError("num_malicious values must be non-negative integers");
      cfg.federation.malicious = static_cast<std::size_t>(value);
      break;
    case SweepAxis::Degree:
      cfg.data.degree = value;
      break;
    case SweepAxis::Lambda:
      cfg.attack.adaptive_lambda = value;
      break;
  }
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof bits);
  cfg.seed = derive_seed(base.seed, {static_cast<std::uint64_t>(axis), bits});
  cfg.output.dir =
      (std::filesystem::path(base.output.dir) / (std::string(to_string(axis)) + "_" +
                                                 format_number(value)))
          .string();
  validate_config(cfg);
  return cfg;
}

int cmd_sweep(const ExperimentConfig& cfg, SweepAxis axis, std::span<const double> values,
              std::ostream& log) {
  return guarded(log, [&] {
    std::vector<ExperimentConfig> cells;
    for (double v : values) cells.push_back(sweep_cell_config(cfg, axis, v));

    std::string csv = std::string(to_string(axis)) + ",dacc,fpr,fnr,tacc,asr\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto result = run_experiment(cells[i]);
      write_run_outputs(cells[i], result, cells[i].output.dir);
      const auto& m = result.metrics;
      csv += format_number(values[i]) + "," + format_number(m.dacc) + "," + format_number(m.fpr) +
             "," + format_number(m.fnr) + "," + format_number(m.tacc) + "," +
             format_number(m.asr) + "\n";
      log << to_string(axis) << "=" << format_number(values[i]) << " dacc=" << format_number(m.dacc)
          << " asr=" << format_number(m.asr) << "\n";
    }
    std::filesystem::create_directories(cfg.output.dir);
    write_file(std::filesystem::path(cfg.output.dir) / "sweep.csv", csv);
    return kExitOk;
  });
}

}  // namespace fld
