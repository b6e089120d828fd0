// Copyright (c) 2026 The fldetect Authors
// SPDX-License-Identifier: Apache-2.0

#include "fldetect/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fldetect/errors.hpp"

namespace fld {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t to_size(std::string_view v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

std::uint64_t to_u64(std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError("expected an unsigned integer, got '" + std::string(v) + "'");
  return out;
}

double to_double(std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("expected a finite number, got '" + std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected a boolean, got '" + std::string(v) + "'");
}

DataSource to_source(std::string_view v) {
  if (v == "synthetic") return DataSource::Synthetic;
  if (v == "csv") return DataSource::Csv;
  throw ConfigError("unknown data source '" + std::string(v) + "'");
}

std::string_view source_name(DataSource s) {
  return s == DataSource::Csv ? "csv" : "synthetic";
}

// Shortest text that parses back to the same double.
std::string fmt_double(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, p);
}

// Library parse_* helpers throw InvalidArgument; surface them as config errors.
template <class F>
auto wrap(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](ExperimentConfig& c, std::string_view v) { c.seed = to_u64(v); }},

      {"federation.clients",
       [](ExperimentConfig& c, std::string_view v) { c.federation.clients = to_size(v); }},
      {"federation.malicious",
       [](ExperimentConfig& c, std::string_view v) { c.federation.malicious = to_size(v); }},
      {"federation.rounds",
       [](ExperimentConfig& c, std::string_view v) { c.federation.rounds = to_size(v); }},
      {"federation.learning_rate",
       [](ExperimentConfig& c, std::string_view v) { c.federation.learning_rate = to_double(v); }},
      {"federation.max_restarts",
       [](ExperimentConfig& c, std::string_view v) { c.federation.max_restarts = to_size(v); }},
      {"federation.eval_every",
       [](ExperimentConfig& c, std::string_view v) { c.federation.eval_every = to_size(v); }},

      {"data.source", [](ExperimentConfig& c, std::string_view v) { c.data.source = to_source(v); }},
      {"data.csv_path", [](ExperimentConfig& c, std::string_view v) { c.data.csv_path = v; }},
      {"data.classes", [](ExperimentConfig& c, std::string_view v) { c.data.classes = to_size(v); }},
      {"data.features",
       [](ExperimentConfig& c, std::string_view v) { c.data.features = to_size(v); }},
      {"data.examples_per_client",
       [](ExperimentConfig& c, std::string_view v) { c.data.examples_per_client = to_size(v); }},
      {"data.degree", [](ExperimentConfig& c, std::string_view v) { c.data.degree = to_double(v); }},
      {"data.test_fraction",
       [](ExperimentConfig& c, std::string_view v) { c.data.test_fraction = to_double(v); }},

      {"model.kind",
       [](ExperimentConfig& c, std::string_view v) {
         c.model.kind = wrap([&] { return parse_model_kind(v); });
       }},
      {"model.hidden", [](ExperimentConfig& c, std::string_view v) { c.model.hidden = to_size(v); }},

      {"aggregator.rule",
       [](ExperimentConfig& c, std::string_view v) {
         c.aggregator.rule = wrap([&] { return parse_aggregation_rule(v); });
       }},
      {"aggregator.byz_param",
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "auto")
           c.aggregator.byz_param.reset();
         else
           c.aggregator.byz_param = to_size(v);
       }},

      {"attack.kind",
       [](ExperimentConfig& c, std::string_view v) {
         c.attack.kind = wrap([&] { return parse_attack_kind(v); });
       }},
      {"attack.scale_factor",
       [](ExperimentConfig& c, std::string_view v) { c.attack.scale_factor = to_double(v); }},
      {"attack.target_label",
       [](ExperimentConfig& c, std::string_view v) { c.attack.target_label = to_size(v); }},
      {"attack.alie_z", [](ExperimentConfig& c, std::string_view v) { c.attack.alie_z = to_double(v); }},
      {"attack.trigger_size",
       [](ExperimentConfig& c, std::string_view v) { c.attack.trigger_size = to_size(v); }},
      {"attack.trigger_value",
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "auto")
           c.attack.trigger_value.reset();
         else
           c.attack.trigger_value = to_double(v);
       }},
      {"attack.dba_parts",
       [](ExperimentConfig& c, std::string_view v) { c.attack.dba_parts = to_size(v); }},
      {"attack.adaptive_lambda",
       [](ExperimentConfig& c, std::string_view v) { c.attack.adaptive_lambda = to_double(v); }},
      {"attack.adaptive_base",
       [](ExperimentConfig& c, std::string_view v) {
         c.attack.adaptive_base = wrap([&] { return parse_attack_kind(v); });
       }},
      {"attack.adaptive_steps",
       [](ExperimentConfig& c, std::string_view v) { c.attack.adaptive_steps = to_size(v); }},
      {"attack.adaptive_step_size",
       [](ExperimentConfig& c, std::string_view v) { c.attack.adaptive_step_size = to_double(v); }},

      {"detector.enabled",
       [](ExperimentConfig& c, std::string_view v) { c.detector.enabled = to_bool(v); }},
      {"detector.variant",
       [](ExperimentConfig& c, std::string_view v) {
         c.detector.variant = wrap([&] { return parse_detector_variant(v); });
       }},
      {"detector.window",
       [](ExperimentConfig& c, std::string_view v) { c.detector.window = to_size(v); }},
      {"detector.start_iteration",
       [](ExperimentConfig& c, std::string_view v) { c.detector.start_iteration = to_size(v); }},
      {"detector.max_clusters",
       [](ExperimentConfig& c, std::string_view v) { c.detector.max_clusters = to_size(v); }},
      {"detector.gap_samples",
       [](ExperimentConfig& c, std::string_view v) { c.detector.gap_samples = to_size(v); }},

      {"output.dir", [](ExperimentConfig& c, std::string_view v) { c.output.dir = v; }},
  };
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid config: " + what);
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const char* known[] = {"federation", "data",     "model", "aggregator",
                                    "attack",     "detector", "output"};
      bool ok = false;
      for (const char* k : known) ok = ok || section == k;
      if (!ok) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    const auto it = setters().find(full);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + full + "'");
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + full + ": " + e.what());
    }
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate_config(const ExperimentConfig& c) {
  const auto& fed = c.federation;
  require(fed.clients >= 2, "federation.clients >= 2");
  require(fed.malicious <= fed.clients, "federation.malicious <= federation.clients");
  require(fed.rounds >= 1, "federation.rounds >= 1");
  require(fed.learning_rate > 0.0, "federation.learning_rate > 0");

  const auto& d = c.data;
  if (d.source == DataSource::Csv) {
    require(!d.csv_path.empty(), "data.csv_path is set when data.source = csv");
  } else {
    require(d.classes >= 2, "data.classes >= 2");
    require(d.features >= d.classes, "data.features >= data.classes");
    require(d.examples_per_client >= 1, "data.examples_per_client >= 1");
    require(fed.clients >= d.classes, "federation.clients >= data.classes");
    require(d.degree >= 1.0 / static_cast<double>(d.classes) - 1e-12 && d.degree <= 1.0,
            "data.degree in [1/classes, 1]");
    require(c.attack.trigger_size <= d.features, "attack.trigger_size <= data.features");
    require(c.attack.target_label < d.classes, "attack.target_label < data.classes");
  }
  require(d.test_fraction > 0.0 && d.test_fraction < 1.0, "data.test_fraction in (0, 1)");

  require(c.model.kind != ModelKind::MLP || c.model.hidden >= 1, "model.hidden >= 1");

  const std::size_t n = fed.clients;
  const std::size_t k = c.effective_byz_param();
  switch (c.aggregator.rule) {
    case AggregationRule::Krum:
      require(n >= k + 3, "krum needs n - byz_param - 2 >= 1");
      break;
    case AggregationRule::TrimmedMean:
      require(n >= 2 * k + 1, "trimmed_mean needs n - 2*byz_param >= 1");
      break;
    default:
      break;
  }

  const auto& a = c.attack;
  require(a.scale_factor >= 0.0, "attack.scale_factor >= 0");
  require(a.alie_z >= 0.0, "attack.alie_z >= 0");
  require(a.trigger_size >= 1, "attack.trigger_size >= 1");
  require(a.adaptive_lambda > 0.0 && a.adaptive_lambda <= 1.0, "attack.adaptive_lambda in (0, 1]");
  require(a.adaptive_base != AttackKind::Adaptive && a.adaptive_base != AttackKind::None,
          "attack.adaptive_base is a concrete attack");
  require(a.adaptive_steps >= 1, "attack.adaptive_steps >= 1");
  require(a.adaptive_step_size > 0.0, "attack.adaptive_step_size > 0");
  const bool dba = a.kind == AttackKind::DBA ||
                   (a.kind == AttackKind::Adaptive && a.adaptive_base == AttackKind::DBA);
  if (dba) {
    require(a.dba_parts >= 1, "attack.dba_parts >= 1");
    require(a.dba_parts <= fed.malicious, "attack.dba_parts <= federation.malicious");
    require(a.dba_parts <= a.trigger_size, "attack.dba_parts <= attack.trigger_size");
  }

  const auto& det = c.detector;
  require(det.window >= 1, "detector.window >= 1");
  require(det.max_clusters >= 2, "detector.max_clusters >= 2");
  require(det.gap_samples >= 1, "detector.gap_samples >= 1");
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "seed = " << c.seed << "\n";
  o << "\n[federation]\n"
    << "clients = " << c.federation.clients << "\n"
    << "malicious = " << c.federation.malicious << "\n"
    << "rounds = " << c.federation.rounds << "\n"
    << "learning_rate = " << fmt_double(c.federation.learning_rate) << "\n"
    << "max_restarts = " << c.federation.max_restarts << "\n"
    << "eval_every = " << c.federation.eval_every << "\n";
  o << "\n[data]\n"
    << "source = " << source_name(c.data.source) << "\n"
    << "csv_path = " << c.data.csv_path << "\n"
    << "classes = " << c.data.classes << "\n"
    << "features = " << c.data.features << "\n"
    << "examples_per_client = " << c.data.examples_per_client << "\n"
    << "degree = " << fmt_double(c.data.degree) << "\n"
    << "test_fraction = " << fmt_double(c.data.test_fraction) << "\n";
  o << "\n[model]\n"
    << "kind = " << to_string(c.model.kind) << "\n"
    << "hidden = " << c.model.hidden << "\n";
  o << "\n[aggregator]\n"
    << "rule = " << to_string(c.aggregator.rule) << "\n"
    << "byz_param = "
    << (c.aggregator.byz_param ? std::to_string(*c.aggregator.byz_param) : std::string("auto"))
    << "\n";
  o << "\n[attack]\n"
    << "kind = " << to_string(c.attack.kind) << "\n"
    << "scale_factor = " << fmt_double(c.attack.scale_factor) << "\n"
    << "target_label = " << c.attack.target_label << "\n"
    << "alie_z = " << fmt_double(c.attack.alie_z) << "\n"
    << "trigger_size = " << c.attack.trigger_size << "\n"
    << "trigger_value = "
    << (c.attack.trigger_value ? fmt_double(*c.attack.trigger_value) : std::string("auto")) << "\n"
    << "dba_parts = " << c.attack.dba_parts << "\n"
    << "adaptive_lambda = " << fmt_double(c.attack.adaptive_lambda) << "\n"
    << "adaptive_base = " << to_string(c.attack.adaptive_base) << "\n"
    << "adaptive_steps = " << c.attack.adaptive_steps << "\n"
    << "adaptive_step_size = " << fmt_double(c.attack.adaptive_step_size) << "\n";
  o << "\n[detector]\n"
    << "enabled = " << (c.detector.enabled ? "true" : "false") << "\n"
    << "variant = " << to_string(c.detector.variant) << "\n"
    << "window = " << c.detector.window << "\n"
    << "start_iteration = " << c.detector.start_iteration << "\n"
    << "max_clusters = " << c.detector.max_clusters << "\n"
    << "gap_samples = " << c.detector.gap_samples << "\n";
  o << "\n[output]\n"
    << "dir = " << c.output.dir << "\n";
  return o.str();
}

}  // namespace fld
