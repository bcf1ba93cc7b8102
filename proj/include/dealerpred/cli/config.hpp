#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "dealerpred/errors.hpp"
#include "dealerpred/harness/granularity.hpp"
#include "dealerpred/harness/train.hpp"
#include "dealerpred/market/filters.hpp"
#include "dealerpred/market/generator.hpp"
#include "dealerpred/models/config.hpp"
#include "dealerpred/random.hpp"

namespace dealerpred::cli {

/// Everything a pipeline run needs. Component seeds are derived from
/// `seed` by name, so changing one stage's settings leaves the others'
/// random streams alone.
struct RunConfig {
  market::MarketSpec market;

  std::size_t top_dealers = 200;
  std::size_t top_bonds = 500;
  market::BondFilter bond_filter = market::BondFilter::Retain;

  std::size_t t_in = 5;
  std::size_t t_out = 5;
  std::size_t stride = 1;
  double train_fraction = 0.9;

  models::ModelConfig model;  // vocab and seed are filled in at run time
  harness::TrainSpec train;

  std::size_t clusters = 4;
  std::size_t cluster_max_iter = 100;

  harness::Granularity granularity = harness::Granularity::Cluster;
  harness::Scoring scoring = harness::Scoring::PerDay;
  std::string output_dir = "run";
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool write_text = false;
  bool write_samples = false;
  std::size_t probe_samples = 64;

  std::uint64_t market_seed() const { return derive_seed(seed, "market"); }
  std::uint64_t model_seed() const { return derive_seed(seed, "model"); }
  std::uint64_t train_seed() const { return derive_seed(seed, "train"); }
  std::uint64_t cluster_seed() const { return derive_seed(seed, "cluster"); }

  market::MarketSpec resolved_market() const {
    market::MarketSpec m = market;
    m.seed = market_seed();
    return m;
  }

  models::ModelConfig resolved_model(std::size_t vocab) const {
    models::ModelConfig m = model;
    m.vocab = vocab;
    m.t_in = t_in;
    m.t_out = t_out;
    m.seed = model_seed();
    return m;
  }

  harness::TrainSpec resolved_train() const {
    harness::TrainSpec t = train;
    t.seed = train_seed();
    return t;
  }

  void validate() const {
    market.validate();
    if (t_in == 0 || t_out == 0 || stride == 0) throw ConfigError("t_in, t_out and stride must be at least 1");
    market::split_boundary(market.days, train_fraction);
    resolved_model(1).validate();
    train.validate();
    if (clusters == 0) throw ConfigError("clusters must be at least 1");
    if (cluster_max_iter == 0) throw ConfigError("max_iter must be at least 1");
    if (threads == 0) throw ConfigError("threads must be at least 1");
    if (probe_samples == 0) throw ConfigError("probe_samples must be at least 1");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  }
};

namespace detail {

struct Key {
  const char* section;
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline std::size_t to_count(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  return static_cast<std::size_t>(n);
}

inline double to_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::string real_text(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

#define DP_COUNT(sec, key, field)                                                                \
  Key {                                                                                          \
    sec, #key, [](RunConfig& c, const std::string& v) { c.field = to_count(#key, v); },          \
        [](const RunConfig& c) { return std::to_string(c.field); }                               \
  }
#define DP_REAL(sec, key, field)                                                                 \
  Key {                                                                                          \
    sec, #key, [](RunConfig& c, const std::string& v) { c.field = to_real(#key, v); },           \
        [](const RunConfig& c) { return real_text(c.field); }                                    \
  }
#define DP_BOOL(sec, key, field)                                                                 \
  Key {                                                                                          \
    sec, #key, [](RunConfig& c, const std::string& v) { c.field = to_bool(#key, v); },           \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }               \
  }

inline const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      Key{"market", "days",
          [](RunConfig& c, const std::string& v) { c.market.days = static_cast<std::uint32_t>(to_count("days", v)); },
          [](const RunConfig& c) { return std::to_string(c.market.days); }},
      DP_COUNT("market", bonds, market.bonds),
      DP_COUNT("market", periodic_dealers, market.periodic_dealers),
      DP_COUNT("market", sparse_dealers, market.sparse_dealers),
      DP_COUNT("market", dense_dealers, market.dense_dealers),
      DP_COUNT("market", period_min, market.period_min),
      DP_COUNT("market", period_max, market.period_max),
      DP_COUNT("market", periodic_set_min, market.periodic_set_min),
      DP_COUNT("market", periodic_set_max, market.periodic_set_max),
      DP_REAL("market", periodic_buy_fraction, market.periodic_buy_fraction),
      DP_BOOL("market", periodic_random_phase, market.periodic_random_phase),
      DP_REAL("market", sparse_day_rate, market.sparse_day_rate),
      DP_COUNT("market", sparse_max_trades, market.sparse_max_trades),
      DP_COUNT("market", dense_breadth, market.dense_breadth),
      DP_REAL("market", dense_rate, market.dense_rate),
      DP_REAL("market", inter_dealer_fraction, market.inter_dealer_fraction),
      DP_REAL("market", cancellation_rate, market.cancellation_rate),
      DP_REAL("market", correction_rate, market.correction_rate),

      DP_COUNT("filter", top_dealers, top_dealers),
      DP_COUNT("filter", top_bonds, top_bonds),
      Key{"filter", "bond_filter",
          [](RunConfig& c, const std::string& v) {
            if (v == "retain") c.bond_filter = market::BondFilter::Retain;
            else if (v == "remove") c.bond_filter = market::BondFilter::Remove;
            else throw ConfigError("bond_filter: expected retain or remove, got '" + v + "'");
          },
          [](const RunConfig& c) {
            return std::string(c.bond_filter == market::BondFilter::Retain ? "retain" : "remove");
          }},

      DP_COUNT("window", t_in, t_in),
      DP_COUNT("window", t_out, t_out),
      DP_COUNT("window", stride, stride),
      DP_REAL("split", train_fraction, train_fraction),

      Key{"model", "kind", [](RunConfig& c, const std::string& v) { c.model.kind = models::parse_model_kind(v); },
          [](const RunConfig& c) { return std::string(models::to_string(c.model.kind)); }},
      DP_COUNT("model", d_model, model.d_model),
      DP_COUNT("model", heads, model.heads),
      DP_COUNT("model", n_layers, model.n_layers),
      DP_COUNT("model", d_ff, model.d_ff),
      DP_COUNT("model", hidden, model.hidden),

      DP_COUNT("train", epochs, train.epochs),
      DP_COUNT("train", batch_size, train.batch_size),
      DP_REAL("train", learning_rate, train.learning_rate),
      DP_REAL("train", threshold, train.threshold),
      DP_COUNT("train", patience, train.patience),
      DP_REAL("train", min_delta, train.min_delta),

      DP_COUNT("cluster", clusters, clusters),
      DP_COUNT("cluster", max_iter, cluster_max_iter),

      Key{"run", "granularity",
          [](RunConfig& c, const std::string& v) { c.granularity = harness::parse_granularity(v); },
          [](const RunConfig& c) { return harness::to_string(c.granularity); }},
      Key{"run", "scoring",
          [](RunConfig& c, const std::string& v) {
            if (v == "per_day") c.scoring = harness::Scoring::PerDay;
            else if (v == "union") c.scoring = harness::Scoring::Union;
            else throw ConfigError("scoring: expected per_day or union, got '" + v + "'");
          },
          [](const RunConfig& c) { return std::string(c.scoring == harness::Scoring::PerDay ? "per_day" : "union"); }},
      Key{"run", "output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
          [](const RunConfig& c) { return c.output_dir; }},
      Key{"run", "seed", [](RunConfig& c, const std::string& v) { c.seed = to_count("seed", v); },
          [](const RunConfig& c) { return std::to_string(c.seed); }},
      DP_COUNT("run", threads, threads),
      DP_BOOL("run", write_text, write_text),
      DP_BOOL("run", write_samples, write_samples),
      DP_COUNT("run", probe_samples, probe_samples),
  };
  return table;
}

#undef DP_COUNT
#undef DP_REAL
#undef DP_BOOL

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Sets one key. `section` may be empty; otherwise it must be the key's own.
inline void set_config_value(RunConfig& config, const std::string& section, const std::string& key,
                             const std::string& value) {
  for (const auto& k : detail::keys()) {
    if (key != k.name) continue;
    if (!section.empty() && section != k.section) {
      throw ConfigError("key '" + key + "' belongs in [" + k.section + "], not [" + section + "]");
    }
    k.set(config, value);
    return;
  }
  throw ConfigError("unknown key '" + key + "'");
}

/// Line-oriented `key = value` (or `key: value`) text with optional
/// `[section]` headers; `#` and `;` start comments. Missing keys keep their
/// defaults.
inline RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("unterminated section header");
        section = detail::trim(line.substr(1, line.size() - 2));
        bool known = false;
        for (const auto& k : detail::keys()) known = known || section == k.section;
        if (!known) throw ConfigError("unknown section [" + section + "]");
        continue;
      }
      const auto sep = line.find_first_of("=:");
      if (sep == std::string::npos) throw ConfigError("expected 'key = value'");
      set_config_value(config, section, detail::trim(line.substr(0, sep)), detail::trim(line.substr(sep + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  return parse_config(in);
}

/// Every key with its effective value, grouped by section; parses back to
/// the same configuration.
inline void write_resolved_config(std::ostream& out, const RunConfig& config) {
  std::string section;
  for (const auto& k : detail::keys()) {
    if (section != k.section) {
      if (!section.empty()) out << '\n';
      section = k.section;
      out << '[' << section << "]\n";
    }
    out << k.name << " = " << k.get(config) << '\n';
  }
}

}  // namespace dealerpred::cli
