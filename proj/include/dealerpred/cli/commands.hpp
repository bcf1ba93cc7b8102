#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dealerpred/cli/config.hpp"
#include "dealerpred/clustering/features.hpp"
#include "dealerpred/clustering/kmeans.hpp"
#include "dealerpred/harness/granularity.hpp"
#include "dealerpred/harness/layer_stats.hpp"
#include "dealerpred/market/otcf.hpp"
#include "dealerpred/market/records.hpp"
#include "dealerpred/models/checkpoint.hpp"

namespace dealerpred::cli {

namespace fs = std::filesystem;

/// A stage's input file is absent; the message names it.
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kMissingArtifact = 2, kNumericFailure = 3 };

/// File layout of a run directory.
struct RunPaths {
  fs::path root;

  fs::path resolved_config() const { return root / "config.resolved"; }
  fs::path records() const { return root / "records.csv"; }
  fs::path filter_warnings() const { return root / "filter_warnings.txt"; }
  fs::path vocabulary() const { return root / "vocab.csv"; }
  fs::path histories() const { return root / "histories.otcf"; }
  fs::path histories_text() const { return root / "histories.txt"; }
  fs::path samples() const { return root / "samples.otcf"; }
  fs::path samples_text() const { return root / "samples.txt"; }
  fs::path features() const { return root / "features.csv"; }
  fs::path assignment() const { return root / "assignment.csv"; }
  fs::path checkpoints() const { return root / "checkpoints"; }
  fs::path checkpoint_index() const { return checkpoints() / "index.csv"; }
  fs::path report() const { return root / "report.csv"; }
  fs::path compare_grid() const { return root / "compare.csv"; }
  fs::path compare_report() const { return root / "compare_report.csv"; }
  fs::path stats() const { return root / "stats.csv"; }
};

struct CommandOptions {
  std::optional<fs::path> checkpoint;  // `stats`: one checkpoint stem instead of the index
  std::ostream* log = &std::cerr;
};

namespace detail {

inline std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline std::ifstream open_in(const fs::path& path, const std::string& produced_by, bool binary = false) {
  if (!fs::exists(path)) throw MissingArtifact("missing " + path.string() + " (run '" + produced_by + "' first)");
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

struct Dataset {
  std::vector<market::DealerHistory> histories;
  market::OtcfHeader header;
};

inline Dataset load_histories(const RunPaths& paths) {
  auto in = open_in(paths.histories(), "gen", true);
  Dataset d;
  d.histories = market::read_histories(in, &d.header);
  return d;
}

inline clustering::ClusterAssignment load_assignment(const RunPaths& paths, std::size_t k) {
  auto in = open_in(paths.assignment(), "cluster");
  return clustering::read_assignment_csv(in, k);
}

inline std::vector<std::size_t> labels_for(const std::vector<harness::DealerSamples>& dealers,
                                           const clustering::ClusterAssignment& a) {
  const auto map = a.as_map();
  std::vector<std::size_t> labels;
  for (const auto& d : dealers) {
    auto it = map.find(d.dealer_id);
    if (it == map.end()) throw ContractError("dealer " + d.dealer_id + " missing from assignment.csv");
    labels.push_back(it->second);
  }
  return labels;
}

struct IndexEntry {
  std::string group;
  std::vector<std::string> dealers;
};

inline std::vector<IndexEntry> read_index(const RunPaths& paths) {
  if (!fs::exists(paths.checkpoint_index())) {
    throw MissingArtifact("missing checkpoint " + paths.checkpoint_index().string() + " (run 'train' first)");
  }
  std::ifstream in(paths.checkpoint_index());
  std::vector<IndexEntry> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed checkpoint index line: " + line);
    IndexEntry e{line.substr(0, comma), {}};
    std::istringstream ids(line.substr(comma + 1));
    for (std::string id; ids >> id;) e.dealers.push_back(id);
    out.push_back(std::move(e));
  }
  return out;
}

inline std::unique_ptr<models::SequenceModel> load_group_model(const RunPaths& paths, const std::string& group) {
  const fs::path stem = paths.checkpoints() / group;
  if (!fs::exists(stem.string() + ".manifest") || !fs::exists(stem.string() + ".bin")) {
    throw MissingArtifact("missing checkpoint " + stem.string() + ".manifest/.bin (run 'train' first)");
  }
  return models::load_checkpoint(stem);
}

inline void write_config_echo(const RunPaths& paths, const RunConfig& config) {
  fs::create_directories(paths.root);
  auto out = open_out(paths.resolved_config());
  write_resolved_config(out, config);
}

}  // namespace detail

/// Synthetic market → records.csv; cleaning and filtering → vocab.csv and
/// histories.otcf (plus optional text and sample files).
inline void command_gen(const RunConfig& config, const CommandOptions& options = {}) {
  const RunPaths paths{config.output_dir};
  detail::write_config_echo(paths, config);
  const auto records = market::generate_synthetic_market(config.resolved_market());
  {
    auto out = detail::open_out(paths.records());
    market::write_records_csv(out, records);
  }
  const auto filtered = market::apply_trade_filters(records, config.top_dealers, config.top_bonds, config.bond_filter);
  {
    auto out = detail::open_out(paths.filter_warnings());
    for (const auto& w : filtered.warnings) out << w << '\n';
  }
  if (filtered.bonds.empty()) throw ConfigError("filters left no trades; relax top_dealers/top_bonds/bond_filter");
  const market::Vocabulary vocab(filtered.bonds);
  {
    auto out = detail::open_out(paths.vocabulary());
    for (const auto& b : vocab.bonds()) out << b << '\n';
  }
  const auto histories = market::build_histories(filtered.records, vocab, config.market.days, filtered.dealers);
  const auto days = config.market.days;
  const auto v = static_cast<std::uint32_t>(vocab.size());
  {
    auto out = detail::open_out(paths.histories(), true);
    market::write_histories(out, histories, days, v);
  }
  if (config.write_text) {
    auto out = detail::open_out(paths.histories_text());
    market::write_histories_text(out, histories, days, v);
  }
  if (config.write_samples) {
    std::vector<market::Sample> all;
    for (const auto& h : histories) {
      auto s = market::windowize(h, config.t_in, config.t_out, config.stride);
      all.insert(all.end(), s.begin(), s.end());
    }
    auto out = detail::open_out(paths.samples(), true);
    market::write_samples(out, all, days, v);
    if (config.write_text) {
      auto text = detail::open_out(paths.samples_text());
      market::write_samples_text(text, all, days, v);
    }
  }
  *options.log << "gen: " << records.size() << " records, " << histories.size() << " dealers, " << vocab.size()
               << " bonds\n";
}

/// Activity features over the training interval → assignment.csv.
inline void command_cluster(const RunConfig& config, const CommandOptions& options = {}) {
  const RunPaths paths{config.output_dir};
  detail::write_config_echo(paths, config);
  const auto data = detail::load_histories(paths);
  const std::size_t boundary = market::split_boundary(data.header.days, config.train_fraction);
  const auto features = clustering::compute_dealer_features(data.histories, boundary);
  const auto assignment = clustering::order_clusters(
      clustering::kmeans_cluster(features, config.clusters, config.cluster_seed(), config.cluster_max_iter), features);
  {
    auto out = detail::open_out(paths.features());
    out << "dealer_id,total_trades,distinct_bonds,active_day_fraction,buy_ratio,mean_trades_per_active_day\n";
    out << std::setprecision(10);
    for (const auto& f : features) {
      out << f.dealer_id << ',' << f.total_trades << ',' << f.distinct_bonds << ',' << f.active_day_fraction << ','
          << f.buy_ratio << ',' << f.mean_trades_per_active_day << '\n';
    }
  }
  auto out = detail::open_out(paths.assignment());
  clustering::write_assignment_csv(out, assignment);
  for (const auto& f : features) {
    if (f.inactive) *options.log << "cluster: dealer " << f.dealer_id << " has no trades before day " << boundary << '\n';
  }
  if (assignment.degenerate) *options.log << "cluster: fewer populated clusters than requested\n";
}

/// One model per training group → checkpoints/<group>.{manifest,bin},
/// checkpoints/<group>.loss.csv and checkpoints/index.csv.
inline void command_train(const RunConfig& config, const CommandOptions& options = {}) {
  const RunPaths paths{config.output_dir};
  detail::write_config_echo(paths, config);
  const auto data = detail::load_histories(paths);
  const auto dealers = harness::prepare_dealer_samples(data.histories, config.t_in, config.t_out, config.stride,
                                                       config.train_fraction);
  std::vector<std::size_t> labels;
  if (config.granularity == harness::Granularity::Cluster) {
    labels = detail::labels_for(dealers, detail::load_assignment(paths, config.clusters));
  }
  std::vector<std::string> ids;
  for (const auto& d : dealers) ids.push_back(d.dealer_id);
  const auto groups = harness::training_groups(config.granularity, ids, labels, config.clusters);
  fs::create_directories(paths.checkpoints());

  const auto model_config = config.resolved_model(data.header.vocab);
  const auto spec = config.resolved_train();
  std::vector<bool> trained(groups.size(), false);
  harness::run_parallel(groups.size(), config.threads, [&](std::size_t gi) {
    std::vector<market::Sample> train_set;
    for (std::size_t i : groups[gi].members) {
      train_set.insert(train_set.end(), dealers[i].train.begin(), dealers[i].train.end());
    }
    if (train_set.empty()) return;
    auto model = models::build_model(model_config);
    const auto result = harness::train(*model, train_set, spec);
    const fs::path stem = paths.checkpoints() / groups[gi].name;
    models::save_checkpoint(*model, stem);
    auto loss = detail::open_out(stem.string() + ".loss.csv");
    harness::write_loss_curve_csv(loss, result);
    trained[gi] = true;
  });

  auto index = detail::open_out(paths.checkpoint_index());
  index << "group,dealers\n";
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    if (!trained[gi]) {
      *options.log << "train: group " << groups[gi].name << " has no training samples; skipped\n";
      continue;
    }
    index << groups[gi].name << ',';
    for (std::size_t n = 0; n < groups[gi].members.size(); ++n) index << (n ? " " : "") << ids[groups[gi].members[n]];
    index << '\n';
  }
}

/// Scores every checkpoint on its dealers' test windows → report.csv.
inline void command_eval(const RunConfig& config, const CommandOptions& = {}) {
  const RunPaths paths{config.output_dir};
  detail::write_config_echo(paths, config);
  const auto index = detail::read_index(paths);
  const auto data = detail::load_histories(paths);
  const auto assignment = detail::load_assignment(paths, config.clusters);
  const auto dealers = harness::prepare_dealer_samples(data.histories, config.t_in, config.t_out, config.stride,
                                                       config.train_fraction);
  const auto labels = detail::labels_for(dealers, assignment);
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < dealers.size(); ++i) position.emplace(dealers[i].dealer_id, i);

  std::vector<harness::Confusion> per_dealer(dealers.size());
  std::string kind;
  std::vector<std::unique_ptr<models::SequenceModel>> loaded(index.size());
  for (std::size_t g = 0; g < index.size(); ++g) loaded[g] = detail::load_group_model(paths, index[g].group);
  harness::run_parallel(index.size(), config.threads, [&](std::size_t g) {
    for (const auto& id : index[g].dealers) {
      auto it = position.find(id);
      if (it == position.end()) throw ContractError("checkpoint index names unknown dealer " + id);
      for (const auto& s : dealers[it->second].test) {
        per_dealer[it->second] +=
            harness::score_sample(*loaded[g], s, config.train.threshold, config.scoring);
      }
    }
  });
  harness::EvalReport report;
  report.model = index.empty() ? std::string(models::to_string(config.model.kind))
                               : std::string(models::to_string(loaded.front()->kind()));
  report.granularity = harness::to_string(config.granularity);
  for (std::size_t c = 0; c < config.clusters; ++c) report.clusters[c] = harness::Confusion{};
  for (std::size_t i = 0; i < dealers.size(); ++i) {
    report.clusters[labels[i]] += per_dealer[i];
    report.counts += per_dealer[i];
  }
  auto out = detail::open_out(paths.report());
  harness::write_report_csv(out, {report});
}

/// All eight models under the configured granularity → compare.csv (F1 per
/// cluster plus pooled "avg") and compare_report.csv (full counts).
inline void command_compare(const RunConfig& config, const CommandOptions& options = {}) {
  const RunPaths paths{config.output_dir};
  detail::write_config_echo(paths, config);
  const auto data = detail::load_histories(paths);
  const auto assignment = detail::load_assignment(paths, config.clusters);
  const auto dealers = harness::prepare_dealer_samples(data.histories, config.t_in, config.t_out, config.stride,
                                                       config.train_fraction);
  std::vector<harness::EvalReport> reports;
  std::vector<std::string> warnings;
  for (models::ModelKind kind : models::kAllModelKinds) {
    auto model_config = config.resolved_model(data.header.vocab);
    model_config.kind = kind;
    *options.log << "compare: " << models::to_string(kind) << '\n';
    auto r = harness::run_granularity_experiment(model_config, dealers, assignment, config.resolved_train(),
                                                 {config.granularity}, config.threads, config.scoring);
    reports.insert(reports.end(), r.reports.begin(), r.reports.end());
    for (auto& w : r.warnings) warnings.push_back(std::string(models::to_string(kind)) + " " + w);
  }
  {
    auto out = detail::open_out(paths.compare_report());
    harness::write_report_csv(out, reports, warnings);
  }
  auto out = detail::open_out(paths.compare_grid());
  out << "model";
  for (std::size_t c = 0; c < config.clusters; ++c) out << ",cluster" << c;
  out << ",avg\n" << std::fixed << std::setprecision(6);
  for (const auto& r : reports) {
    out << r.model;
    for (const auto& [label, counts] : r.clusters) out << ',' << counts.scores().f1;
    out << ',' << r.scores().f1 << '\n';
  }
}

/// Per-layer activation moments of Transformer checkpoints → stats.csv.
inline void command_stats(const RunConfig& config, const CommandOptions& options = {}) {
  const RunPaths paths{config.output_dir};
  detail::write_config_echo(paths, config);
  const auto data = detail::load_histories(paths);
  const auto dealers = harness::prepare_dealer_samples(data.histories, config.t_in, config.t_out, config.stride,
                                                       config.train_fraction);
  auto probe_for = [&](const std::vector<std::string>& ids) {
    std::vector<market::Sample> probe;
    for (const auto& d : dealers) {
      if (!ids.empty() && std::find(ids.begin(), ids.end(), d.dealer_id) == ids.end()) continue;
      for (const auto& s : d.test) {
        if (probe.size() < config.probe_samples) probe.push_back(s);
      }
    }
    if (probe.empty()) throw ContractError("stats: no test windows to probe");
    return probe;
  };

  std::vector<std::pair<std::string, harness::LayerStats>> blocks;
  if (options.checkpoint) {
    const fs::path stem = *options.checkpoint;
    if (!fs::exists(stem.string() + ".manifest")) {
      throw MissingArtifact("missing checkpoint " + stem.string() + ".manifest");
    }
    auto model = models::load_checkpoint(stem);
    blocks.emplace_back(stem.filename().string(), harness::layer_signal_stats(*model, probe_for({})));
  } else {
    for (const auto& entry : detail::read_index(paths)) {
      auto model = detail::load_group_model(paths, entry.group);
      blocks.emplace_back(entry.group, harness::layer_signal_stats(*model, probe_for(entry.dealers)));
    }
  }
  auto out = detail::open_out(paths.stats());
  out << "model,layer,mean,variance\n";
  for (auto& [group, stats] : blocks) {
    stats.tag = group;
    out << "# checkpoint " << group << '\n';
    harness::write_layer_stats_csv(out, {stats}, false);
  }
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"gen", "cluster", "train", "eval", "compare", "stats"};
  return names;
}

/// Runs one stage and maps failures onto exit codes, printing the
/// diagnostic to `options.log`.
inline int run_command(const std::string& command, const RunConfig& config, const CommandOptions& options = {}) {
  try {
    if (command == "gen") command_gen(config, options);
    else if (command == "cluster") command_cluster(config, options);
    else if (command == "train") command_train(config, options);
    else if (command == "eval") command_eval(config, options);
    else if (command == "compare") command_compare(config, options);
    else if (command == "stats") command_stats(config, options);
    else throw ConfigError("unknown command '" + command + "'");
    return kSuccess;
  } catch (const MissingArtifact& e) {
    *options.log << "error: " << e.what() << '\n';
    return kMissingArtifact;
  } catch (const NumericError& e) {
    *options.log << "error: numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception& e) {
    *options.log << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

}  // namespace dealerpred::cli
