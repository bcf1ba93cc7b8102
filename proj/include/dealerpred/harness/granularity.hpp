#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "dealerpred/clustering/kmeans.hpp"
#include "dealerpred/harness/metrics.hpp"
#include "dealerpred/harness/train.hpp"
#include "dealerpred/models/factory.hpp"

namespace dealerpred::harness {

enum class Granularity { Individual, Cluster, Single };

inline std::string to_string(Granularity g) {
  switch (g) {
    case Granularity::Individual: return "individual";
    case Granularity::Cluster: return "cluster";
    case Granularity::Single: return "single";
  }
  return "?";
}

inline Granularity parse_granularity(const std::string& text) {
  for (Granularity g : {Granularity::Individual, Granularity::Cluster, Granularity::Single}) {
    if (to_string(g) == text) return g;
  }
  throw ConfigError("unknown granularity '" + text + "' (expected individual, cluster or single)");
}

/// One dealer's windows, already split at the train/test boundary.
struct DealerSamples {
  std::string dealer_id;
  std::vector<market::Sample> train;
  std::vector<market::Sample> test;
};

inline std::vector<DealerSamples> prepare_dealer_samples(const std::vector<market::DealerHistory>& histories,
                                                         std::size_t t_in, std::size_t t_out, std::size_t stride,
                                                         double train_fraction) {
  std::vector<DealerSamples> out;
  for (const auto& h : histories) {
    auto split = market::split_train_test(market::windowize(h, t_in, t_out, stride), h.day_count(), train_fraction);
    out.push_back({h.dealer_id, std::move(split.train), std::move(split.test)});
  }
  return out;
}

/// Dealers sharing one model: a single dealer, a cluster, or everyone.
struct TrainingGroup {
  std::string name;
  std::vector<std::size_t> members;  // indices into the dealer list
};

/// Groups in a fixed order; empty clusters produce no group. `labels` may
/// be empty unless `g` is Cluster.
inline std::vector<TrainingGroup> training_groups(Granularity g, const std::vector<std::string>& dealer_ids,
                                                  const std::vector<std::size_t>& labels, std::size_t k) {
  std::vector<TrainingGroup> groups;
  switch (g) {
    case Granularity::Individual:
      for (std::size_t i = 0; i < dealer_ids.size(); ++i) groups.push_back({"dealer_" + dealer_ids[i], {i}});
      break;
    case Granularity::Cluster:
      if (labels.size() != dealer_ids.size()) throw ContractError("cluster grouping needs one label per dealer");
      for (std::size_t c = 0; c < k; ++c) groups.push_back({"cluster_" + std::to_string(c), {}});
      for (std::size_t i = 0; i < dealer_ids.size(); ++i) {
        if (labels[i] >= k) throw ContractError("cluster label out of range for " + dealer_ids[i]);
        groups[labels[i]].members.push_back(i);
      }
      break;
    case Granularity::Single:
      groups.push_back({"all", {}});
      for (std::size_t i = 0; i < dealer_ids.size(); ++i) groups.back().members.push_back(i);
      break;
  }
  std::erase_if(groups, [](const TrainingGroup& grp) { return grp.members.empty(); });
  return groups;
}

struct ExperimentResult {
  std::vector<EvalReport> reports;  // one per granularity, clusters 0..k−1 filled
  std::vector<std::string> warnings;
  std::map<Granularity, std::size_t> models_trained;
};

/// Runs `jobs` functions on up to `threads` workers. Each job writes only
/// its own output slot, so results do not depend on scheduling.
inline void run_parallel(std::size_t jobs, std::size_t threads, const std::function<void(std::size_t)>& job) {
  threads = std::max<std::size_t>(1, std::min(threads, jobs));
  if (threads == 1) {
    for (std::size_t i = 0; i < jobs; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Trains one model per group (dealer, cluster, or everyone) with the same
/// model seed, scores every dealer's test windows with its group's model,
/// and pools the counts by cluster label.
inline ExperimentResult run_granularity_experiment(const models::ModelConfig& config,
                                                   const std::vector<DealerSamples>& dealers,
                                                   const clustering::ClusterAssignment& assignment,
                                                   const TrainSpec& spec,
                                                   const std::vector<Granularity>& granularities,
                                                   std::size_t threads = 1, Scoring scoring = Scoring::PerDay) {
  const auto label_of = assignment.as_map();
  std::vector<std::size_t> labels;
  for (const auto& d : dealers) {
    auto it = label_of.find(d.dealer_id);
    if (it == label_of.end()) throw ContractError("dealer " + d.dealer_id + " has no cluster label");
    labels.push_back(it->second);
  }
  const std::size_t k = assignment.k();

  ExperimentResult result;
  for (Granularity g : granularities) {
    std::vector<std::string> ids;
    for (const auto& d : dealers) ids.push_back(d.dealer_id);
    const auto groups = training_groups(g, ids, labels, k);

    std::vector<Confusion> per_dealer(dealers.size());
    std::vector<std::string> group_warning(groups.size());
    std::vector<bool> trained(groups.size(), false);
    run_parallel(groups.size(), threads, [&](std::size_t gi) {
      const auto& members = groups[gi].members;
      std::vector<market::Sample> train_set;
      for (std::size_t i : members) train_set.insert(train_set.end(), dealers[i].train.begin(), dealers[i].train.end());
      if (train_set.empty()) {
        std::string who;
        for (std::size_t i : members) who += (who.empty() ? "" : " ") + dealers[i].dealer_id;
        group_warning[gi] = to_string(g) + ": no training samples for " + who + "; skipped";
        return;
      }
      auto model = models::build_model(config);
      train(*model, train_set, spec);
      trained[gi] = true;
      for (std::size_t i : members) {
        for (const auto& s : dealers[i].test) per_dealer[i] += score_sample(*model, s, spec.threshold, scoring);
      }
    });

    EvalReport report;
    report.model = std::string(models::to_string(config.kind));
    report.granularity = to_string(g);
    for (std::size_t c = 0; c < k; ++c) report.clusters[c] = Confusion{};
    for (std::size_t i = 0; i < dealers.size(); ++i) {
      report.clusters[labels[i]] += per_dealer[i];
      report.counts += per_dealer[i];
    }
    result.reports.push_back(report);
    result.models_trained[g] = static_cast<std::size_t>(std::count(trained.begin(), trained.end(), true));
    for (const auto& w : group_warning) {
      if (!w.empty()) result.warnings.push_back(w);
    }
  }
  return result;
}

/// `model,granularity,cluster,tp,fp,fn,precision,recall,f1` rows, one per
/// (report, cluster); warnings follow as `#` comment lines.
inline void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports,
                             const std::vector<std::string>& warnings = {}, bool header = true) {
  if (header) out << "model,granularity,cluster,tp,fp,fn,precision,recall,f1\n";
  out << std::fixed << std::setprecision(6);
  auto row = [&](const EvalReport& r, const std::string& cluster, const Confusion& c) {
    const Prf p = c.scores();
    out << r.model << ',' << r.granularity << ',' << cluster << ',' << c.tp << ',' << c.fp << ',' << c.fn << ','
        << p.precision << ',' << p.recall << ',' << p.f1 << '\n';
  };
  for (const auto& r : reports) {
    if (r.clusters.empty()) {
      row(r, "all", r.counts);
      continue;
    }
    for (const auto& [label, c] : r.clusters) row(r, std::to_string(label), c);
  }
  for (const auto& w : warnings) out << "# warning: " << w << '\n';
}

}  // namespace dealerpred::harness
