#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dealerpred/errors.hpp"
#include "dealerpred/market/samples.hpp"
#include "dealerpred/models/model.hpp"

namespace dealerpred::harness {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Zero denominators give 0.
inline Prf micro_prf(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  Prf r;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

struct Confusion {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  void add(bool predicted, bool actual) {
    if (predicted) {
      ++(actual ? tp : fp);
    } else {
      ++(actual ? fn : tn);
    }
  }

  /// Cellwise over two equally shaped binary grids.
  void add(const market::BinaryMatrix& predicted, const market::BinaryMatrix& actual) {
    if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols()) {
      throw DimensionError("prediction grid " + std::to_string(predicted.rows()) + "x" +
                           std::to_string(predicted.cols()) + " vs target " + std::to_string(actual.rows()) + "x" +
                           std::to_string(actual.cols()));
    }
    for (std::size_t i = 0; i < predicted.cells().size(); ++i) add(predicted.cells()[i] != 0, actual.cells()[i] != 0);
  }

  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }

  std::uint64_t total() const { return tp + fp + fn + tn; }
  Prf scores() const { return micro_prf(tp, fp, fn); }
  bool operator==(const Confusion&) const = default;
};

enum class Scoring {
  PerDay,  // every output day scored against its own target day
  Union    // OR over output days scored against the OR of target days
};

/// Micro-averaged scores of one model, optionally broken down by cluster.
struct EvalReport {
  std::string model;
  std::string granularity;
  Confusion counts;
  std::map<std::size_t, Confusion> clusters;

  Prf scores() const { return counts.scores(); }
};

inline market::BinaryMatrix union_of_days(const market::BinaryMatrix& days) {
  market::BinaryMatrix out(1, days.cols());
  for (std::size_t r = 0; r < days.rows(); ++r) {
    for (std::size_t c = 0; c < days.cols(); ++c) {
      if (days.at(r, c)) out.set(0, c);
    }
  }
  return out;
}

inline Confusion score_sample(const models::SequenceModel& model, const market::Sample& sample, double threshold,
                              Scoring scoring = Scoring::PerDay) {
  const auto predicted = model.predict(sample.input(), threshold);
  const auto actual = sample.target_days();
  Confusion c;
  if (scoring == Scoring::Union) {
    c.add(union_of_days(predicted), union_of_days(actual));
  } else {
    c.add(predicted, actual);
  }
  return c;
}

inline EvalReport evaluate(const models::SequenceModel& model, const std::vector<market::Sample>& test,
                           double threshold = 0.5, Scoring scoring = Scoring::PerDay) {
  if (test.empty()) throw ContractError("evaluate: empty test set");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0,1)");
  EvalReport report;
  report.model = std::string(models::to_string(model.kind()));
  for (const auto& s : test) report.counts += score_sample(model, s, threshold, scoring);
  return report;
}

}  // namespace dealerpred::harness
