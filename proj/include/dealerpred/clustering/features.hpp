#pragma once

#include <array>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "dealerpred/errors.hpp"
#include "dealerpred/market/history.hpp"

namespace dealerpred::clustering {

/// Activity summary of one dealer over days [0, B).
struct DealerFeatures {
  std::string dealer_id;
  double total_trades = 0.0;
  double distinct_bonds = 0.0;
  double active_day_fraction = 0.0;
  double buy_ratio = 0.0;
  double mean_trades_per_active_day = 0.0;
  bool inactive = false;  // no trades before B

  static constexpr std::size_t kDims = 5;

  std::array<double, kDims> vector() const {
    return {total_trades, distinct_bonds, active_day_fraction, buy_ratio, mean_trades_per_active_day};
  }
};

inline DealerFeatures compute_dealer_features(const market::DealerHistory& history, std::size_t boundary) {
  if (boundary > history.day_count()) {
    throw ContractError("feature boundary " + std::to_string(boundary) + " exceeds the " +
                        std::to_string(history.day_count()) + "-day history");
  }
  const std::size_t v = history.vocab_size();
  DealerFeatures f;
  f.dealer_id = history.dealer_id;
  std::size_t buys = 0, total = 0, active_days = 0;
  std::set<std::size_t> bonds;
  for (std::size_t day = 0; day < boundary; ++day) {
    std::size_t today = 0;
    for (std::size_t j = 0; j < 2 * v; ++j) {
      if (!history.days.at(day, j)) continue;
      ++today;
      if (j < v) ++buys;
      bonds.insert(j % v);
    }
    total += today;
    if (today > 0) ++active_days;
  }
  f.total_trades = static_cast<double>(total);
  f.distinct_bonds = static_cast<double>(bonds.size());
  f.active_day_fraction = boundary > 0 ? static_cast<double>(active_days) / static_cast<double>(boundary) : 0.0;
  f.buy_ratio = total > 0 ? static_cast<double>(buys) / static_cast<double>(total) : 0.0;
  f.mean_trades_per_active_day =
      active_days > 0 ? static_cast<double>(total) / static_cast<double>(active_days) : 0.0;
  f.inactive = total == 0;
  return f;
}

inline std::vector<DealerFeatures> compute_dealer_features(const std::vector<market::DealerHistory>& histories,
                                                           std::size_t boundary) {
  std::vector<DealerFeatures> out;
  out.reserve(histories.size());
  for (const auto& h : histories) out.push_back(compute_dealer_features(h, boundary));
  return out;
}

}  // namespace dealerpred::clustering
