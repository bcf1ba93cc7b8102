#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dealerpred/market/records.hpp"

namespace dealerpred::market {

/// How the bond cap is read: keep the `top_bonds` most active bonds, or
/// drop them and keep the rest.
enum class BondFilter { Retain, Remove };

struct FilterResult {
  std::vector<TradeRecord> records;
  std::vector<std::string> dealers;  // ascending
  std::vector<std::string> bonds;    // ascending
  std::vector<std::string> warnings;
};

/// Deletes cancelled reports and applies corrections. Every surviving
/// record is Normal with no reference. A cancellation or correction whose
/// reference is missing, points forward, or targets a record that is no
/// longer live is dropped alone with a warning.
inline std::vector<TradeRecord> clean_amendments(const std::vector<TradeRecord>& records,
                                                 std::vector<std::string>* warnings = nullptr) {
  std::vector<char> live(records.size(), 0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.status == Status::Normal) {
      live[i] = 1;
      continue;
    }
    const bool valid = r.ref_record && *r.ref_record < i && live[*r.ref_record];
    if (!valid) {
      if (warnings) {
        warnings->push_back("record " + std::to_string(i) + ": " +
                            (r.status == Status::Cancellation ? "cancellation" : "correction") +
                            " references " +
                            (r.ref_record ? "record " + std::to_string(*r.ref_record) : std::string("nothing")) +
                            " which is not a live earlier record; dropped");
      }
      continue;
    }
    live[*r.ref_record] = 0;
    if (r.status == Status::Correction) live[i] = 1;
  }
  std::vector<TradeRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!live[i]) continue;
    TradeRecord r = records[i];
    r.status = Status::Normal;
    r.ref_record.reset();
    out.push_back(std::move(r));
  }
  return out;
}

namespace detail {

// Identifiers ordered by descending count, ties by ascending identifier.
inline std::vector<std::string> ranked(const std::map<std::string, std::size_t>& counts) {
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (auto& [id, n] : items) out.push_back(id);
  return out;
}

}  // namespace detail

/// Cleans amendments, keeps the `top_dealers` dealers with the most
/// records, then applies the bond cap over the surviving records. A cap of
/// 0 disables that stage. Returned dealer and bond sets are those present
/// in the output, which makes the default (Retain) pipeline idempotent.
inline FilterResult apply_trade_filters(const std::vector<TradeRecord>& records, std::size_t top_dealers,
                                        std::size_t top_bonds, BondFilter mode = BondFilter::Retain) {
  FilterResult result;
  std::vector<TradeRecord> cleaned = clean_amendments(records, &result.warnings);

  if (top_dealers > 0) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : cleaned) ++counts[r.dealer_id];
    auto order = detail::ranked(counts);
    if (order.size() > top_dealers) order.resize(top_dealers);
    const std::set<std::string> keep(order.begin(), order.end());
    std::erase_if(cleaned, [&](const TradeRecord& r) { return !keep.contains(r.dealer_id); });
  }

  if (top_bonds > 0) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : cleaned) ++counts[r.bond_id];
    const auto order = detail::ranked(counts);
    std::set<std::string> top(order.begin(), order.begin() + std::min(top_bonds, order.size()));
    if (mode == BondFilter::Retain) {
      std::erase_if(cleaned, [&](const TradeRecord& r) { return !top.contains(r.bond_id); });
    } else {
      std::erase_if(cleaned, [&](const TradeRecord& r) { return top.contains(r.bond_id); });
    }
  }

  std::set<std::string> dealers, bonds;
  for (const auto& r : cleaned) {
    dealers.insert(r.dealer_id);
    bonds.insert(r.bond_id);
  }
  result.records = std::move(cleaned);
  result.dealers.assign(dealers.begin(), dealers.end());
  result.bonds.assign(bonds.begin(), bonds.end());
  return result;
}

}  // namespace dealerpred::market
