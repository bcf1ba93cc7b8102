#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <tuple>
#include <vector>

#include "dealerpred/errors.hpp"
#include "dealerpred/market/records.hpp"
#include "dealerpred/random.hpp"

namespace dealerpred::market {

enum class Archetype { Periodic, Sparse, Dense };

/// Parameters of the synthetic dealer market.
///
/// Periodic dealers trade a fixed bond set, each bond on a fixed side,
/// every `period` days. Sparse dealers trade on a day with probability
/// `sparse_day_rate`, touching 1..sparse_max_trades random bonds. Dense
/// dealers draw a working set of `dense_breadth` bonds and trade each one on
/// any day with probability `dense_rate`.
///
/// Amendments model reporting errors layered on the true trade stream: a
/// spurious report followed by its cancellation, or a garbled report
/// followed by a correction carrying the true fields. Cleaning them
/// recovers the true stream exactly.
struct MarketSpec {
  std::uint32_t days = 249;
  std::size_t bonds = 500;

  std::size_t periodic_dealers = 60;
  std::size_t sparse_dealers = 80;
  std::size_t dense_dealers = 60;

  std::size_t period_min = 2;
  std::size_t period_max = 5;
  std::size_t periodic_set_min = 2;
  std::size_t periodic_set_max = 6;
  double periodic_buy_fraction = 0.5;
  bool periodic_random_phase = true;

  double sparse_day_rate = 0.05;
  std::size_t sparse_max_trades = 2;

  std::size_t dense_breadth = 100;
  double dense_rate = 0.1;

  double inter_dealer_fraction = 0.41;
  double cancellation_rate = 0.02;
  double correction_rate = 0.01;

  std::uint64_t seed = 0;

  std::size_t dealer_count() const { return periodic_dealers + sparse_dealers + dense_dealers; }

  void validate() const {
    auto rate = [](double r, const char* name) {
      if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1]");
    };
    rate(periodic_buy_fraction, "periodic_buy_fraction");
    rate(sparse_day_rate, "sparse_day_rate");
    rate(dense_rate, "dense_rate");
    rate(inter_dealer_fraction, "inter_dealer_fraction");
    rate(cancellation_rate, "cancellation_rate");
    rate(correction_rate, "correction_rate");
    if (days == 0) throw ConfigError("days must be at least 1");
    if (dealer_count() > 0 && bonds == 0) throw ConfigError("bonds must be at least 1 when dealers exist");
    if (period_min == 0 || period_min > period_max) throw ConfigError("need 1 <= period_min <= period_max");
    if (periodic_set_min == 0 || periodic_set_min > periodic_set_max) {
      throw ConfigError("need 1 <= periodic_set_min <= periodic_set_max");
    }
    if (periodic_dealers > 0 && periodic_set_max > bonds) throw ConfigError("periodic_set_max exceeds bonds");
    if (sparse_dealers > 0 && sparse_max_trades == 0) throw ConfigError("sparse_max_trades must be at least 1");
    if (dense_dealers > 0 && (dense_breadth == 0 || dense_breadth > bonds)) {
      throw ConfigError("dense_breadth must lie in [1, bonds]");
    }
  }
};

inline std::string dealer_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "D%04zu", index);
  return buf;
}

inline std::string bond_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "B%05zu", index);
  return buf;
}

/// Archetype of each generated dealer, in dealer-index order.
inline std::vector<std::pair<std::string, Archetype>> dealer_archetypes(const MarketSpec& spec) {
  std::vector<std::pair<std::string, Archetype>> out;
  for (std::size_t i = 0; i < spec.dealer_count(); ++i) {
    Archetype a = i < spec.periodic_dealers                         ? Archetype::Periodic
                  : i < spec.periodic_dealers + spec.sparse_dealers ? Archetype::Sparse
                                                                    : Archetype::Dense;
    out.emplace_back(dealer_name(i), a);
  }
  return out;
}

namespace detail {

struct TrueTrade {
  std::uint32_t day;
  std::size_t dealer;
  std::size_t bond;
  Side side;
  Counterparty counterparty;
};

inline std::vector<std::size_t> distinct_bonds(Rng& rng, std::size_t universe, std::size_t count) {
  std::vector<std::size_t> all(universe);
  for (std::size_t i = 0; i < universe; ++i) all[i] = i;
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng.below(universe - i)]);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

inline std::vector<TrueTrade> dealer_trades(const MarketSpec& spec, std::size_t dealer, Archetype kind) {
  Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(dealer)));
  std::vector<TrueTrade> trades;
  auto counterparty = [&] {
    return rng.bernoulli(spec.inter_dealer_fraction) ? Counterparty::Dealer : Counterparty::Client;
  };
  switch (kind) {
    case Archetype::Periodic: {
      const std::size_t period = rng.between(spec.period_min, spec.period_max);
      const std::size_t set_size = rng.between(spec.periodic_set_min, spec.periodic_set_max);
      const std::size_t phase = spec.periodic_random_phase ? rng.below(period) : 0;
      const auto set = distinct_bonds(rng, spec.bonds, set_size);
      std::vector<Side> sides;
      for (std::size_t i = 0; i < set.size(); ++i) {
        sides.push_back(rng.bernoulli(spec.periodic_buy_fraction) ? Side::Buy : Side::Sell);
      }
      for (std::size_t day = phase; day < spec.days; day += period) {
        for (std::size_t i = 0; i < set.size(); ++i) {
          trades.push_back({static_cast<std::uint32_t>(day), dealer, set[i], sides[i], counterparty()});
        }
      }
      break;
    }
    case Archetype::Sparse: {
      for (std::uint32_t day = 0; day < spec.days; ++day) {
        if (!rng.bernoulli(spec.sparse_day_rate)) continue;
        const std::size_t n = rng.between(1, spec.sparse_max_trades);
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t bond = rng.below(spec.bonds);
          const Side side = rng.bernoulli(0.5) ? Side::Buy : Side::Sell;
          trades.push_back({day, dealer, bond, side, counterparty()});
        }
      }
      break;
    }
    case Archetype::Dense: {
      const auto set = distinct_bonds(rng, spec.bonds, spec.dense_breadth);
      for (std::uint32_t day = 0; day < spec.days; ++day) {
        for (std::size_t bond : set) {
          if (!rng.bernoulli(spec.dense_rate)) continue;
          const Side side = rng.bernoulli(0.5) ? Side::Buy : Side::Sell;
          trades.push_back({day, dealer, bond, side, counterparty()});
        }
      }
      break;
    }
  }
  return trades;
}

}  // namespace detail

/// Deterministic under `spec.seed`. Records are ordered by day, then dealer,
/// then bond; every amendment follows the report it targets.
inline std::vector<TradeRecord> generate_synthetic_market(const MarketSpec& spec) {
  spec.validate();
  std::vector<detail::TrueTrade> trades;
  const auto archetypes = dealer_archetypes(spec);
  for (std::size_t d = 0; d < archetypes.size(); ++d) {
    auto mine = detail::dealer_trades(spec, d, archetypes[d].second);
    trades.insert(trades.end(), mine.begin(), mine.end());
  }
  std::stable_sort(trades.begin(), trades.end(), [](const auto& a, const auto& b) {
    return std::tie(a.day, a.dealer, a.bond, a.side) < std::tie(b.day, b.dealer, b.bond, b.side);
  });

  // Separate stream so the true trades do not depend on amendment rates.
  Rng noise(derive_seed(spec.seed, "amendments"));
  std::vector<TradeRecord> records;
  records.reserve(trades.size());
  auto to_record = [&](const detail::TrueTrade& t) {
    TradeRecord r;
    r.day = t.day;
    r.dealer_id = dealer_name(t.dealer);
    r.bond_id = bond_name(t.bond);
    r.side = t.side;
    r.counterparty = t.counterparty;
    return r;
  };
  auto other_bond = [&](std::size_t bond) {
    if (spec.bonds == 1) return bond;
    const std::size_t shift = 1 + noise.below(spec.bonds - 1);
    return (bond + shift) % spec.bonds;
  };
  for (const auto& t : trades) {
    if (noise.bernoulli(spec.correction_rate)) {
      TradeRecord garbled = to_record(t);
      garbled.bond_id = bond_name(other_bond(t.bond));
      records.push_back(garbled);
      TradeRecord fix = to_record(t);
      fix.status = Status::Correction;
      fix.ref_record = records.size() - 1;
      records.push_back(fix);
    } else {
      records.push_back(to_record(t));
    }
    if (noise.bernoulli(spec.cancellation_rate)) {
      TradeRecord spurious = to_record(t);
      spurious.bond_id = bond_name(noise.below(spec.bonds));
      spurious.side = noise.bernoulli(0.5) ? Side::Buy : Side::Sell;
      records.push_back(spurious);
      TradeRecord cancel = spurious;
      cancel.status = Status::Cancellation;
      cancel.ref_record = records.size() - 1;
      records.push_back(cancel);
    }
  }
  return records;
}

}  // namespace dealerpred::market
