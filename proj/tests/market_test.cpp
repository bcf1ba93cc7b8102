#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "dealerpred/market/filters.hpp"
#include "dealerpred/market/generator.hpp"
#include "dealerpred/market/history.hpp"
#include "dealerpred/market/otcf.hpp"
#include "dealerpred/market/records.hpp"
#include "dealerpred/market/samples.hpp"

using namespace dealerpred;
using namespace dealerpred::market;

namespace {

TradeRecord trade(std::uint32_t day, std::string dealer, std::string bond, Side side = Side::Buy) {
  TradeRecord r;
  r.day = day;
  r.dealer_id = std::move(dealer);
  r.bond_id = std::move(bond);
  r.side = side;
  return r;
}

TradeRecord amendment(const TradeRecord& base, Status status, std::size_t ref) {
  TradeRecord r = base;
  r.status = status;
  r.ref_record = ref;
  return r;
}

MarketSpec single_periodic_dealer() {
  MarketSpec spec;
  spec.days = 50;
  spec.bonds = 1;
  spec.periodic_dealers = 1;
  spec.sparse_dealers = 0;
  spec.dense_dealers = 0;
  spec.period_min = spec.period_max = 5;
  spec.periodic_set_min = spec.periodic_set_max = 1;
  spec.periodic_buy_fraction = 1.0;
  spec.periodic_random_phase = false;
  spec.cancellation_rate = 0.0;
  spec.correction_rate = 0.0;
  return spec;
}

}  // namespace

TEST(Generator, ZeroDealersGivesEmptyMarket) {
  MarketSpec spec;
  spec.periodic_dealers = spec.sparse_dealers = spec.dense_dealers = 0;
  EXPECT_TRUE(generate_synthetic_market(spec).empty());
}

TEST(Generator, PeriodicDealerEmitsEveryPeriod) {
  const auto records = generate_synthetic_market(single_periodic_dealer());
  ASSERT_EQ(records.size(), 10u);
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(records[i].day, 5 * i);
    EXPECT_EQ(records[i].side, Side::Buy);
    EXPECT_EQ(records[i].status, Status::Normal);
  }
}

TEST(Generator, DeskScaleCountsStayWithinArchetypeBounds) {
  MarketSpec spec;  // 200 dealers, 500 bonds, 249 days
  spec.cancellation_rate = 0.0;
  spec.correction_rate = 0.0;
  spec.seed = 3;
  const auto records = generate_synthetic_market(spec);
  std::map<std::string, std::size_t> per_dealer;
  for (const auto& r : records) ++per_dealer[r.dealer_id];

  const double d = spec.days;
  for (const auto& [id, kind] : dealer_archetypes(spec)) {
    const double n = static_cast<double>(per_dealer[id]);
    switch (kind) {
      case Archetype::Periodic: {
        // Between set_min·floor(D/p_max) and set_max·ceil(D/p_min) trades.
        EXPECT_GE(n, spec.periodic_set_min * std::floor(d / spec.period_max)) << id;
        EXPECT_LE(n, spec.periodic_set_max * std::ceil(d / spec.period_min)) << id;
        break;
      }
      case Archetype::Sparse: {
        // Active days ~ Binomial(D, rate); 1..max trades each. 6σ band.
        const double mean = d * spec.sparse_day_rate;
        const double sd = std::sqrt(d * spec.sparse_day_rate * (1 - spec.sparse_day_rate));
        EXPECT_LE(n, spec.sparse_max_trades * (mean + 6 * sd)) << id;
        EXPECT_GE(n, std::max(0.0, mean - 6 * sd)) << id;
        break;
      }
      case Archetype::Dense: {
        const double trials = d * spec.dense_breadth;
        const double mean = trials * spec.dense_rate;
        const double sd = std::sqrt(trials * spec.dense_rate * (1 - spec.dense_rate));
        EXPECT_NEAR(n, mean, 6 * sd) << id;
        break;
      }
    }
  }
  EXPECT_EQ(dealer_archetypes(spec).size(), 200u);
}

TEST(Generator, SameSeedSameRecords) {
  MarketSpec spec;
  spec.periodic_dealers = 5;
  spec.sparse_dealers = 5;
  spec.dense_dealers = 2;
  spec.seed = 11;
  EXPECT_EQ(generate_synthetic_market(spec), generate_synthetic_market(spec));
  MarketSpec other = spec;
  other.seed = 12;
  EXPECT_NE(generate_synthetic_market(spec), generate_synthetic_market(other));
}

TEST(Generator, AmendmentsReferenceEarlierRecords) {
  MarketSpec spec;
  spec.periodic_dealers = 4;
  spec.sparse_dealers = 4;
  spec.dense_dealers = 2;
  spec.cancellation_rate = 0.2;
  spec.correction_rate = 0.1;
  const auto records = generate_synthetic_market(spec);
  std::size_t amendments = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].status == Status::Normal) continue;
    ++amendments;
    ASSERT_TRUE(records[i].ref_record.has_value());
    EXPECT_LT(*records[i].ref_record, i);
    EXPECT_EQ(records[*records[i].ref_record].status, Status::Normal);
  }
  EXPECT_GT(amendments, 0u);
}

TEST(Generator, CleaningRecoversTheTrueStream) {
  MarketSpec noisy;
  noisy.periodic_dealers = 6;
  noisy.sparse_dealers = 6;
  noisy.dense_dealers = 3;
  noisy.cancellation_rate = 0.15;
  noisy.correction_rate = 0.1;
  noisy.seed = 5;
  MarketSpec clean = noisy;
  clean.cancellation_rate = clean.correction_rate = 0.0;
  auto strip = [](std::vector<TradeRecord> rs) {
    for (auto& r : rs) r.counterparty = Counterparty::Client;
    return rs;
  };
  EXPECT_EQ(strip(clean_amendments(generate_synthetic_market(noisy))), strip(generate_synthetic_market(clean)));
}

TEST(Generator, RejectsInvalidRates) {
  MarketSpec spec;
  spec.dense_rate = 1.5;
  EXPECT_THROW(generate_synthetic_market(spec), ConfigError);
}

TEST(Records, CsvRoundTrip) {
  MarketSpec spec;
  spec.periodic_dealers = 2;
  spec.sparse_dealers = 2;
  spec.dense_dealers = 1;
  spec.dense_breadth = 5;
  spec.cancellation_rate = 0.3;
  spec.correction_rate = 0.3;
  const auto records = generate_synthetic_market(spec);
  std::stringstream io;
  write_records_csv(io, records);
  EXPECT_EQ(read_records_csv(io), records);
}

TEST(Records, CsvLineFormat) {
  std::vector<TradeRecord> rs{trade(3, "D1", "B9", Side::Sell)};
  rs.push_back(amendment(rs[0], Status::Cancellation, 0));
  std::ostringstream out;
  write_records_csv(out, rs);
  EXPECT_EQ(out.str(), "3,D1,B9,S,C,N,\n3,D1,B9,S,C,X,0\n");
  std::istringstream bad("1,D1,B1,Q,C,N,\n");
  EXPECT_THROW(read_records_csv(bad), std::runtime_error);
}

TEST(Filters, CancellationRemovesBothRecords) {
  std::vector<TradeRecord> rs{trade(0, "D1", "B1"), trade(1, "D1", "B2")};
  rs.push_back(amendment(rs[0], Status::Cancellation, 0));
  const auto result = apply_trade_filters(rs, 0, 0);
  ASSERT_EQ(result.records.size(), 1u);
  EXPECT_EQ(result.records[0].bond_id, "B2");
  EXPECT_TRUE(result.warnings.empty());
}

TEST(Filters, CorrectionReplacesReferent) {
  std::vector<TradeRecord> rs{trade(0, "D1", "B1")};
  TradeRecord fix = amendment(trade(0, "D1", "B7", Side::Sell), Status::Correction, 0);
  rs.push_back(fix);
  const auto result = apply_trade_filters(rs, 0, 0);
  ASSERT_EQ(result.records.size(), 1u);
  EXPECT_EQ(result.records[0].bond_id, "B7");
  EXPECT_EQ(result.records[0].status, Status::Normal);
  EXPECT_FALSE(result.records[0].ref_record.has_value());
}

TEST(Filters, DanglingReferenceDropsOnlyTheAmendment) {
  std::vector<TradeRecord> rs{trade(0, "D1", "B1")};
  rs.push_back(amendment(trade(0, "D1", "B2"), Status::Cancellation, 17));
  rs.push_back(amendment(trade(0, "D1", "B3"), Status::Correction, 2));  // self reference
  const auto result = apply_trade_filters(rs, 0, 0);
  ASSERT_EQ(result.records.size(), 1u);
  EXPECT_EQ(result.records[0].bond_id, "B1");
  EXPECT_EQ(result.warnings.size(), 2u);
}

TEST(Filters, KeepsMostActiveDealers) {
  std::vector<TradeRecord> rs;
  for (int i = 0; i < 5; ++i) rs.push_back(trade(i, "DA", "B1"));
  for (int i = 0; i < 3; ++i) rs.push_back(trade(i, "DB", "B1"));
  rs.push_back(trade(0, "DC", "B1"));
  const auto result = apply_trade_filters(rs, 2, 0);
  EXPECT_EQ(result.dealers, (std::vector<std::string>{"DA", "DB"}));
  EXPECT_EQ(result.records.size(), 8u);
}

TEST(Filters, RankTiesBreakByIdentifier) {
  std::vector<TradeRecord> rs{trade(0, "DZ", "B1"), trade(0, "DA", "B2"), trade(0, "DM", "B3")};
  EXPECT_EQ(apply_trade_filters(rs, 2, 0).dealers, (std::vector<std::string>{"DA", "DM"}));
  EXPECT_EQ(apply_trade_filters(rs, 0, 1).bonds, (std::vector<std::string>{"B1"}));
}

TEST(Filters, GenerousThresholdIsNoOp) {
  std::vector<TradeRecord> rs{trade(0, "D1", "B1"), trade(1, "D2", "B1"), trade(2, "D3", "B2")};
  const auto result = apply_trade_filters(rs, 10, 10);
  EXPECT_EQ(result.dealers, (std::vector<std::string>{"D1", "D2", "D3"}));
  EXPECT_EQ(result.records, rs);
}

TEST(Filters, RemoveModeDropsMostActiveBonds) {
  std::vector<TradeRecord> rs{trade(0, "D1", "B1"), trade(1, "D1", "B1"), trade(2, "D1", "B2")};
  const auto result = apply_trade_filters(rs, 0, 1, BondFilter::Remove);
  EXPECT_EQ(result.bonds, (std::vector<std::string>{"B2"}));
}

TEST(Filters, Idempotent) {
  MarketSpec spec;
  spec.periodic_dealers = 10;
  spec.sparse_dealers = 15;
  spec.dense_dealers = 5;
  spec.bonds = 80;
  spec.dense_breadth = 30;
  spec.cancellation_rate = 0.1;
  spec.correction_rate = 0.05;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    spec.seed = seed;
    const auto once = apply_trade_filters(generate_synthetic_market(spec), 12, 40);
    const auto twice = apply_trade_filters(once.records, 12, 40);
    EXPECT_EQ(once.records, twice.records);
    EXPECT_EQ(once.dealers, twice.dealers);
    EXPECT_EQ(once.bonds, twice.bonds);
  }
}

TEST(Vocabulary, EmptyRecords) { EXPECT_EQ(build_vocabulary({}).size(), 0u); }

TEST(Vocabulary, AscendingIdentifierOrder) {
  const auto vocab = build_vocabulary({trade(0, "D", "b9"), trade(0, "D", "b2")});
  EXPECT_EQ(vocab.index("b2"), 0u);
  EXPECT_EQ(vocab.index("b9"), 1u);
  EXPECT_THROW(vocab.index("b5"), IndexError);
}

TEST(Vocabulary, DuplicatesCollapse) {
  const auto vocab = build_vocabulary({trade(0, "D", "B1"), trade(4, "E", "B1", Side::Sell)});
  EXPECT_EQ(vocab.size(), 1u);
}

TEST(Histories, DealerWithoutRecordsIsAllZero) {
  const auto hs = build_histories({}, Vocabulary({"B1"}), 5, {"D1"});
  ASSERT_EQ(hs.size(), 1u);
  EXPECT_EQ(hs[0].days.count(), 0u);
  EXPECT_EQ(hs[0].days.rows(), 5u);
}

TEST(Histories, BuyPlacement) {
  std::vector<std::string> bonds;
  for (int i = 0; i < 10; ++i) bonds.push_back("B" + std::to_string(i));
  const auto hs = build_histories({trade(7, "D1", "B3")}, Vocabulary(bonds), 12);
  ASSERT_EQ(hs.size(), 1u);
  EXPECT_EQ(hs[0].days.count(), 1u);
  EXPECT_EQ(hs[0].days.at(7, 3), 1);
  EXPECT_EQ(hs[0].days.cols(), 20u);
}

TEST(Histories, BuyAndSellSameDay) {
  const Vocabulary vocab({"B0", "B1", "B2"});
  const auto hs = build_histories({trade(2, "D", "B1"), trade(2, "D", "B1", Side::Sell)}, vocab, 4);
  EXPECT_EQ(hs[0].days.at(2, 1), 1);
  EXPECT_EQ(hs[0].days.at(2, 3 + 1), 1);
  EXPECT_EQ(hs[0].days.count(), 2u);
}

TEST(Histories, UnknownBondOrLateDayThrows) {
  const Vocabulary vocab({"B0"});
  EXPECT_THROW(build_histories({trade(0, "D", "B9")}, vocab, 4), IndexError);
  EXPECT_THROW(build_histories({trade(4, "D", "B0")}, vocab, 4), IndexError);
}

TEST(Histories, CellCountEqualsDistinctTuples) {
  MarketSpec spec;
  spec.periodic_dealers = 5;
  spec.sparse_dealers = 10;
  spec.dense_dealers = 3;
  spec.bonds = 60;
  spec.dense_breadth = 20;
  spec.dense_rate = 0.3;
  spec.sparse_max_trades = 4;
  const auto filtered = apply_trade_filters(generate_synthetic_market(spec), 0, 0);
  const auto vocab = build_vocabulary(filtered.records);
  const auto hs = build_histories(filtered.records, vocab, spec.days);
  std::set<std::tuple<std::string, std::uint32_t, std::string, Side>> tuples;
  for (const auto& r : filtered.records) tuples.emplace(r.dealer_id, r.day, r.bond_id, r.side);
  std::size_t cells = 0;
  for (const auto& h : hs) cells += h.days.count();
  EXPECT_EQ(cells, tuples.size());
}

TEST(Windowing, CountsFollowTheFormula) {
  auto history = std::make_shared<const BinaryMatrix>(20, 4);
  EXPECT_EQ(windowize("D", history, 5, 5, 1).size(), 11u);
  EXPECT_EQ(windowize("D", std::make_shared<const BinaryMatrix>(10, 4), 5, 5).size(), 1u);
  EXPECT_TRUE(windowize("D", std::make_shared<const BinaryMatrix>(9, 4), 5, 5).empty());
  EXPECT_EQ(windowize("D", history, 3, 2, 4).size(), (20u - 5u) / 4u + 1u);
  EXPECT_THROW(windowize("D", history, 0, 2), ConfigError);
}

TEST(Windowing, SlicesReproduceTheSourceHistory) {
  MarketSpec spec;
  spec.days = 40;
  spec.bonds = 12;
  spec.periodic_dealers = 2;
  spec.sparse_dealers = 2;
  spec.dense_dealers = 1;
  spec.dense_breadth = 6;
  const auto filtered = apply_trade_filters(generate_synthetic_market(spec), 0, 0);
  const auto vocab = build_vocabulary(filtered.records);
  for (const auto& h : build_histories(filtered.records, vocab, spec.days)) {
    for (const auto& s : windowize(h, 4, 3, 2)) {
      const auto in = s.input();
      const auto out = s.target_days();
      for (std::size_t t = 0; t < 4; ++t) {
        for (std::size_t j = 0; j < in.cols(); ++j) ASSERT_EQ(in.at(t, j), h.days.at(s.start_day() + t, j));
      }
      const auto u = s.target_union();
      for (std::size_t j = 0; j < out.cols(); ++j) {
        std::uint8_t expect = 0;
        for (std::size_t t = 0; t < 3; ++t) {
          ASSERT_EQ(out.at(t, j), h.days.at(s.start_day() + 4 + t, j));
          expect = std::max(expect, out.at(t, j));
        }
        ASSERT_EQ(u[j], expect);
      }
    }
  }
}

TEST(Split, BoundaryArithmetic) {
  EXPECT_EQ(split_boundary(249, 0.9), 224u);
  EXPECT_THROW(split_boundary(249, 1.0), ConfigError);
  EXPECT_THROW(split_boundary(249, 0.0), ConfigError);
}

TEST(Split, DegenerateFractionEmptiesTrain) {
  auto samples = windowize("D", std::make_shared<const BinaryMatrix>(30, 2), 5, 5);
  const auto split = split_train_test(samples, 30, 0.3);  // boundary 9 < 10
  EXPECT_TRUE(split.train.empty());
  EXPECT_FALSE(split.test.empty());
}

TEST(Split, PartitionsNeverOverlapInTime) {
  for (std::size_t stride : {1u, 2u, 3u}) {
    for (double fraction : {0.5, 0.75, 0.9}) {
      auto samples = windowize("D", std::make_shared<const BinaryMatrix>(60, 2), 5, 3, stride);
      const auto split = split_train_test(samples, 60, fraction);
      std::size_t last_train_end = 0;
      std::size_t first_test_start = 1000;
      for (const auto& s : split.train) last_train_end = std::max(last_train_end, s.end_day());
      for (const auto& s : split.test) first_test_start = std::min(first_test_start, s.start_day());
      EXPECT_LE(last_train_end, split.boundary);
      EXPECT_GE(first_test_start, split.boundary);
      EXPECT_LE(last_train_end, first_test_start);
      EXPECT_LE(split.train.size() + split.test.size(), samples.size());
    }
  }
}

TEST(Otcf, HistoriesBinaryRoundTripAndHeader) {
  MarketSpec spec;
  spec.days = 30;
  spec.bonds = 9;
  spec.periodic_dealers = 3;
  spec.sparse_dealers = 2;
  spec.dense_dealers = 1;
  spec.dense_breadth = 5;
  const auto filtered = apply_trade_filters(generate_synthetic_market(spec), 0, 0);
  const auto vocab = build_vocabulary(filtered.records);
  const auto hs = build_histories(filtered.records, vocab, spec.days);
  std::stringstream io;
  write_histories(io, hs, spec.days, static_cast<std::uint32_t>(vocab.size()));
  const std::string bytes = io.str();
  ASSERT_GE(bytes.size(), 16u);
  EXPECT_EQ(bytes.substr(0, 4), "OTCF");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);  // version, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 30);  // D
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), vocab.size());
  OtcfHeader header;
  const auto back = read_histories(io, &header);
  EXPECT_EQ(header.days, 30u);
  ASSERT_EQ(back.size(), hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    EXPECT_EQ(back[i].dealer_id, hs[i].dealer_id);
    EXPECT_EQ(back[i].days, hs[i].days);
  }
  std::stringstream text;
  write_histories_text(text, hs, spec.days, static_cast<std::uint32_t>(vocab.size()));
  const auto from_text = read_histories_text(text);
  ASSERT_EQ(from_text.size(), hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) EXPECT_EQ(from_text[i].days, hs[i].days);
}

TEST(Otcf, SamplesRoundTripInBothForms) {
  BinaryMatrix days(12, 6);
  days.set(0, 1);
  days.set(3, 5);
  days.set(7, 2);
  days.set(11, 0);
  const auto samples = windowize("D7", std::make_shared<const BinaryMatrix>(days), 3, 2, 2);
  auto same = [&](const std::vector<Sample>& back) {
    ASSERT_EQ(back.size(), samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      EXPECT_EQ(back[i].dealer_id(), "D7");
      EXPECT_EQ(back[i].start_day(), samples[i].start_day());
      EXPECT_EQ(back[i].input(), samples[i].input());
      EXPECT_EQ(back[i].target_days(), samples[i].target_days());
    }
  };
  std::stringstream bin;
  write_samples(bin, samples, 12, 3);
  same(read_samples(bin));
  std::stringstream text;
  write_samples_text(text, samples, 12, 3);
  same(read_samples_text(text));
  std::stringstream wrong;
  write_samples(wrong, samples, 12, 3);
  EXPECT_THROW(read_histories(wrong), std::runtime_error);
}
