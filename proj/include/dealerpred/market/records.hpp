#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dealerpred/errors.hpp"

namespace dealerpred::market {

enum class Side : std::uint8_t { Buy, Sell };
enum class Counterparty : std::uint8_t { Dealer, Client };
enum class Status : std::uint8_t { Normal, Cancellation, Correction };

/// One reported transaction at day granularity. Cancellations and
/// corrections point at the record they amend through `ref_record`, the
/// 0-based position of that record in the same list.
struct TradeRecord {
  std::uint32_t day = 0;
  std::string dealer_id;
  std::string bond_id;
  Side side = Side::Buy;
  Counterparty counterparty = Counterparty::Client;
  Status status = Status::Normal;
  std::optional<std::size_t> ref_record;

  bool operator==(const TradeRecord&) const = default;
};

inline char side_code(Side s) { return s == Side::Buy ? 'B' : 'S'; }
inline char counterparty_code(Counterparty c) { return c == Counterparty::Dealer ? 'D' : 'C'; }
inline char status_code(Status s) {
  switch (s) {
    case Status::Normal: return 'N';
    case Status::Cancellation: return 'X';
    case Status::Correction: return 'R';
  }
  return '?';
}

/// Writes `day,dealer,bond,side,counterparty,status,ref` lines.
inline void write_records_csv(std::ostream& out, const std::vector<TradeRecord>& records) {
  for (const auto& r : records) {
    out << r.day << ',' << r.dealer_id << ',' << r.bond_id << ',' << side_code(r.side) << ','
        << counterparty_code(r.counterparty) << ',' << status_code(r.status) << ',';
    if (r.ref_record) out << *r.ref_record;
    out << '\n';
  }
}

inline std::vector<TradeRecord> read_records_csv(std::istream& in) {
  std::vector<TradeRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    auto fail = [&](const std::string& why) {
      return std::runtime_error("record line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 7) throw fail("expected 7 fields, got " + std::to_string(fields.size()));
    TradeRecord r;
    try {
      r.day = static_cast<std::uint32_t>(std::stoul(fields[0]));
    } catch (const std::exception&) {
      throw fail("bad day '" + fields[0] + "'");
    }
    r.dealer_id = fields[1];
    r.bond_id = fields[2];
    if (fields[3] == "B") r.side = Side::Buy;
    else if (fields[3] == "S") r.side = Side::Sell;
    else throw fail("bad side '" + fields[3] + "'");
    if (fields[4] == "D") r.counterparty = Counterparty::Dealer;
    else if (fields[4] == "C") r.counterparty = Counterparty::Client;
    else throw fail("bad counterparty '" + fields[4] + "'");
    if (fields[5] == "N") r.status = Status::Normal;
    else if (fields[5] == "X") r.status = Status::Cancellation;
    else if (fields[5] == "R") r.status = Status::Correction;
    else throw fail("bad status '" + fields[5] + "'");
    if (!fields[6].empty()) {
      try {
        r.ref_record = std::stoull(fields[6]);
      } catch (const std::exception&) {
        throw fail("bad ref_record '" + fields[6] + "'");
      }
    }
    if (r.status != Status::Normal && !r.ref_record) throw fail("amendment without ref_record");
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace dealerpred::market
