#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dealerpred/errors.hpp"
#include "dealerpred/market/records.hpp"

namespace dealerpred::market {

/// Dense row-major matrix of 0/1 cells.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  BinaryMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), cells_(rows * cols, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::uint8_t at(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }
  void set(std::size_t r, std::size_t c, bool on = true) { cells_[r * cols_ + c] = on ? 1 : 0; }

  const std::uint8_t* row(std::size_t r) const { return cells_.data() + r * cols_; }
  const std::vector<std::uint8_t>& cells() const { return cells_; }

  std::size_t count() const { return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1)); }

  /// Rows [begin, begin+count) as a new matrix.
  BinaryMatrix slice(std::size_t begin, std::size_t count) const {
    BinaryMatrix out(count, cols_);
    std::copy_n(cells_.begin() + begin * cols_, count * cols_, out.cells_.begin());
    return out;
  }

  std::vector<double> to_doubles() const { return {cells_.begin(), cells_.end()}; }

  bool operator==(const BinaryMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Bond identifier ↔ contiguous index, assigned in ascending identifier order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> sorted_bonds) : bonds_(std::move(sorted_bonds)) {
    for (std::size_t i = 0; i < bonds_.size(); ++i) index_.emplace(bonds_[i], i);
  }

  std::size_t size() const { return bonds_.size(); }
  const std::string& bond(std::size_t index) const { return bonds_.at(index); }
  const std::vector<std::string>& bonds() const { return bonds_; }

  std::optional<std::size_t> find(const std::string& bond) const {
    auto it = index_.find(bond);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index(const std::string& bond) const {
    auto idx = find(bond);
    if (!idx) throw IndexError("bond '" + bond + "' is not in the vocabulary");
    return *idx;
  }

 private:
  std::vector<std::string> bonds_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline Vocabulary build_vocabulary(const std::vector<TradeRecord>& records) {
  std::set<std::string> bonds;
  for (const auto& r : records) bonds.insert(r.bond_id);
  return Vocabulary({bonds.begin(), bonds.end()});
}

/// D day vectors of width 2V: columns [0,V) mark buys, [V,2V) sells.
struct DealerHistory {
  std::string dealer_id;
  BinaryMatrix days;

  std::size_t day_count() const { return days.rows(); }
  std::size_t vocab_size() const { return days.cols() / 2; }
};

/// One history per entry of `dealers` (in that order); dealers without
/// records get an all-zero history. Records of unlisted dealers are ignored.
inline std::vector<DealerHistory> build_histories(const std::vector<TradeRecord>& records, const Vocabulary& vocab,
                                                  std::size_t days, const std::vector<std::string>& dealers) {
  const std::size_t v = vocab.size();
  std::vector<DealerHistory> out;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& d : dealers) {
    slot.emplace(d, out.size());
    out.push_back({d, BinaryMatrix(days, 2 * v)});
  }
  for (const auto& r : records) {
    auto it = slot.find(r.dealer_id);
    if (it == slot.end()) continue;
    if (r.day >= days) {
      throw IndexError("record on day " + std::to_string(r.day) + " outside a " + std::to_string(days) +
                       "-day calendar");
    }
    const std::size_t idx = vocab.index(r.bond_id);
    out[it->second].days.set(r.day, r.side == Side::Buy ? idx : v + idx);
  }
  return out;
}

/// Histories for every dealer present in `records`, ascending by identifier.
inline std::vector<DealerHistory> build_histories(const std::vector<TradeRecord>& records, const Vocabulary& vocab,
                                                  std::size_t days) {
  std::set<std::string> dealers;
  for (const auto& r : records) dealers.insert(r.dealer_id);
  return build_histories(records, vocab, days, {dealers.begin(), dealers.end()});
}

}  // namespace dealerpred::market
