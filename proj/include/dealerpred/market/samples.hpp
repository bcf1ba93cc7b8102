#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dealerpred/errors.hpp"
#include "dealerpred/market/history.hpp"

namespace dealerpred::market {

/// An input window of `t_in` day vectors followed by `t_out` target day
/// vectors. Samples cut from the same history share its storage.
class Sample {
 public:
  Sample(std::string dealer_id, std::size_t start_day, std::size_t t_in, std::size_t t_out,
         std::shared_ptr<const BinaryMatrix> source, std::size_t source_offset)
      : dealer_id_(std::move(dealer_id)),
        start_day_(start_day),
        t_in_(t_in),
        t_out_(t_out),
        source_(std::move(source)),
        offset_(source_offset) {
    if (offset_ + t_in_ + t_out_ > source_->rows()) {
      throw IndexError("sample window exceeds its source rows");
    }
  }

  const std::string& dealer_id() const { return dealer_id_; }
  std::size_t start_day() const { return start_day_; }
  std::size_t t_in() const { return t_in_; }
  std::size_t t_out() const { return t_out_; }
  std::size_t width() const { return source_->cols(); }
  std::size_t end_day() const { return start_day_ + t_in_ + t_out_; }

  BinaryMatrix input() const { return source_->slice(offset_, t_in_); }
  BinaryMatrix target_days() const { return source_->slice(offset_ + t_in_, t_out_); }

  /// Elementwise OR over the target days.
  std::vector<std::uint8_t> target_union() const {
    std::vector<std::uint8_t> out(width(), 0);
    for (std::size_t t = 0; t < t_out_; ++t) {
      const std::uint8_t* row = source_->row(offset_ + t_in_ + t);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = out[j] | row[j];
    }
    return out;
  }

 private:
  std::string dealer_id_;
  std::size_t start_day_;
  std::size_t t_in_;
  std::size_t t_out_;
  std::shared_ptr<const BinaryMatrix> source_;
  std::size_t offset_;
};

inline std::size_t window_count(std::size_t days, std::size_t t_in, std::size_t t_out, std::size_t stride) {
  if (t_in + t_out > days) return 0;
  return (days - t_in - t_out) / stride + 1;
}

/// Windows starting at 0, stride, 2·stride, … that fit in the history.
inline std::vector<Sample> windowize(const std::string& dealer_id, std::shared_ptr<const BinaryMatrix> days,
                                     std::size_t t_in, std::size_t t_out, std::size_t stride = 1) {
  if (t_in == 0 || t_out == 0 || stride == 0) throw ConfigError("t_in, t_out and stride must be at least 1");
  std::vector<Sample> out;
  const std::size_t n = window_count(days->rows(), t_in, t_out, stride);
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.emplace_back(dealer_id, k * stride, t_in, t_out, days, k * stride);
  return out;
}

inline std::vector<Sample> windowize(const DealerHistory& history, std::size_t t_in, std::size_t t_out,
                                     std::size_t stride = 1) {
  return windowize(history.dealer_id, std::make_shared<const BinaryMatrix>(history.days), t_in, t_out, stride);
}

/// First day of the test interval: floor(fraction · D).
inline std::size_t split_boundary(std::size_t days, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0,1)");
  return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(days)));
}

struct TrainTestSplit {
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::size_t boundary = 0;
};

/// Train samples end at or before the boundary; test samples start at or
/// after it. Samples straddling it belong to neither.
inline TrainTestSplit split_train_test(const std::vector<Sample>& samples, std::size_t days,
                                       double train_fraction) {
  TrainTestSplit split;
  split.boundary = split_boundary(days, train_fraction);
  for (const auto& s : samples) {
    if (s.end_day() <= split.boundary) split.train.push_back(s);
    else if (s.start_day() >= split.boundary) split.test.push_back(s);
  }
  return split;
}

}  // namespace dealerpred::market
