#pragma once

// Flat files for histories and samples.
//
// Binary layout, all integers little-endian:
//   header (16 bytes): "OTCF" | u16 version | u16 kind | u32 D | u32 V
//   u32 entry count
//   histories: per dealer  u32 id length, id bytes, D·2V bits
//   samples:   per sample  u32 id length, id bytes, u32 start, u32 t_in,
//                          u32 t_out, (t_in+t_out)·2V bits
// Bit blocks are row-major, least significant bit first, zero-padded to a
// whole byte at the end of each entry.
//
// The text form carries the same content one day vector per line.

#include <array>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dealerpred/market/history.hpp"
#include "dealerpred/market/samples.hpp"

namespace dealerpred::market {

inline constexpr std::uint16_t kOtcfVersion = 1;
enum class OtcfKind : std::uint16_t { Histories = 1, Samples = 2 };

struct OtcfHeader {
  OtcfKind kind = OtcfKind::Histories;
  std::uint32_t days = 0;
  std::uint32_t vocab = 0;
};

namespace detail {

inline void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("OTCF: truncated file");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  if (!in.read(reinterpret_cast<char*>(b), 2)) throw std::runtime_error("OTCF: truncated file");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw std::runtime_error("OTCF: truncated identifier");
  return s;
}

inline void put_bits(std::ostream& out, const BinaryMatrix& m, std::size_t begin_row, std::size_t rows) {
  std::vector<char> bytes((rows * m.cols() + 7) / 8, 0);
  std::size_t bit = 0;
  for (std::size_t r = begin_row; r < begin_row + rows; ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c, ++bit) {
      if (m.at(r, c)) bytes[bit / 8] = static_cast<char>(bytes[bit / 8] | (1 << (bit % 8)));
    }
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline BinaryMatrix get_bits(std::istream& in, std::size_t rows, std::size_t cols) {
  std::vector<unsigned char> bytes((rows * cols + 7) / 8);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
    throw std::runtime_error("OTCF: truncated bitmap");
  }
  BinaryMatrix m(rows, cols);
  std::size_t bit = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c, ++bit) {
      if (bytes[bit / 8] & (1 << (bit % 8))) m.set(r, c);
    }
  }
  return m;
}

inline void put_header(std::ostream& out, const OtcfHeader& h) {
  out.write("OTCF", 4);
  put_u16(out, kOtcfVersion);
  put_u16(out, static_cast<std::uint16_t>(h.kind));
  put_u32(out, h.days);
  put_u32(out, h.vocab);
}

inline OtcfHeader get_header(std::istream& in, OtcfKind expected) {
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "OTCF") throw std::runtime_error("OTCF: bad magic");
  const std::uint16_t version = get_u16(in);
  if (version != kOtcfVersion) throw std::runtime_error("OTCF: unsupported version " + std::to_string(version));
  OtcfHeader h;
  h.kind = static_cast<OtcfKind>(get_u16(in));
  if (h.kind != expected) throw std::runtime_error("OTCF: unexpected content kind");
  h.days = get_u32(in);
  h.vocab = get_u32(in);
  return h;
}

inline std::string row_text(const BinaryMatrix& m, std::size_t r) {
  std::string s(m.cols(), '0');
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (m.at(r, c)) s[c] = '1';
  }
  return s;
}

inline void parse_row(const std::string& line, BinaryMatrix& m, std::size_t r) {
  if (line.size() != m.cols()) throw std::runtime_error("OTCF text: row has wrong width");
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (line[c] == '1') m.set(r, c);
    else if (line[c] != '0') throw std::runtime_error("OTCF text: row has a non-binary cell");
  }
}

inline std::string next_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("OTCF text: unexpected end of input");
  return line;
}

}  // namespace detail

inline void write_histories(std::ostream& out, const std::vector<DealerHistory>& histories, std::uint32_t days,
                            std::uint32_t vocab) {
  detail::put_header(out, {OtcfKind::Histories, days, vocab});
  detail::put_u32(out, static_cast<std::uint32_t>(histories.size()));
  for (const auto& h : histories) {
    if (h.days.rows() != days || h.days.cols() != 2 * vocab) {
      throw DimensionError("history of " + h.dealer_id + " does not match the file's D and V");
    }
    detail::put_string(out, h.dealer_id);
    detail::put_bits(out, h.days, 0, days);
  }
}

inline std::vector<DealerHistory> read_histories(std::istream& in, OtcfHeader* header = nullptr) {
  const OtcfHeader h = detail::get_header(in, OtcfKind::Histories);
  if (header) *header = h;
  const std::uint32_t count = detail::get_u32(in);
  std::vector<DealerHistory> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string id = detail::get_string(in);
    out.push_back({std::move(id), detail::get_bits(in, h.days, 2 * std::size_t{h.vocab})});
  }
  return out;
}

inline void write_samples(std::ostream& out, const std::vector<Sample>& samples, std::uint32_t days,
                          std::uint32_t vocab) {
  detail::put_header(out, {OtcfKind::Samples, days, vocab});
  detail::put_u32(out, static_cast<std::uint32_t>(samples.size()));
  for (const auto& s : samples) {
    if (s.width() != 2 * vocab) throw DimensionError("sample of " + s.dealer_id() + " does not match V");
    detail::put_string(out, s.dealer_id());
    detail::put_u32(out, static_cast<std::uint32_t>(s.start_day()));
    detail::put_u32(out, static_cast<std::uint32_t>(s.t_in()));
    detail::put_u32(out, static_cast<std::uint32_t>(s.t_out()));
    BinaryMatrix window(s.t_in() + s.t_out(), s.width());
    const auto in = s.input();
    const auto target = s.target_days();
    for (std::size_t r = 0; r < in.rows(); ++r) {
      for (std::size_t c = 0; c < s.width(); ++c) window.set(r, c, in.at(r, c));
    }
    for (std::size_t r = 0; r < target.rows(); ++r) {
      for (std::size_t c = 0; c < s.width(); ++c) window.set(in.rows() + r, c, target.at(r, c));
    }
    detail::put_bits(out, window, 0, window.rows());
  }
}

inline std::vector<Sample> read_samples(std::istream& in, OtcfHeader* header = nullptr) {
  const OtcfHeader h = detail::get_header(in, OtcfKind::Samples);
  if (header) *header = h;
  const std::uint32_t count = detail::get_u32(in);
  std::vector<Sample> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string id = detail::get_string(in);
    const std::uint32_t start = detail::get_u32(in);
    const std::uint32_t t_in = detail::get_u32(in);
    const std::uint32_t t_out = detail::get_u32(in);
    auto window = std::make_shared<const BinaryMatrix>(
        detail::get_bits(in, std::size_t{t_in} + t_out, 2 * std::size_t{h.vocab}));
    out.emplace_back(std::move(id), start, t_in, t_out, std::move(window), 0);
  }
  return out;
}

inline void write_histories_text(std::ostream& out, const std::vector<DealerHistory>& histories,
                                 std::uint32_t days, std::uint32_t vocab) {
  out << "OTCF-TEXT " << kOtcfVersion << " histories " << days << ' ' << vocab << ' ' << histories.size() << '\n';
  for (const auto& h : histories) {
    out << "dealer " << h.dealer_id << '\n';
    for (std::size_t r = 0; r < h.days.rows(); ++r) out << detail::row_text(h.days, r) << '\n';
  }
}

inline std::vector<DealerHistory> read_histories_text(std::istream& in) {
  std::istringstream head(detail::next_line(in));
  std::string magic, kind;
  unsigned version = 0;
  std::size_t days = 0, vocab = 0, count = 0;
  head >> magic >> version >> kind >> days >> vocab >> count;
  if (magic != "OTCF-TEXT" || kind != "histories") throw std::runtime_error("OTCF text: bad header");
  std::vector<DealerHistory> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string line = detail::next_line(in);
    if (line.rfind("dealer ", 0) != 0) throw std::runtime_error("OTCF text: expected a dealer line");
    DealerHistory h{line.substr(7), BinaryMatrix(days, 2 * vocab)};
    for (std::size_t r = 0; r < days; ++r) detail::parse_row(detail::next_line(in), h.days, r);
    out.push_back(std::move(h));
  }
  return out;
}

inline void write_samples_text(std::ostream& out, const std::vector<Sample>& samples, std::uint32_t days,
                               std::uint32_t vocab) {
  out << "OTCF-TEXT " << kOtcfVersion << " samples " << days << ' ' << vocab << ' ' << samples.size() << '\n';
  for (const auto& s : samples) {
    out << "sample " << s.dealer_id() << ' ' << s.start_day() << ' ' << s.t_in() << ' ' << s.t_out() << '\n';
    const auto in = s.input();
    const auto target = s.target_days();
    for (std::size_t r = 0; r < in.rows(); ++r) out << detail::row_text(in, r) << '\n';
    for (std::size_t r = 0; r < target.rows(); ++r) out << detail::row_text(target, r) << '\n';
  }
}

inline std::vector<Sample> read_samples_text(std::istream& in) {
  std::istringstream head(detail::next_line(in));
  std::string magic, kind;
  unsigned version = 0;
  std::size_t days = 0, vocab = 0, count = 0;
  head >> magic >> version >> kind >> days >> vocab >> count;
  if (magic != "OTCF-TEXT" || kind != "samples") throw std::runtime_error("OTCF text: bad header");
  std::vector<Sample> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream line(detail::next_line(in));
    std::string tag, id;
    std::size_t start = 0, t_in = 0, t_out = 0;
    line >> tag >> id >> start >> t_in >> t_out;
    if (tag != "sample") throw std::runtime_error("OTCF text: expected a sample line");
    BinaryMatrix window(t_in + t_out, 2 * vocab);
    for (std::size_t r = 0; r < t_in + t_out; ++r) detail::parse_row(detail::next_line(in), window, r);
    out.emplace_back(id, start, t_in, t_out, std::make_shared<const BinaryMatrix>(std::move(window)), 0);
  }
  return out;
}

}  // namespace dealerpred::market
