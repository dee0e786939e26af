#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "seqmod/errors.hpp"

namespace seqmod::detail {

/// Little-endian byte buffer writer.
class ByteWriter {
 public:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i)
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void put_bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  void put_sizes(const std::vector<std::size_t>& v) {
    put<std::uint64_t>(v.size());
    for (auto x : v) put<std::uint64_t>(x);
  }
  void put_reals(const std::vector<double>& v) {
    put<std::uint64_t>(v.size());
    for (auto x : v) put_f64(x);
  }
  const std::string& bytes() const { return buf_; }

  void write_to(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  }

 private:
  std::string buf_;
};

/// Bounds-checked little-endian reader; running off the end is a SizeError.
class ByteReader {
 public:
  explicit ByteReader(std::string bytes) : buf_(std::move(bytes)) {}

  static ByteReader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return ByteReader(std::string((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>()));
  }

  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<std::size_t> get_sizes() {
    const auto n = get<std::uint64_t>();
    need(n * 8);
    std::vector<std::size_t> v(n);
    for (auto& x : v) x = get<std::uint64_t>();
    return v;
  }
  std::vector<double> get_reals() {
    const auto n = get<std::uint64_t>();
    need(n * 8);
    std::vector<double> v(n);
    for (auto& x : v) x = get_f64();
    return v;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > buf_.size() - pos_) throw SizeError("unexpected end of data");
  }
  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace seqmod::detail
