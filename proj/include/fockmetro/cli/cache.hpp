#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace fockmetro::cli {

std::string sha256_hex(std::string_view data);

// Entries live at <dir>/<key[0:2]>/<key>; each file stores a SHA-256 of its
// payload, so a truncated or corrupted entry reads as a miss.
class Cache {
 public:
  Cache() = default;  // disabled
  explicit Cache(std::filesystem::path dir);

  // $FOCKMETRO_CACHE_DIR, else $XDG_CACHE_HOME/fockmetro, else ~/.cache/fockmetro
  static std::filesystem::path default_dir();

  bool enabled() const { return !dir_.empty(); }
  const std::filesystem::path& dir() const { return dir_; }

  std::optional<std::string> get(std::string_view key) const;
  // best effort: I/O failures are swallowed
  bool put(std::string_view key, std::string_view payload) const;

  // hashes a canonical description into a cache key
  static std::string key_for(std::string_view description);

 private:
  std::filesystem::path path_for(std::string_view key) const;
  std::filesystem::path dir_;
};

// fixed-layout binary buffer for cache payloads
class ByteWriter {
 public:
  void put_u32(std::uint32_t v) { raw(&v, sizeof v); }
  void put_i64(std::int64_t v) { raw(&v, sizeof v); }
  void put_f64(double v) { raw(&v, sizeof v); }
  void put_str(std::string_view s) {
    put_i64(static_cast<std::int64_t>(s.size()));
    raw(s.data(), s.size());
  }
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view s) : s_(s) {}
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::int64_t i64() { return pod<std::int64_t>(); }
  double f64() { return pod<double>(); }
  std::string str();
  void raw(void* p, std::size_t n);
  bool done() const { return pos_ == s_.size(); }

 private:
  template <class T>
  T pod() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace fockmetro::cli
