#include "fockmetro/cli/cache.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fockmetro::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMagic = "FMCACHE1\n";

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out(2 * len, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hex[md[i] >> 4];
    out[2 * i + 1] = hex[md[i] & 15];
  }
  return out;
}

Cache::Cache(fs::path dir) : dir_(std::move(dir)) {}

fs::path Cache::default_dir() {
  if (const char* e = std::getenv("FOCKMETRO_CACHE_DIR"); e && *e) return e;
  if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) return fs::path(x) / "fockmetro";
  if (const char* h = std::getenv("HOME"); h && *h) return fs::path(h) / ".cache" / "fockmetro";
  return fs::temp_directory_path() / "fockmetro-cache";
}

std::string Cache::key_for(std::string_view description) { return sha256_hex(description); }

fs::path Cache::path_for(std::string_view key) const {
  const std::string k(key);
  return dir_ / k.substr(0, 2) / k;
}

std::optional<std::string> Cache::get(std::string_view key) const {
  if (!enabled()) return std::nullopt;
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string all = ss.str();
  const std::size_t head = kMagic.size() + 65;
  if (all.size() < head || all.compare(0, kMagic.size(), kMagic) != 0) return std::nullopt;
  const std::string sum = all.substr(kMagic.size(), 64);
  std::string payload = all.substr(head);
  if (sha256_hex(payload) != sum) return std::nullopt;
  return payload;
}

bool Cache::put(std::string_view key, std::string_view payload) const {
  if (!enabled()) return false;
  static std::atomic<unsigned long> counter{0};
  try {
    const fs::path target = path_for(key);
    fs::create_directories(target.parent_path());
    std::ostringstream tmpname;
    tmpname << target.string() << ".tmp." << ::getpid() << '.' << std::this_thread::get_id() << '.'
            << counter.fetch_add(1);
    const fs::path tmp = tmpname.str();
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) return false;
      out << kMagic << sha256_hex(payload) << '\n';
      out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
      out.flush();
      if (!out) {
        std::error_code ec;
        fs::remove(tmp, ec);
        return false;
      }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
      fs::remove(tmp, ec);
      return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

std::string ByteReader::str() {
  const std::int64_t n = i64();
  if (n < 0 || static_cast<std::size_t>(n) > s_.size() - pos_) throw std::runtime_error("cache payload truncated");
  std::string out(s_.substr(pos_, static_cast<std::size_t>(n)));
  pos_ += static_cast<std::size_t>(n);
  return out;
}

void ByteReader::raw(void* p, std::size_t n) {
  if (n > s_.size() - pos_) throw std::runtime_error("cache payload truncated");
  std::memcpy(p, s_.data() + pos_, n);
  pos_ += n;
}

}  // namespace fockmetro::cli
