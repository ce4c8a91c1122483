#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace vtc {

// Incremental FNV-1a (64-bit).  Used for payload integrity digests and for
// hashing canonical config strings into run identifiers.
class Fnv1a64 {
 public:
  void update(const void* data, size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ull;
    }
  }
  void update(const std::string& s) { update(s.data(), s.size()); }
  uint64_t value() const { return h_; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    uint64_t v = h_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<size_t>(i)] = digits[v & 0xf];
      v >>= 4;
    }
    return out;
  }

 private:
  uint64_t h_ = 0xcbf29ce484222325ull;
};

inline std::string digest_hex(const void* data, size_t n) {
  Fnv1a64 d;
  d.update(data, n);
  return d.hex();
}

inline std::string digest_hex(const std::string& s) {
  return digest_hex(s.data(), s.size());
}

}  // namespace vtc
