#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "vtc/error.hpp"

namespace vtc {

// All binary artifacts share one shape: a single JSON header line ending in
// '\n', then a little-endian float32 payload.  x86-64 is little-endian, so
// payloads are written as raw IEEE-754 bytes.

inline void append_f32(std::string& buf, const float* p, size_t n) {
  size_t old = buf.size();
  buf.resize(old + n * sizeof(float));
  std::memcpy(buf.data() + old, p, n * sizeof(float));
}

inline void append_i32(std::string& buf, int32_t v) {
  buf.append(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::vector<float> read_f32(const std::string& buf, size_t offset, size_t n) {
  if (offset + n * sizeof(float) > buf.size())
    throw IntegrityError("payload truncated: need " +
                         std::to_string(offset + n * sizeof(float)) + " bytes, have " +
                         std::to_string(buf.size()));
  std::vector<float> out(n);
  std::memcpy(out.data(), buf.data() + offset, n * sizeof(float));
  return out;
}

inline int32_t read_i32(const std::string& buf, size_t offset) {
  if (offset + sizeof(int32_t) > buf.size())
    throw IntegrityError("payload truncated reading int32");
  int32_t v;
  std::memcpy(&v, buf.data() + offset, sizeof(v));
  return v;
}

// Split "header\npayload" at the first newline; returns the header text and
// the payload byte offset.
inline std::pair<std::string, size_t> split_header_line(const std::string& content) {
  size_t nl = content.find('\n');
  if (nl == std::string::npos) throw IntegrityError("missing header line");
  return {content.substr(0, nl), nl + 1};
}

}  // namespace vtc
