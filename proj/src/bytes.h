// src/bytes.h

// Copyright 2026  The kws-engine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef KWS_SRC_BYTES_H_
#define KWS_SRC_BYTES_H_

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "kws/error.h"

namespace kws {

// Little-endian encoding helpers for the engine's binary formats.

inline uint16_t ReadU16(const unsigned char *p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
inline uint32_t ReadU32(const unsigned char *p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
inline void PutU16(std::string *out, uint16_t v) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>(v >> 8));
}
inline void PutU32(std::string *out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void PutU64(std::string *out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void PutF32(std::string *out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  PutU32(out, bits);
}
inline void PutF64(std::string *out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  PutU64(out, bits);
}

// Bounds-checked cursor over a byte buffer. Running past the end throws
// Error(code) naming the offset.
class ByteReader {
 public:
  ByteReader(std::string_view data, ErrorCode code, std::string what)
      : data_(data), code_(code), what_(std::move(what)) {}

  size_t offset() const { return pos_; }
  bool AtEnd() const { return pos_ == data_.size(); }

  const unsigned char *Take(size_t n) {
    if (data_.size() - pos_ < n)
      Fail(code_, what_ + ": truncated at byte " + std::to_string(pos_));
    const auto *p = reinterpret_cast<const unsigned char *>(data_.data() + pos_);
    pos_ += n;
    return p;
  }
  uint16_t U16() { return ReadU16(Take(2)); }
  uint32_t U32() { return ReadU32(Take(4)); }
  uint64_t U64() {
    const unsigned char *p = Take(8);
    return static_cast<uint64_t>(ReadU32(p)) | (static_cast<uint64_t>(ReadU32(p + 4)) << 32);
  }
  float F32() {
    uint32_t bits = U32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  double F64() {
    uint64_t bits = U64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string Str(size_t n) {
    const unsigned char *p = Take(n);
    return std::string(reinterpret_cast<const char *>(p), n);
  }
  [[noreturn]] void Bad(const std::string &msg) const {
    Fail(code_, what_ + ": " + msg + " at byte " + std::to_string(pos_));
  }

 private:
  std::string_view data_;
  size_t pos_ = 0;
  ErrorCode code_;
  std::string what_;
};

// Whole-file helpers; throw kNotFound / kIoError.
std::string ReadFileBytes(const std::string &path);
void WriteFileBytes(const std::string &path, const std::string &bytes);

}  // namespace kws

#endif  // KWS_SRC_BYTES_H_
