// src/util.cc

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

#include "kws/util.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <limits>
#include <mutex>
#include <thread>

#include "bytes.h"
#include "kws/error.h"

namespace kws {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kSilentSpeech: return "SilentSpeech";
    case ErrorCode::kSilentNoise: return "SilentNoise";
    case ErrorCode::kRateMismatch: return "RateMismatch";
    case ErrorCode::kFactorOutOfRange: return "FactorOutOfRange";
    case ErrorCode::kAlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kCorruptArchive: return "CorruptArchive";
    case ErrorCode::kDuplicateUttId: return "DuplicateUttId";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kZeroPrior: return "ZeroPrior";
    case ErrorCode::kUnknownPhone: return "UnknownPhone";
    case ErrorCode::kEmptyPosteriors: return "EmptyPosteriors";
    case ErrorCode::kNoSurvivingPath: return "NoSurvivingPath";
    case ErrorCode::kDisconnectedLattice: return "DisconnectedLattice";
    case ErrorCode::kNoScoreableKeywords: return "NoScoreableKeywords";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyLexicon: return "EmptyLexicon";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

std::string FormatDouble(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double ParseDouble(std::string_view token, std::string_view context) {
  double value = 0.0;
  const char *end = token.data() + token.size();
  auto res = std::from_chars(token.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    // from_chars rejects "inf"/"nan" spellings written by some tools.
    if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    Fail(ErrorCode::kParseError,
         std::string(context) + ": bad number '" + std::string(token) + "'");
  }
  return value;
}

int64_t ParseInt(std::string_view token, std::string_view context) {
  int64_t value = 0;
  const char *end = token.data() + token.size();
  auto res = std::from_chars(token.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end)
    Fail(ErrorCode::kParseError,
         std::string(context) + ": bad integer '" + std::string(token) + "'");
  return value;
}

namespace {
bool IsSpace(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }
}  // namespace

std::vector<std::string> SplitWhitespace(std::string_view line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && IsSpace(line[i])) ++i;
    size_t j = i;
    while (j < line.size() && !IsSpace(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> SplitFields(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.find('\t') == std::string_view::npos) return SplitWhitespace(line);
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    size_t tab = line.find('\t', pos);
    out.emplace_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

namespace {
uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

uint64_t DeriveSeed(uint64_t base_seed, std::string_view stream) {
  // FNV-1a over the stream name.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return SplitMix64(SplitMix64(base_seed) ^ h);
}

void ParallelFor(size_t n, int jobs, const std::function<void(size_t)> &body) {
  if (jobs <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  size_t num_threads = std::min<size_t>(static_cast<size_t>(jobs), n);
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(num_threads);
  for (size_t t = 0; t < num_threads; ++t) {
    threads.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto &th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

double LogAdd(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

std::string ReadFileBytes(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorCode::kNotFound, path);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::string &path, const std::string &bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) Fail(ErrorCode::kIoError, "cannot open " + path + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) Fail(ErrorCode::kIoError, "write failed: " + path);
}

}  // namespace kws
