// include/kws/util.h

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

#ifndef KWS_UTIL_H_
#define KWS_UTIL_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace kws {

// Shortest decimal text that parses back to the identical double.
std::string FormatDouble(double value);

// Parses a full token as a double / integer; throws Error(kParseError).
double ParseDouble(std::string_view token, std::string_view context);
int64_t ParseInt(std::string_view token, std::string_view context);

// Splits on runs of spaces and tabs.
std::vector<std::string> SplitWhitespace(std::string_view line);

// Fields of a table row: tab separated when the line has a tab (so fields may
// contain spaces), else whitespace separated. A trailing CR is dropped.
std::vector<std::string> SplitFields(std::string_view line);

// Derives an independent 64-bit seed for a named sub-stream (SplitMix64 over
// the base seed and a hash of the stream name). Keeps every random draw in the
// engine traceable to the single user seed.
uint64_t DeriveSeed(uint64_t base_seed, std::string_view stream);

// Runs body(i) for i in [0, n) on up to `jobs` threads. Each index is handled
// exactly once; results must be written to per-index slots by the caller.
void ParallelFor(size_t n, int jobs, const std::function<void(size_t)> &body);

// log(exp(a) + exp(b)) without overflow; -inf is the identity.
double LogAdd(double a, double b);

}  // namespace kws

#endif  // KWS_UTIL_H_
