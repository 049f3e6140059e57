// include/kws/error.h

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

#ifndef KWS_ERROR_H_
#define KWS_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace kws {

// Every failure the engine reports. Names mirror the documented error kinds of
// each module so callers (and the CLI) can branch on them.
enum class ErrorCode {
  kNotFound,
  kUnsupportedFormat,
  kIoError,
  kInvalidArgument,
  kSilentSpeech,
  kSilentNoise,
  kRateMismatch,
  kFactorOutOfRange,
  kAlphaOutOfRange,
  kTooShort,
  kCorruptArchive,
  kDuplicateUttId,
  kDimMismatch,
  kEmptyTrainingSet,
  kZeroPrior,
  kUnknownPhone,
  kEmptyPosteriors,
  kNoSurvivingPath,
  kDisconnectedLattice,
  kNoScoreableKeywords,
  kLengthMismatch,
  kEmptyLexicon,
  kParseError,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string &what) {
  throw Error(code, what);
}

}  // namespace kws

#endif  // KWS_ERROR_H_
