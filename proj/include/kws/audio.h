// include/kws/audio.h

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

#ifndef KWS_AUDIO_H_
#define KWS_AUDIO_H_

#include <string>
#include <vector>

namespace kws {

// Mono waveform. Samples are float64 in [-1, 1].
struct Waveform {
  std::string id;
  int sample_rate = 16000;
  std::vector<double> samples;

  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

// Throws kInvalidArgument on a non-positive rate or non-finite samples.
void ValidateWaveform(const Waveform &wave);

// Reads a RIFF/WAVE mono file, PCM16 or IEEE float32. The id is taken from the
// file stem.
Waveform ReadWav(const std::string &path);

// PCM16 quantizes with round-to-nearest and saturation; float32 is lossless for
// float-representable samples.
void WriteWav(const Waveform &wave, const std::string &path,
              WavEncoding encoding = WavEncoding::kPcm16);

// Band-limited rate conversion with a polyphase Kaiser-windowed sinc
// (beta 8.6, 64 taps per phase). Output length is
// round(len * target_rate / sample_rate).
Waveform Resample(const Waveform &wave, int target_rate);

}  // namespace kws

#endif  // KWS_AUDIO_H_
