// include/kws/synth_corpus.h

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

#ifndef KWS_SYNTH_CORPUS_H_
#define KWS_SYNTH_CORPUS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kws/acoustic_model.h"
#include "kws/decoder.h"
#include "kws/features.h"
#include "kws/scoring.h"

namespace kws {

// The 30 keywords plus filler words, with ARPAbet pronunciations. WITH,
// ORANGE and FEBRUARY carry a second pronunciation.
Lexicon BuiltinLexicon();

// SIL followed by every phone used in `lexicon`, sorted.
PhoneSet PhonesForLexicon(const Lexicon &lexicon);

struct AgeBand {
  double age_min = 0.0;
  double age_max = 0.0;
  double strength = 1.0;  // multiplies CorpusSpec::mismatch for speakers in the band
};

struct CorpusSpec {
  uint64_t seed = 0;
  int dim = 13;
  float frame_shift = 0.02f;
  int train_utts = 400;
  int test_utts = 360;
  int train_speakers = 20;
  int test_speakers = 30;
  int words_min = 3;
  int words_max = 8;
  int frames_per_phone_min = 2;
  int frames_per_phone_max = 5;
  int sil_min = 1;  // SIL frames before, between and after words
  int sil_max = 6;
  double keyword_prob = 0.5;  // share of word tokens drawn from `keywords`
  double mean_scale = 2.0;    // std-dev of phone mean components
  double variance = 0.25;     // per-dimension emission variance
  double speaker_scale = 0.1;  // std-dev of per-speaker mean offsets
  double adult_age = 30.0;
  // Test-domain distortion: mean' = mean + s (M mean + b), variance scaled by
  // (1 + 0.5 s), with s = mismatch * band strength. M and b are random.
  double mismatch = 0.0;
  std::vector<AgeBand> bands = {{4, 6, 1.0}, {7, 9, 0.75}, {10, 13, 0.5}};
  // Additive Gaussian noise on test emissions at this SNR relative to the
  // mean emission power.
  std::optional<double> noise_snr_db;
  std::vector<std::string> keywords;  // empty selects the built-in 10-keyword set
  std::optional<Lexicon> lexicon;     // empty selects BuiltinLexicon()
};

// Flat JSON object with the field names above; `bands` is a list of
// [age_min, age_max, strength] triples and `lexicon` a list of
// "WORD PH1 PH2 ..." strings. Unknown keys throw kParseError.
CorpusSpec CorpusSpecFromJson(const std::string &json_text);
CorpusSpec ReadCorpusSpec(const std::string &path);

struct SynthSplit {
  std::vector<FeatureMatrix> feats;
  FrameLabels labels;
  std::map<std::string, std::vector<std::string>> transcripts;  // word labels per utt
  std::vector<RefOccurrence> refs;
  std::map<std::string, SpeakerInfo> meta;
  double total_sec = 0.0;
};

struct SynthCorpus {
  PhoneSet phones;
  Lexicon lexicon;
  std::vector<std::string> keywords;
  SynthSplit train;
  SynthSplit test;
};

// Deterministic in the spec. The word content, durations and speakers of the
// test split depend only on the seed and the size fields, so corpora that
// differ in mismatch or noise share their transcripts and references.
// Throws kEmptyLexicon.
SynthCorpus GenerateCorpus(const CorpusSpec &spec);

// Files in `dir`: phones.txt, lexicon.txt, keywords.txt, train.fea, train.ali,
// train.txt, test.fea, test.ali, test.txt, test.refs.tsv, test.meta.tsv and
// test.duration.
void WriteCorpus(const SynthCorpus &corpus, const std::string &dir);

PhoneSet ReadPhoneSet(const std::string &path);
void WritePhoneSet(const PhoneSet &phones, const std::string &path);
std::vector<std::string> ReadKeywordList(const std::string &path);

}  // namespace kws

#endif  // KWS_SYNTH_CORPUS_H_
