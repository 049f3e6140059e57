// include/kws/lattice_index.h

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

#ifndef KWS_LATTICE_INDEX_H_
#define KWS_LATTICE_INDEX_H_

#include <map>
#include <string>
#include <vector>

#include "kws/decoder.h"

namespace kws {

// Lattice with forward/backward log scores over total arc cost.
struct PosteriorLattice {
  Lattice lattice;
  std::vector<int> node_frame;
  std::vector<double> forward;   // log alpha per node
  std::vector<double> backward;  // log beta per node
  double total = 0.0;            // log of the summed path mass
  std::vector<double> arc_posterior;
};

// Forward-backward in the log domain. Throws kDisconnectedLattice if no path
// reaches a final node or some arc lies on no complete path.
PosteriorLattice LatticePosteriors(const Lattice &lat);

// Sum of posteriors of arcs with start_frame <= t < end_frame, per frame t.
std::vector<double> FrameCutSums(const PosteriorLattice &plat);

// Acceptor over word-label sequences: state 0 is the start, state 1 the single
// final state; one path per surface form.
struct KeywordFst {
  struct Arc {
    int src;
    int dst;
    std::string label;
  };
  std::string keyword_id;
  int num_states = 2;
  std::vector<Arc> arcs;

  // Every accepted label sequence, in arc order.
  std::vector<std::vector<std::string>> Paths() const;
};

// Built-in keyword lists: the first 10, 20 or all 30 entries of the children's
// keyword list (ZERO .. FEBRUARY).
const std::vector<std::string> &BuiltinKeywords();
std::vector<std::string> BuiltinKeywordSet(int size);

// Keywords are upper-cased; multi-word keywords are space separated and
// expand to the product of their words' pronunciations. Keywords with a word
// missing from the lexicon are skipped and listed in `oov`.
std::vector<KeywordFst> BuildKeywordFsts(const std::vector<std::string> &keywords,
                                         const Lexicon &lexicon, std::vector<std::string> *oov);

struct Posting {
  std::string utt_id;
  double start = 0.0;  // seconds
  double end = 0.0;
  double posterior = 0.0;
  bool operator==(const Posting &other) const = default;
};

struct IndexOptions {
  int max_factor_len = 3;
  double merge_tol = 0.5;  // seconds, between posting midpoints
  bool operator==(const IndexOptions &other) const = default;
};

// Factor (word-label sequence) -> postings sorted by (utt_id, start, end).
struct TimedFactorIndex {
  IndexOptions opts;
  std::map<std::vector<std::string>, std::vector<Posting>> postings;
  bool operator==(const TimedFactorIndex &other) const = default;
};

// Postings of one utterance, one factor: identical spans are summed (and the
// sum clamped to 1), then spans whose midpoints lie within merge_tol of a
// cluster's first span collapse onto it with the maximum posterior.
std::vector<Posting> MergePostings(std::vector<Posting> postings, double merge_tol);

// Word-label factors of every lattice path up to max_factor_len words, with
// epsilon arcs allowed between words. Runs per-lattice extraction on `jobs`
// threads; the result does not depend on lattice order or thread count.
TimedFactorIndex BuildIndex(const std::vector<PosteriorLattice> &lats, const IndexOptions &opts,
                            int jobs = 1);

// Raw (unmerged) factor postings of a single lattice.
std::map<std::vector<std::string>, std::vector<Posting>> ExtractFactors(
    const PosteriorLattice &plat, int max_factor_len);

struct Detection {
  std::string keyword_id;
  std::string utt_id;
  double start = 0.0;
  double end = 0.0;
  double score = 0.0;
  bool decision = false;
  bool operator==(const Detection &other) const = default;
};

// Union over the keyword's accepted label sequences; postings at identical
// spans are summed, then merged as in the index. Sorted by (utt_id, start).
std::vector<Detection> Search(const TimedFactorIndex &index, const KeywordFst &kfst);

// Binary index: magic KWIX, version, options, factors with sorted postings.
std::string EncodeIndex(const TimedFactorIndex &index);
TimedFactorIndex DecodeIndex(const std::string &bytes);
void WriteIndex(const TimedFactorIndex &index, const std::string &path);
TimedFactorIndex ReadIndex(const std::string &path);

// TSV `keyword_id utt_id start_sec end_sec score decision` with YES/NO.
void WriteDetections(const std::vector<Detection> &dets, const std::string &path);
std::string FormatDetections(const std::vector<Detection> &dets);
std::vector<Detection> ReadDetections(const std::string &path);

}  // namespace kws

#endif  // KWS_LATTICE_INDEX_H_
