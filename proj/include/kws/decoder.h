// include/kws/decoder.h

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

#ifndef KWS_DECODER_H_
#define KWS_DECODER_H_

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kws/acoustic_model.h"

namespace kws {

// Pronunciation lexicon. Each (word, pronunciation) pair gets its own word id;
// the first pronunciation of WORD is labelled "WORD", later ones "WORD(2)",
// "WORD(3)" and so on. Labels are what lattices and indices carry.
class Lexicon {
 public:
  struct Entry {
    std::string word;
    std::string label;
    std::vector<std::string> phones;
  };

  // Words are upper-cased. Throws kInvalidArgument on an empty pronunciation
  // and kEmptyLexicon if nothing is added before use.
  void Add(const std::string &word, const std::vector<std::string> &phones);

  // Text format: `WORD PH1 PH2 ...` per line; repeated words add variants.
  static Lexicon Read(const std::string &path);
  void Write(const std::string &path) const;

  int NumWordIds() const { return static_cast<int>(entries_.size()); }
  const Entry &entry(int word_id) const { return entries_[word_id]; }
  const std::vector<Entry> &entries() const { return entries_; }
  // Word ids of every pronunciation of `word` (empty if absent).
  std::vector<int> WordIds(const std::string &word) const;
  // -1 if the label is unknown.
  int IdOfLabel(const std::string &label) const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::vector<int>> by_word_;
  std::map<std::string, int> by_label_;
};

// Deterministic prefix tree over phones. State 0 is the root; every other
// state stands for one distinct pronunciation prefix and is entered by an arc
// labelled with the prefix's last phone. States numbered breadth-first with
// children in phone-index order.
struct LexiconGraph {
  struct State {
    int phone = -1;                 // phone emitted while in this state (-1 at root)
    std::vector<int> children;      // sorted by phone index
    std::vector<int> words;         // word ids ending here (word-emitting arcs)
  };
  std::vector<State> states;
  bool sil_loop = true;  // optional SIL self-loop at the root
  int num_word_ids = 0;

  int NumPhoneArcs() const { return static_cast<int>(states.size()) - 1; }
  int NumWordArcs() const;
};

// Throws kUnknownPhone if a pronunciation uses a phone outside `phones`, and
// kEmptyLexicon on an empty lexicon.
LexiconGraph BuildLexiconGraph(const Lexicon &lexicon, const PhoneSet &phones,
                               bool sil_loop = true);

// Word lattice. Node ids are dense; each node lies at one frame boundary
// (0..num_frames). word == -1 marks an epsilon arc.
struct LatticeArc {
  int src = 0;
  int dst = 0;
  int word = -1;
  double acoustic_cost = 0.0;
  double graph_cost = 0.0;
  int start_frame = 0;
  int end_frame = 0;

  double Cost() const { return acoustic_cost + graph_cost; }
  bool operator==(const LatticeArc &other) const = default;
};

struct Lattice {
  std::string utt_id;
  int num_frames = 0;
  float frame_shift = 0.01f;
  int num_nodes = 0;
  std::vector<LatticeArc> arcs;
  // Word labels, indexed by LatticeArc::word.
  std::vector<std::string> words;

  bool operator==(const Lattice &other) const = default;
};

// Structural checks: ids in range, start_frame <= end_frame, frames agree with
// node frames, acyclic (kInvalidArgument); a unique start node at frame 0 and
// every sink at num_frames (kDisconnectedLattice). Returns per-node frames.
// Final nodes are the sinks.
std::vector<int> ValidateLattice(const Lattice &lat);
int LatticeStartNode(const Lattice &lat);
// Nodes in an order where every arc goes forward.
std::vector<int> TopologicalOrder(const Lattice &lat);

struct BestPath {
  double cost = 0.0;
  std::vector<int> arcs;  // indices into lat.arcs, in path order
};
BestPath LatticeBestPath(const Lattice &lat);

// Text format, one block per utterance:
//   UTT <id> <num_frames> <frame_shift>
//   ARC <src> <dst> <word|-> <acoustic_cost> <graph_cost> <start_frame> <end_frame>
//   END
void WriteLattices(const std::vector<Lattice> &lats, const std::string &path);
std::string FormatLattices(const std::vector<Lattice> &lats);
std::vector<Lattice> ReadLattices(const std::string &path);
std::vector<Lattice> ParseLattices(const std::string &text, const std::string &source);

struct DecodeOptions {
  double beam = 16.0;
  double lattice_beam = 8.0;
  double word_penalty = 0.0;
  int max_active = 2000;
  // Batch decoding retries an utterance that fails with kNoSurvivingPath once
  // at this beam; 0 disables the retry. Decode() itself ignores it.
  double retry_beam = 64.0;
};

struct DecodeResult {
  Lattice lattice;
  double viterbi_cost = 0.0;
};

// Frame-synchronous Viterbi beam search over `graph` with costs
// -loglikes(t, phone). Each phone occupies at least one frame; a word may
// start at any frame boundary where the root is active, and SIL frames pass
// between words as epsilon arcs. Word arcs carry the best within-word
// alignment cost and graph cost word_penalty + log(num word ids).
// Throws kEmptyPosteriors for T = 0 and kNoSurvivingPath when the root is not
// active after the last frame.
DecodeResult Decode(const Eigen::MatrixXd &loglikes, const std::string &utt_id, float frame_shift,
                    const LexiconGraph &graph, const Lexicon &lexicon,
                    const DecodeOptions &opts);

}  // namespace kws

#endif  // KWS_DECODER_H_
