// src/decoder.cc

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

#include "kws/decoder.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "bytes.h"
#include "kws/error.h"
#include "kws/util.h"

namespace kws {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string Upper(std::string s) {
  for (char &c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}
}  // namespace

void Lexicon::Add(const std::string &word, const std::vector<std::string> &phones) {
  if (word.empty()) Fail(ErrorCode::kInvalidArgument, "empty word");
  if (phones.empty()) Fail(ErrorCode::kInvalidArgument, "word '" + word + "' has no phones");
  Entry e;
  e.word = Upper(word);
  auto &ids = by_word_[e.word];
  e.label = ids.empty() ? e.word : e.word + "(" + std::to_string(ids.size() + 1) + ")";
  e.phones = phones;
  const int id = static_cast<int>(entries_.size());
  ids.push_back(id);
  by_label_[e.label] = id;
  entries_.push_back(std::move(e));
}

Lexicon Lexicon::Read(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorCode::kNotFound, path);
  Lexicon lex;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto tok = SplitWhitespace(line);
    if (tok.empty()) continue;
    if (tok.size() < 2)
      Fail(ErrorCode::kParseError, path + ":" + std::to_string(line_no) + ": word without phones");
    lex.Add(tok[0], std::vector<std::string>(tok.begin() + 1, tok.end()));
  }
  return lex;
}

void Lexicon::Write(const std::string &path) const {
  std::ostringstream os;
  for (const auto &e : entries_) {
    os << e.word;
    for (const auto &p : e.phones) os << ' ' << p;
    os << '\n';
  }
  WriteFileBytes(path, os.str());
}

std::vector<int> Lexicon::WordIds(const std::string &word) const {
  auto it = by_word_.find(Upper(word));
  return it == by_word_.end() ? std::vector<int>() : it->second;
}

int Lexicon::IdOfLabel(const std::string &label) const {
  auto it = by_label_.find(label);
  return it == by_label_.end() ? -1 : it->second;
}

int LexiconGraph::NumWordArcs() const {
  int n = 0;
  for (const auto &s : states) n += static_cast<int>(s.words.size());
  return n;
}

LexiconGraph BuildLexiconGraph(const Lexicon &lexicon, const PhoneSet &phones, bool sil_loop) {
  if (lexicon.NumWordIds() == 0) Fail(ErrorCode::kEmptyLexicon, "lexicon has no words");
  // Build the trie keyed by phone index, then renumber breadth-first.
  struct Node {
    std::map<int, int> children;
    std::vector<int> words;
  };
  std::vector<Node> trie(1);
  for (int w = 0; w < lexicon.NumWordIds(); ++w) {
    int cur = 0;
    for (const auto &sym : lexicon.entry(w).phones) {
      const int p = phones.Index(sym);
      auto it = trie[cur].children.find(p);
      if (it == trie[cur].children.end()) {
        trie.emplace_back();
        it = trie[cur].children.emplace(p, static_cast<int>(trie.size()) - 1).first;
      }
      cur = it->second;
    }
    trie[cur].words.push_back(w);
  }
  LexiconGraph g;
  g.sil_loop = sil_loop;
  g.num_word_ids = lexicon.NumWordIds();
  g.states.resize(trie.size());
  std::vector<int> new_id(trie.size(), -1);
  std::queue<int> queue;
  queue.push(0);
  new_id[0] = 0;
  int next = 1;
  while (!queue.empty()) {
    const int old = queue.front();
    queue.pop();
    auto &st = g.states[new_id[old]];
    st.words = trie[old].words;
    for (const auto &[p, child] : trie[old].children) {
      new_id[child] = next++;
      g.states[new_id[child]].phone = p;
      st.children.push_back(new_id[child]);
      queue.push(child);
    }
  }
  return g;
}

std::vector<int> ValidateLattice(const Lattice &lat) {
  auto bad = [&](const std::string &msg) {
    Fail(ErrorCode::kInvalidArgument, "lattice " + lat.utt_id + ": " + msg);
  };
  if (lat.num_nodes <= 0) bad("no nodes");
  std::vector<int> frame(lat.num_nodes, -1);
  auto set_frame = [&](int node, int f) {
    if (frame[node] >= 0 && frame[node] != f) bad("node " + std::to_string(node) + " at two frames");
    frame[node] = f;
  };
  std::vector<int> indeg(lat.num_nodes, 0), outdeg(lat.num_nodes, 0);
  for (const auto &a : lat.arcs) {
    if (a.src < 0 || a.src >= lat.num_nodes || a.dst < 0 || a.dst >= lat.num_nodes)
      bad("arc node out of range");
    if (a.word < -1 || a.word >= static_cast<int>(lat.words.size())) bad("arc word out of range");
    if (a.start_frame < 0 || a.start_frame > a.end_frame || a.end_frame > lat.num_frames)
      bad("arc frames not monotone");
    if (!std::isfinite(a.acoustic_cost) || !std::isfinite(a.graph_cost)) bad("non-finite cost");
    set_frame(a.src, a.start_frame);
    set_frame(a.dst, a.end_frame);
    ++indeg[a.dst];
    ++outdeg[a.src];
  }
  TopologicalOrder(lat);
  // In a DAG with one source whose sinks all sit at the last frame, every arc
  // lies on a complete path.
  auto disconnected = [&](const std::string &msg) {
    Fail(ErrorCode::kDisconnectedLattice, "lattice " + lat.utt_id + ": " + msg);
  };
  int starts = 0;
  for (int n = 0; n < lat.num_nodes; ++n) {
    if (frame[n] < 0) disconnected("isolated node " + std::to_string(n));
    if (indeg[n] == 0) {
      ++starts;
      if (frame[n] != 0) disconnected("initial node not at frame 0");
    }
    if (outdeg[n] == 0 && frame[n] != lat.num_frames)
      disconnected("dead-end node before the last frame");
  }
  if (starts != 1) disconnected("expected exactly one start node");
  return frame;
}

std::vector<int> TopologicalOrder(const Lattice &lat) {
  std::vector<std::vector<int>> out(lat.num_nodes);
  std::vector<int> indeg(lat.num_nodes, 0);
  for (const auto &a : lat.arcs) {
    out[a.src].push_back(a.dst);
    ++indeg[a.dst];
  }
  std::vector<int> order;
  std::vector<int> ready;
  for (int n = lat.num_nodes - 1; n >= 0; --n)
    if (indeg[n] == 0) ready.push_back(n);
  while (!ready.empty()) {
    const int n = ready.back();
    ready.pop_back();
    order.push_back(n);
    for (int d : out[n])
      if (--indeg[d] == 0) ready.push_back(d);
  }
  if (static_cast<int>(order.size()) != lat.num_nodes)
    Fail(ErrorCode::kInvalidArgument, "lattice " + lat.utt_id + " has a cycle");
  return order;
}

int LatticeStartNode(const Lattice &lat) {
  std::vector<int> indeg(lat.num_nodes, 0);
  for (const auto &a : lat.arcs) ++indeg[a.dst];
  for (int n = 0; n < lat.num_nodes; ++n)
    if (indeg[n] == 0) return n;
  Fail(ErrorCode::kInvalidArgument, "lattice " + lat.utt_id + " has no start node");
}

BestPath LatticeBestPath(const Lattice &lat) {
  const std::vector<int> frame = ValidateLattice(lat);
  std::vector<std::vector<int>> in(lat.num_nodes);
  for (size_t i = 0; i < lat.arcs.size(); ++i) in[lat.arcs[i].dst].push_back(static_cast<int>(i));
  std::vector<double> best(lat.num_nodes, kInf);
  std::vector<int> back(lat.num_nodes, -1);
  best[LatticeStartNode(lat)] = 0.0;
  for (int n : TopologicalOrder(lat))
    for (int i : in[n]) {
      const auto &a = lat.arcs[i];
      const double c = best[a.src] + a.Cost();
      if (c < best[n]) {
        best[n] = c;
        back[n] = i;
      }
    }
  BestPath path;
  path.cost = kInf;
  int end = -1;
  for (int n = 0; n < lat.num_nodes; ++n)
    if (frame[n] == lat.num_frames && best[n] < path.cost) {
      path.cost = best[n];
      end = n;
    }
  for (int n = end; n >= 0 && back[n] >= 0; n = lat.arcs[back[n]].src) path.arcs.push_back(back[n]);
  std::reverse(path.arcs.begin(), path.arcs.end());
  return path;
}

std::string FormatLattices(const std::vector<Lattice> &lats) {
  std::string out;
  for (const auto &lat : lats) {
    out += "UTT " + lat.utt_id + " " + std::to_string(lat.num_frames) + " " +
           FormatDouble(lat.frame_shift) + "\n";
    for (const auto &a : lat.arcs) {
      out += "ARC " + std::to_string(a.src) + " " + std::to_string(a.dst) + " " +
             (a.word < 0 ? std::string("-") : lat.words[a.word]) + " " +
             FormatDouble(a.acoustic_cost) + " " + FormatDouble(a.graph_cost) + " " +
             std::to_string(a.start_frame) + " " + std::to_string(a.end_frame) + "\n";
    }
    out += "END\n";
  }
  return out;
}

void WriteLattices(const std::vector<Lattice> &lats, const std::string &path) {
  WriteFileBytes(path, FormatLattices(lats));
}

std::vector<Lattice> ParseLattices(const std::string &text, const std::string &source) {
  std::vector<Lattice> lats;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  Lattice cur;
  std::map<std::string, int> word_index;
  bool open = false;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    auto tok = SplitWhitespace(line);
    if (tok.empty()) continue;
    if (tok[0] == "UTT") {
      if (open || tok.size() != 4) Fail(ErrorCode::kParseError, where + ": unexpected UTT line");
      cur = Lattice();
      word_index.clear();
      cur.utt_id = tok[1];
      cur.num_frames = static_cast<int>(ParseInt(tok[2], where));
      cur.frame_shift = static_cast<float>(ParseDouble(tok[3], where));
      open = true;
    } else if (tok[0] == "ARC") {
      if (!open || tok.size() != 8) Fail(ErrorCode::kParseError, where + ": malformed ARC line");
      LatticeArc a;
      a.src = static_cast<int>(ParseInt(tok[1], where));
      a.dst = static_cast<int>(ParseInt(tok[2], where));
      if (a.src < 0 || a.dst < 0) Fail(ErrorCode::kParseError, where + ": negative node id");
      if (tok[3] != "-") {
        auto [it, fresh] = word_index.emplace(tok[3], static_cast<int>(cur.words.size()));
        if (fresh) cur.words.push_back(tok[3]);
        a.word = it->second;
      }
      a.acoustic_cost = ParseDouble(tok[4], where);
      a.graph_cost = ParseDouble(tok[5], where);
      a.start_frame = static_cast<int>(ParseInt(tok[6], where));
      a.end_frame = static_cast<int>(ParseInt(tok[7], where));
      cur.num_nodes = std::max(cur.num_nodes, std::max(a.src, a.dst) + 1);
      cur.arcs.push_back(a);
    } else if (tok[0] == "END") {
      if (!open) Fail(ErrorCode::kParseError, where + ": END without UTT");
      ValidateLattice(cur);
      lats.push_back(std::move(cur));
      open = false;
    } else {
      Fail(ErrorCode::kParseError, where + ": unknown record '" + tok[0] + "'");
    }
  }
  if (open) Fail(ErrorCode::kParseError, source + ": missing END for " + cur.utt_id);
  return lats;
}

std::vector<Lattice> ReadLattices(const std::string &path) {
  return ParseLattices(ReadFileBytes(path), path);
}

namespace {

struct Token {
  int state;
  int start;  // frame boundary where the current word began
  double cost;
};

// Word-level arc before node renumbering; src/dst are frame boundaries.
struct RawArc {
  int t0;
  int t1;
  int word;
  double acoustic;
  double graph;
};

inline uint64_t TokenKey(int state, int start) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(state)) << 32) | static_cast<uint32_t>(start);
}

bool TokenLess(const Token &a, const Token &b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  if (a.state != b.state) return a.state < b.state;
  return a.start < b.start;
}

}  // namespace

DecodeResult Decode(const Eigen::MatrixXd &loglikes, const std::string &utt_id, float frame_shift,
                    const LexiconGraph &graph, const Lexicon &lexicon,
                    const DecodeOptions &opts) {
  const int num_frames = static_cast<int>(loglikes.rows());
  if (num_frames == 0) Fail(ErrorCode::kEmptyPosteriors, utt_id + ": no frames");
  if (opts.beam < 0.0 || opts.lattice_beam < 0.0 || opts.max_active < 1)
    Fail(ErrorCode::kInvalidArgument, "beams must be >= 0 and max_active >= 1");
  for (const auto &s : graph.states)
    if (s.phone >= loglikes.cols())
      Fail(ErrorCode::kDimMismatch, utt_id + ": graph uses a phone beyond the posterior width");

  const double word_graph_cost = opts.word_penalty + std::log(static_cast<double>(graph.num_word_ids));
  const auto &root = graph.states[0];

  // alpha[t]: best cost of the root at boundary t; inf when inactive.
  std::vector<double> alpha(num_frames + 1, kInf);
  alpha[0] = 0.0;
  std::vector<RawArc> arcs;
  std::vector<Token> tokens;
  std::vector<Token> next;
  std::unordered_map<uint64_t, size_t> slot;

  for (int t = 0; t < num_frames; ++t) {
    next.clear();
    slot.clear();
    auto relax = [&](int state, int start, double cost) {
      auto [it, fresh] = slot.emplace(TokenKey(state, start), next.size());
      if (fresh)
        next.push_back({state, start, cost});
      else if (cost < next[it->second].cost)
        next[it->second].cost = cost;
    };
    auto emit = [&](int state) { return -loglikes(t, graph.states[state].phone); };

    for (const auto &tok : tokens) {
      relax(tok.state, tok.start, tok.cost + emit(tok.state));
      for (int c : graph.states[tok.state].children) relax(c, tok.start, tok.cost + emit(c));
    }
    double sil_cost = kInf;
    if (alpha[t] < kInf) {
      for (int c : root.children) relax(c, t, alpha[t] + emit(c));
      if (graph.sil_loop) sil_cost = alpha[t] - loglikes(t, 0);
    }

    // Beam and max_active pruning. The root candidate via SIL takes part in
    // setting the best cost. On the last frame only hypotheses that end at the
    // root can finish, so the beam is taken relative to the best of those.
    const bool last = t + 1 == num_frames;
    double best = sil_cost;
    for (const auto &tok : next) {
      if (last && graph.states[tok.state].words.empty()) continue;
      best = std::min(best, last ? tok.cost + word_graph_cost : tok.cost);
    }
    const double limit = best + opts.beam;
    std::erase_if(next, [&](const Token &tok) {
      if (!last) return tok.cost > limit;
      return graph.states[tok.state].words.empty() || tok.cost + word_graph_cost > limit;
    });
    std::sort(next.begin(), next.end(), TokenLess);
    if (static_cast<int>(next.size()) > opts.max_active) next.resize(opts.max_active);

    // Word ends from surviving tokens; they close at boundary t + 1.
    double root_cost = kInf;
    if (sil_cost <= limit) {
      arcs.push_back({t, t + 1, -1, -loglikes(t, 0), 0.0});
      root_cost = sil_cost;
    }
    for (const auto &tok : next) {
      const auto &words = graph.states[tok.state].words;
      if (words.empty()) continue;
      const double acoustic = tok.cost - alpha[tok.start];
      for (int w : words) arcs.push_back({tok.start, t + 1, w, acoustic, word_graph_cost});
      root_cost = std::min(root_cost, tok.cost + word_graph_cost);
    }
    if (root_cost <= limit) alpha[t + 1] = root_cost;
    tokens.swap(next);
  }

  if (!(alpha[num_frames] < kInf))
    Fail(ErrorCode::kNoSurvivingPath, utt_id + ": no path reaches the end of the utterance");
  const double viterbi = alpha[num_frames];

  // Lattice-beam pruning with forward (alpha) and backward best costs.
  std::vector<double> beta(num_frames + 1, kInf);
  beta[num_frames] = 0.0;
  std::vector<size_t> by_src(arcs.size());
  for (size_t i = 0; i < arcs.size(); ++i) by_src[i] = i;
  std::stable_sort(by_src.begin(), by_src.end(),
                   [&](size_t a, size_t b) { return arcs[a].t0 > arcs[b].t0; });
  for (size_t i : by_src) {
    const auto &a = arcs[i];
    if (alpha[a.t1] < kInf)
      beta[a.t0] = std::min(beta[a.t0], a.acoustic + a.graph + beta[a.t1]);
  }
  const double keep_limit = viterbi + opts.lattice_beam;
  std::vector<char> keep(arcs.size(), 0);
  std::vector<int> node_of(num_frames + 1, -1);
  for (size_t i = 0; i < arcs.size(); ++i) {
    const auto &a = arcs[i];
    if (alpha[a.t1] == kInf || beta[a.t1] == kInf) continue;
    const double through = alpha[a.t0] + a.acoustic + a.graph + beta[a.t1];
    // Small slack absorbs rounding in the summed costs so the best path is
    // never dropped.
    if (through <= keep_limit + 1e-9 * (1.0 + std::abs(keep_limit))) {
      keep[i] = 1;
      node_of[a.t0] = node_of[a.t1] = 0;
    }
  }
  DecodeResult result;
  result.viterbi_cost = viterbi;
  Lattice &lat = result.lattice;
  lat.utt_id = utt_id;
  lat.num_frames = num_frames;
  lat.frame_shift = frame_shift;
  for (int t = 0; t <= num_frames; ++t)
    if (node_of[t] == 0) node_of[t] = lat.num_nodes++;
  std::map<int, int> word_index;
  for (size_t i = 0; i < arcs.size(); ++i) {
    if (!keep[i]) continue;
    const auto &a = arcs[i];
    LatticeArc out;
    out.src = node_of[a.t0];
    out.dst = node_of[a.t1];
    if (a.word >= 0) {
      auto [it, fresh] = word_index.emplace(a.word, static_cast<int>(lat.words.size()));
      if (fresh) lat.words.push_back(lexicon.entry(a.word).label);
      out.word = it->second;
    }
    out.acoustic_cost = a.acoustic;
    out.graph_cost = a.graph;
    out.start_frame = a.t0;
    out.end_frame = a.t1;
    lat.arcs.push_back(out);
  }
  return result;
}

}  // namespace kws
