// src/lattice_index.cc

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

#include "kws/lattice_index.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <tuple>

#include "bytes.h"
#include "kws/error.h"
#include "kws/util.h"

namespace kws {

namespace {
constexpr double kLogZero = -std::numeric_limits<double>::infinity();
}  // namespace

PosteriorLattice LatticePosteriors(const Lattice &lat) {
  PosteriorLattice p;
  p.lattice = lat;
  p.node_frame = ValidateLattice(lat);
  const int n = lat.num_nodes;
  std::vector<std::vector<int>> in(n), out(n);
  for (size_t i = 0; i < lat.arcs.size(); ++i) {
    in[lat.arcs[i].dst].push_back(static_cast<int>(i));
    out[lat.arcs[i].src].push_back(static_cast<int>(i));
  }
  const std::vector<int> order = TopologicalOrder(lat);
  p.forward.assign(n, kLogZero);
  p.backward.assign(n, kLogZero);
  p.forward[LatticeStartNode(lat)] = 0.0;
  for (int node : order)
    for (int i : in[node]) {
      const auto &a = lat.arcs[i];
      p.forward[node] = LogAdd(p.forward[node], p.forward[a.src] - a.Cost());
    }
  p.total = kLogZero;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int node = *it;
    if (out[node].empty()) {
      p.backward[node] = 0.0;
      p.total = LogAdd(p.total, p.forward[node]);
    }
    for (int i : out[node]) {
      const auto &a = lat.arcs[i];
      p.backward[node] = LogAdd(p.backward[node], p.backward[a.dst] - a.Cost());
    }
  }
  if (!std::isfinite(p.total))
    Fail(ErrorCode::kDisconnectedLattice, "lattice " + lat.utt_id + " has no finite path mass");
  p.arc_posterior.resize(lat.arcs.size());
  for (size_t i = 0; i < lat.arcs.size(); ++i) {
    const auto &a = lat.arcs[i];
    p.arc_posterior[i] = std::exp(p.forward[a.src] - a.Cost() + p.backward[a.dst] - p.total);
  }
  return p;
}

std::vector<double> FrameCutSums(const PosteriorLattice &plat) {
  std::vector<double> sums(plat.lattice.num_frames, 0.0);
  for (size_t i = 0; i < plat.lattice.arcs.size(); ++i) {
    const auto &a = plat.lattice.arcs[i];
    for (int t = a.start_frame; t < a.end_frame; ++t) sums[t] += plat.arc_posterior[i];
  }
  return sums;
}

std::vector<std::vector<std::string>> KeywordFst::Paths() const {
  std::vector<std::vector<std::string>> paths;
  std::vector<std::vector<int>> out(num_states);
  for (size_t i = 0; i < arcs.size(); ++i) out[arcs[i].src].push_back(static_cast<int>(i));
  std::vector<std::string> prefix;
  // Depth-first; the acceptor is acyclic so this terminates.
  auto walk = [&](auto &&self, int state) -> void {
    if (state == 1) {
      paths.push_back(prefix);
      return;
    }
    for (int i : out[state]) {
      prefix.push_back(arcs[i].label);
      self(self, arcs[i].dst);
      prefix.pop_back();
    }
  };
  walk(walk, 0);
  return paths;
}

const std::vector<std::string> &BuiltinKeywords() {
  static const std::vector<std::string> kKeywords = {
      "ZERO",   "ONE",   "TWO",    "THREE",  "FOUR",      "FIVE", "SIX",    "SEVEN",
      "EIGHT",  "NINE",  "TEN",    "THERE",  "THEY",      "BANK", "NUMBER", "POINT",
      "MONTH",  "WITH",  "YEAR",   "PEOPLE", "GOT",       "ORANGE", "BEAUTIFUL", "LIKE",
      "YELLOW", "TEACHER", "TEETH", "BIRTHDAY", "RED",    "FEBRUARY"};
  return kKeywords;
}

std::vector<std::string> BuiltinKeywordSet(int size) {
  if (size != 10 && size != 20 && size != 30)
    Fail(ErrorCode::kInvalidArgument, "built-in keyword sets have 10, 20 or 30 entries");
  const auto &all = BuiltinKeywords();
  return std::vector<std::string>(all.begin(), all.begin() + size);
}

std::vector<KeywordFst> BuildKeywordFsts(const std::vector<std::string> &keywords,
                                         const Lexicon &lexicon, std::vector<std::string> *oov) {
  std::vector<KeywordFst> fsts;
  for (const auto &raw : keywords) {
    std::string kw = raw;
    for (char &c : kw) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const auto words = SplitWhitespace(kw);
    if (words.empty()) continue;
    std::string id;
    for (const auto &w : words) id += (id.empty() ? "" : " ") + w;
    std::vector<std::vector<int>> choices;
    bool missing = false;
    for (const auto &w : words) {
      choices.push_back(lexicon.WordIds(w));
      if (choices.back().empty()) missing = true;
    }
    if (missing) {
      std::cerr << "WARNING: keyword '" << id << "' is not in the lexicon; skipped\n";
      if (oov) oov->push_back(id);
      continue;
    }
    KeywordFst fst;
    fst.keyword_id = id;
    // A chain of fresh states per surface form, sharing start (0) and final (1).
    std::vector<size_t> pick(words.size(), 0);
    while (true) {
      int cur = 0;
      for (size_t j = 0; j < words.size(); ++j) {
        const int dst = j + 1 == words.size() ? 1 : fst.num_states++;
        fst.arcs.push_back({cur, dst, lexicon.entry(choices[j][pick[j]]).label});
        cur = dst;
      }
      size_t j = words.size();
      while (j > 0 && ++pick[j - 1] == choices[j - 1].size()) pick[--j] = 0;
      if (j == 0) break;
    }
    fsts.push_back(std::move(fst));
  }
  return fsts;
}

std::vector<Posting> MergePostings(std::vector<Posting> postings, double merge_tol) {
  auto span_less = [](const Posting &a, const Posting &b) {
    return std::tie(a.utt_id, a.start, a.end) < std::tie(b.utt_id, b.start, b.end);
  };
  std::sort(postings.begin(), postings.end(), span_less);
  // Identical spans are one hypothesis reached along different lattice paths.
  std::vector<Posting> summed;
  for (auto &p : postings) {
    if (!summed.empty() && summed.back().utt_id == p.utt_id && summed.back().start == p.start &&
        summed.back().end == p.end)
      summed.back().posterior += p.posterior;
    else
      summed.push_back(std::move(p));
  }
  for (auto &p : summed) p.posterior = std::min(p.posterior, 1.0);

  auto mid = [](const Posting &p) { return 0.5 * (p.start + p.end); };
  std::stable_sort(summed.begin(), summed.end(), [&](const Posting &a, const Posting &b) {
    if (a.utt_id != b.utt_id) return a.utt_id < b.utt_id;
    return mid(a) < mid(b);
  });
  std::vector<Posting> merged;
  size_t i = 0;
  while (i < summed.size()) {
    Posting anchor = summed[i];
    const double anchor_mid = mid(anchor);
    size_t j = i + 1;
    while (j < summed.size() && summed[j].utt_id == anchor.utt_id &&
           mid(summed[j]) - anchor_mid <= merge_tol) {
      anchor.posterior = std::max(anchor.posterior, summed[j].posterior);
      ++j;
    }
    merged.push_back(std::move(anchor));
    i = j;
  }
  std::sort(merged.begin(), merged.end(), span_less);
  return merged;
}

std::map<std::vector<std::string>, std::vector<Posting>> ExtractFactors(
    const PosteriorLattice &plat, int max_factor_len) {
  if (max_factor_len < 1) Fail(ErrorCode::kInvalidArgument, "max_factor_len must be >= 1");
  const Lattice &lat = plat.lattice;
  const int n = lat.num_nodes;
  std::vector<std::vector<int>> out(n);
  for (size_t i = 0; i < lat.arcs.size(); ++i) out[lat.arcs[i].src].push_back(static_cast<int>(i));
  const std::vector<int> order = TopologicalOrder(lat);
  std::vector<int> rank(n);
  for (int r = 0; r < n; ++r) rank[order[r]] = r;

  using Key = std::tuple<std::vector<int>, int, int>;  // word ids, start frame, end frame
  std::map<Key, double> mass;                             // log posterior
  auto add = [&](const Key &key, double logp) {
    auto [it, fresh] = mass.emplace(key, logp);
    if (!fresh) it->second = LogAdd(it->second, logp);
  };

  for (size_t first = 0; first < lat.arcs.size(); ++first) {
    const auto &a1 = lat.arcs[first];
    if (a1.word < 0) continue;
    // Partial segments that began with a1, keyed by (rank of current node,
    // node, labels so far); the value is the log mass from the lattice start.
    std::map<std::tuple<int, int, std::vector<int>>, double> frontier;
    const double enter = plat.forward[a1.src] - a1.Cost();
    add({{a1.word}, a1.start_frame, a1.end_frame}, enter + plat.backward[a1.dst] - plat.total);
    frontier[{rank[a1.dst], a1.dst, {a1.word}}] = enter;
    while (!frontier.empty()) {
      auto node_it = frontier.begin();
      const int node = std::get<1>(node_it->first);
      const std::vector<int> labels = std::get<2>(node_it->first);
      const double m = node_it->second;
      frontier.erase(node_it);
      for (int i : out[node]) {
        const auto &b = lat.arcs[i];
        const double next = m - b.Cost();
        std::vector<int> ext = labels;
        if (b.word >= 0) {
          if (static_cast<int>(labels.size()) >= max_factor_len) continue;
          ext.push_back(b.word);
          add({ext, a1.start_frame, b.end_frame}, next + plat.backward[b.dst] - plat.total);
          if (static_cast<int>(ext.size()) >= max_factor_len) continue;
        }
        auto key = std::make_tuple(rank[b.dst], b.dst, std::move(ext));
        auto [it, fresh] = frontier.emplace(std::move(key), next);
        if (!fresh) it->second = LogAdd(it->second, next);
      }
    }
  }

  std::map<std::vector<std::string>, std::vector<Posting>> factors;
  const double shift = static_cast<double>(lat.frame_shift);
  for (const auto &[key, logp] : mass) {
    const auto &[ids, sf, ef] = key;
    std::vector<std::string> labels;
    for (int id : ids) labels.push_back(lat.words[id]);
    Posting p;
    p.utt_id = lat.utt_id;
    p.start = sf * shift;
    p.end = ef * shift;
    p.posterior = std::min(std::exp(logp), 1.0);
    if (p.posterior > 0.0) factors[labels].push_back(std::move(p));
  }
  return factors;
}

TimedFactorIndex BuildIndex(const std::vector<PosteriorLattice> &lats, const IndexOptions &opts,
                            int jobs) {
  std::set<std::string> ids;
  for (const auto &l : lats)
    if (!ids.insert(l.lattice.utt_id).second)
      Fail(ErrorCode::kDuplicateUttId, "lattice '" + l.lattice.utt_id + "' given twice");
  std::vector<std::map<std::vector<std::string>, std::vector<Posting>>> per(lats.size());
  ParallelFor(lats.size(), jobs, [&](size_t i) { per[i] = ExtractFactors(lats[i], opts.max_factor_len); });
  TimedFactorIndex index;
  index.opts = opts;
  for (auto &factors : per)
    for (auto &[labels, posts] : factors) {
      auto &dst = index.postings[labels];
      // Postings of one lattice share an utterance, so merging each batch on
      // its own gives the same result as merging the whole list.
      auto merged = MergePostings(std::move(posts), opts.merge_tol);
      dst.insert(dst.end(), merged.begin(), merged.end());
    }
  for (auto &[labels, posts] : index.postings)
    std::sort(posts.begin(), posts.end(), [](const Posting &a, const Posting &b) {
      return std::tie(a.utt_id, a.start, a.end) < std::tie(b.utt_id, b.start, b.end);
    });
  return index;
}

std::vector<Detection> Search(const TimedFactorIndex &index, const KeywordFst &kfst) {
  std::vector<Posting> hits;
  std::set<std::vector<std::string>> seen;
  for (const auto &path : kfst.Paths()) {
    if (!seen.insert(path).second) continue;
    auto it = index.postings.find(path);
    if (it != index.postings.end()) hits.insert(hits.end(), it->second.begin(), it->second.end());
  }
  std::vector<Detection> dets;
  for (auto &p : MergePostings(std::move(hits), index.opts.merge_tol)) {
    Detection d;
    d.keyword_id = kfst.keyword_id;
    d.utt_id = std::move(p.utt_id);
    d.start = p.start;
    d.end = p.end;
    d.score = p.posterior;
    dets.push_back(std::move(d));
  }
  return dets;
}

namespace {
constexpr char kIndexMagic[4] = {'K', 'W', 'I', 'X'};
constexpr uint32_t kIndexVersion = 1;

void PutStr16(std::string *out, const std::string &s) {
  if (s.size() > 0xffff) Fail(ErrorCode::kInvalidArgument, "string too long for index");
  PutU16(out, static_cast<uint16_t>(s.size()));
  *out += s;
}
}  // namespace

std::string EncodeIndex(const TimedFactorIndex &index) {
  std::string out(kIndexMagic, 4);
  PutU32(&out, kIndexVersion);
  PutU32(&out, static_cast<uint32_t>(index.opts.max_factor_len));
  PutF64(&out, index.opts.merge_tol);
  PutU32(&out, static_cast<uint32_t>(index.postings.size()));
  for (const auto &[labels, posts] : index.postings) {
    PutU32(&out, static_cast<uint32_t>(labels.size()));
    for (const auto &l : labels) PutStr16(&out, l);
    PutU32(&out, static_cast<uint32_t>(posts.size()));
    for (const auto &p : posts) {
      PutStr16(&out, p.utt_id);
      PutF64(&out, p.start);
      PutF64(&out, p.end);
      PutF64(&out, p.posterior);
    }
  }
  return out;
}

TimedFactorIndex DecodeIndex(const std::string &bytes) {
  ByteReader in(bytes, ErrorCode::kCorruptArchive, "index file");
  if (in.Str(4) != std::string(kIndexMagic, 4)) in.Bad("bad magic");
  if (in.U32() != kIndexVersion) in.Bad("unsupported version");
  TimedFactorIndex index;
  index.opts.max_factor_len = static_cast<int>(in.U32());
  index.opts.merge_tol = in.F64();
  const uint32_t num_factors = in.U32();
  for (uint32_t f = 0; f < num_factors; ++f) {
    const uint32_t len = in.U32();
    if (len == 0 || len > 1024) in.Bad("bad factor length");
    std::vector<std::string> labels(len);
    for (auto &l : labels) l = in.Str(in.U16());
    const uint32_t count = in.U32();
    auto &posts = index.postings[labels];
    for (uint32_t i = 0; i < count; ++i) {
      Posting p;
      p.utt_id = in.Str(in.U16());
      p.start = in.F64();
      p.end = in.F64();
      p.posterior = in.F64();
      posts.push_back(std::move(p));
    }
  }
  if (!in.AtEnd()) in.Bad("trailing bytes");
  return index;
}

void WriteIndex(const TimedFactorIndex &index, const std::string &path) {
  WriteFileBytes(path, EncodeIndex(index));
}

TimedFactorIndex ReadIndex(const std::string &path) { return DecodeIndex(ReadFileBytes(path)); }

std::string FormatDetections(const std::vector<Detection> &dets) {
  std::string out;
  for (const auto &d : dets) {
    // Multi-word keyword ids keep their spaces; fields are tab separated.
    out += d.keyword_id + "\t" + d.utt_id + "\t" + FormatDouble(d.start) + "\t" +
           FormatDouble(d.end) + "\t" + FormatDouble(d.score) + "\t" +
           (d.decision ? "YES" : "NO") + "\n";
  }
  return out;
}

void WriteDetections(const std::vector<Detection> &dets, const std::string &path) {
  WriteFileBytes(path, FormatDetections(dets));
}

std::vector<Detection> ReadDetections(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorCode::kNotFound, path);
  std::vector<Detection> dets;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string where = path + ":" + std::to_string(line_no);
    const std::vector<std::string> f = SplitFields(line);
    if (f.empty()) continue;
    if (f.size() != 5 && f.size() != 6)
      Fail(ErrorCode::kParseError, where + ": expected 5 or 6 fields");
    Detection d;
    d.keyword_id = f[0];
    d.utt_id = f[1];
    d.start = ParseDouble(f[2], where);
    d.end = ParseDouble(f[3], where);
    d.score = ParseDouble(f[4], where);
    if (f.size() == 6) {
      if (f[5] != "YES" && f[5] != "NO") Fail(ErrorCode::kParseError, where + ": decision must be YES or NO");
      d.decision = f[5] == "YES";
    }
    dets.push_back(std::move(d));
  }
  return dets;
}

}  // namespace kws
