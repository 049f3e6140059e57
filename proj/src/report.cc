// src/report.cc

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

#include "kws/report.h"

#include <map>

#include "kws/error.h"

namespace kws {

using nlohmann::json;

json TwvReportToJson(const TwvReport &rep) {
  json kws = json::array();
  for (const auto &k : rep.keywords)
    kws.push_back({{"keyword_id", k.keyword_id},
                   {"n_true", k.n_true},
                   {"n_hit", k.n_hit},
                   {"n_fa", k.n_fa},
                   {"p_miss", k.p_miss},
                   {"p_fa", k.p_fa},
                   {"twv", k.twv}});
  return {{"beta", rep.beta},
          {"theta", rep.theta},
          {"total_speech_sec", rep.total_speech_sec},
          {"atwv", rep.atwv},
          {"mtwv", rep.mtwv},
          {"mtwv_threshold", rep.mtwv_threshold},
          // Keyword averages at theta.
          {"p_fa_avg_at_theta", rep.p_fa_avg},
          {"p_miss_avg_at_theta", rep.p_miss_avg},
          {"keywords", kws},
          {"excluded_keywords", rep.excluded_keywords}};
}

TwvReport TwvReportFromJson(const json &j) {
  TwvReport rep;
  try {
    rep.beta = j.at("beta").get<double>();
    rep.theta = j.at("theta").get<double>();
    rep.total_speech_sec = j.at("total_speech_sec").get<double>();
    rep.atwv = j.at("atwv").get<double>();
    rep.mtwv = j.at("mtwv").get<double>();
    rep.mtwv_threshold = j.at("mtwv_threshold").get<double>();
    rep.p_fa_avg = j.at("p_fa_avg_at_theta").get<double>();
    rep.p_miss_avg = j.at("p_miss_avg_at_theta").get<double>();
    for (const auto &k : j.at("keywords")) {
      KeywordTwv kt;
      kt.keyword_id = k.at("keyword_id").get<std::string>();
      kt.n_true = k.at("n_true").get<int>();
      kt.n_hit = k.at("n_hit").get<int>();
      kt.n_fa = k.at("n_fa").get<int>();
      kt.p_miss = k.at("p_miss").get<double>();
      kt.p_fa = k.at("p_fa").get<double>();
      kt.twv = k.at("twv").get<double>();
      rep.keywords.push_back(kt);
    }
    rep.excluded_keywords = j.at("excluded_keywords").get<std::vector<std::string>>();
  } catch (const json::exception &e) {
    Fail(ErrorCode::kParseError, std::string("TWV report: ") + e.what());
  }
  return rep;
}

json GroupReportsToJson(const std::vector<GroupReport> &groups) {
  json out = json::array();
  for (const auto &g : groups) {
    json item = {{"label", g.group.label},
                 {"age_min", g.group.age_min},
                 {"age_max", g.group.age_max},
                 {"num_utts", g.num_utts},
                 {"empty", g.empty}};
    item["report"] = g.report ? TwvReportToJson(*g.report) : json(nullptr);
    out.push_back(std::move(item));
  }
  return out;
}

json PairedTestToJson(const PairedTestResult &r) {
  return {{"n", r.n},
          {"mean_diff", r.mean_diff},
          {"t_stat", r.t_stat ? json(*r.t_stat) : json(nullptr)},
          {"t_pvalue", r.t_pvalue},
          {"degenerate_direction", r.degenerate_direction},
          {"wilcoxon_n", r.wilcoxon_n},
          {"wilcoxon_stat", r.wilcoxon_stat},
          {"wilcoxon_pvalue", r.wilcoxon_pvalue},
          {"wilcoxon_exact", r.wilcoxon_exact}};
}

void PairKeywordTwv(const TwvReport &a, const TwvReport &b, std::vector<double> *va,
                    std::vector<double> *vb, std::vector<std::string> *ids) {
  std::map<std::string, double> bt;
  for (const auto &k : b.keywords) bt[k.keyword_id] = k.twv;
  for (const auto &k : a.keywords) {
    auto it = bt.find(k.keyword_id);
    if (it == bt.end()) continue;
    va->push_back(k.twv);
    vb->push_back(it->second);
    if (ids) ids->push_back(k.keyword_id);
  }
}

std::string DumpJson(const json &j) { return j.dump(2) + "\n"; }

}  // namespace kws
