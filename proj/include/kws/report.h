// include/kws/report.h

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

#ifndef KWS_REPORT_H_
#define KWS_REPORT_H_

#include <string>
#include <vector>

#include <json.hpp>

#include "kws/scoring.h"

namespace kws {

constexpr int kReportSchema = 1;

nlohmann::json TwvReportToJson(const TwvReport &rep);
TwvReport TwvReportFromJson(const nlohmann::json &j);
nlohmann::json GroupReportsToJson(const std::vector<GroupReport> &groups);
nlohmann::json PairedTestToJson(const PairedTestResult &r);

// Per-keyword TWV values of `b` paired with `a` by keyword id (keywords
// scored in both reports, in id order).
void PairKeywordTwv(const TwvReport &a, const TwvReport &b, std::vector<double> *va,
                    std::vector<double> *vb, std::vector<std::string> *ids);

// Pretty-printed with a trailing newline; stable key order.
std::string DumpJson(const nlohmann::json &j);

}  // namespace kws

#endif  // KWS_REPORT_H_
