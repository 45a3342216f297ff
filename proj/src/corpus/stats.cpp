// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "winoattn/corpus.hpp"

namespace winoattn::corpus {

namespace {

double remaining(std::size_t before, std::size_t after) {
  if (before == 0) return 0.0;
  return std::round(10000.0 * static_cast<double>(after) / static_cast<double>(before)) / 100.0;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

StatsReport corpus_stats(std::span<const RawExample> before, std::span<const WinogradExample> after) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& r : before) ++counts[r.lang].first;
  for (const auto& e : after) ++counts[e.lang].second;

  StatsReport rep;
  for (const auto& [lang, c] : counts) {
    rep.rows.push_back({lang, c.first, c.second, remaining(c.first, c.second)});
    rep.total.before += c.first;
    rep.total.after += c.second;
  }
  rep.total.remaining_percent = remaining(rep.total.before, rep.total.after);
  return rep;
}

std::string StatsReport::to_markdown() const {
  std::ostringstream os;
  os << "| Language | Before | After | Remaining, % |\n";
  os << "|---|---:|---:|---:|\n";
  for (const auto& r : rows)
    os << "| " << r.lang << " | " << r.before << " | " << r.after << " | " << pct(r.remaining_percent) << " |\n";
  os << "| " << total.lang << " | " << total.before << " | " << total.after << " | "
     << pct(total.remaining_percent) << " |\n";
  return os.str();
}

std::string StatsReport::to_csv() const {
  std::ostringstream os;
  os << "language,before,after,remaining_percent\n";
  for (const auto& r : rows) os << r.lang << ',' << r.before << ',' << r.after << ',' << pct(r.remaining_percent) << '\n';
  os << total.lang << ',' << total.before << ',' << total.after << ',' << pct(total.remaining_percent) << '\n';
  return os.str();
}

std::string StatsReport::to_json() const {
  auto row = [](const LangStats& r) {
    nlohmann::ordered_json j;
    j["lang"] = r.lang;
    j["before"] = r.before;
    j["after"] = r.after;
    j["remaining_percent"] = r.remaining_percent;
    return j;
  };
  nlohmann::ordered_json j;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) j["rows"].push_back(row(r));
  j["total"] = row(total);
  return j.dump(2) + "\n";
}

}  // namespace winoattn::corpus
