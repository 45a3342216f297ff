// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <map>

#include "support.hpp"
#include "winoattn/corpus.hpp"
#include "winoattn/error.hpp"

using namespace winoattn;
using namespace winoattn::corpus;

namespace {

ConvertResult convert_fixture(const std::string& name, Format f) {
  ParseOptions opts;
  opts.source_name = name;
  return convert(testing::fixture(name), f, opts, RepairConfig::defaults());
}

const WinogradExample* find(const ConvertResult& r, const std::string& id) {
  for (const auto& e : r.examples)
    if (e.id == id) return &e;
  return nullptr;
}

std::map<std::string, RejectCode> reject_codes(const ConvertResult& r) {
  std::map<std::string, RejectCode> m;
  for (const auto& x : r.rejects) m[x.record] = x.reason.code;
  return m;
}

RawExample raw(std::string sentence, std::string pronoun, std::vector<std::string> cands, std::size_t correct,
               std::string lang = "en") {
  RawExample r;
  r.id = "r";
  r.lang = std::move(lang);
  r.sentence = std::move(sentence);
  r.pronoun_text = std::move(pronoun);
  r.candidate_texts = std::move(cands);
  r.correct_index = correct;
  return r;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("generic tsv fixture: repairs, expansion and every reject code") {
    const auto r = convert_fixture("generic.tsv", Format::GenericTsv);
    CHECK(r.examples.size() == 6);
    const auto codes = reject_codes(r);
    REQUIRE(codes.size() == 4);
    CHECK(codes.at("t5") == RejectCode::CandidateNotSubstring);
    CHECK(codes.at("t6") == RejectCode::AmbiguousPronoun);
    CHECK(codes.at("t7") == RejectCode::PronounNotFound);
    CHECK(codes.at("t8") == RejectCode::MalformedRecord);

    // Three candidates become two binary problems sharing the correct answer.
    const auto* a = find(r, "t2#0");
    const auto* b = find(r, "t2#1");
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->candidates[0].text == "Anna");
    CHECK(a->candidates[1].text == "Maria");
    CHECK(b->candidates[1].text == "Joan");
    CHECK(a->label == 0);
    CHECK(b->label == 0);

    // Case-insensitive repair keeps the sentence's own casing.
    const auto* ci = find(r, "t3");
    REQUIRE(ci);
    CHECK(ci->candidates[0].text == "the city councilmen");
    CHECK(ci->candidates[0].start == 0);

    // Article-prefix repair: "the chair" resolves to "chair".
    const auto* pre = find(r, "t4");
    REQUIRE(pre);
    CHECK(pre->candidates[0].text == "chair");
    CHECK(pre->candidates[0].start == 16);
    CHECK(pre->candidates[1].text == "the piano");
  }

  TEST_CASE("stats report counts before and after filtering per language") {
    const auto r = convert_fixture("generic.tsv", Format::GenericTsv);
    REQUIRE(r.stats.rows.size() == 2);
    CHECK(r.stats.rows[0] == LangStats{"en", 8, 5, 62.5});
    CHECK(r.stats.rows[1] == LangStats{"fr", 1, 1, 100.0});
    CHECK(r.stats.total == LangStats{"Total", 9, 6, 66.67});
    CHECK(r.stats.to_markdown() ==
          "| Language | Before | After | Remaining, % |\n|---|---:|---:|---:|\n| en | 8 | 5 | 62.50 |\n"
          "| fr | 1 | 1 | 100.00 |\n| Total | 9 | 6 | 66.67 |\n");
    CHECK(r.stats.to_csv() == "language,before,after,remaining_percent\nen,8,5,62.50\nfr,1,1,100.00\nTotal,9,6,66.67\n");
  }

  TEST_CASE("dpr-style blocks") {
    const auto r = convert_fixture("dpr.txt", Format::DprStyle);
    REQUIRE(r.examples.size() == 2);
    CHECK(r.rejects.empty());
    CHECK(r.examples[0].id == "dpr-0");
    CHECK(r.examples[0].label == 1);
    CHECK(r.examples[0].candidates[1].text == "the flower");
    CHECK(r.examples[1].label == 0);
  }

  TEST_CASE("superglue records group into problems") {
    const auto r = convert_fixture("superglue.jsonl", Format::SuperglueJsonl);
    REQUIRE(r.examples.size() == 1);
    const auto& e = r.examples[0];
    CHECK(e.pronoun.text == "He");
    CHECK(e.pronoun.start == 73);
    CHECK(e.candidates[0].text == "Mark");
    CHECK(e.candidates[1].text == "Pete");
    CHECK(e.label == 0);
    REQUIRE(r.rejects.size() == 1);
    CHECK(r.rejects[0].reason.code == RejectCode::MalformedRecord);
  }

  TEST_CASE("xwino round trip is the identity") {
    const std::string text = testing::fixture("xwino.jsonl");
    const auto r = convert_fixture("xwino.jsonl", Format::XwinoJsonl);
    CHECK(r.rejects.empty());
    CHECK(serialize_xwino(r.examples) == text);
    const auto back = read_xwino(serialize_xwino(r.examples));
    CHECK(back == r.examples);
  }

  TEST_CASE("strict reader refuses bad offsets") {
    std::string text = testing::fixture("xwino.jsonl");
    const auto pos = text.find("\"start\":50");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 10, "\"start\":49");
    CHECK_THROWS_AS(read_xwino(text), FormatError);
  }

  TEST_CASE("invalid utf-8 is an error, not a reject") {
    CHECK_THROWS_AS(parse_dataset(std::string("{\"id\":\"\xff\"}\n"), Format::XwinoJsonl), FormatError);
  }

  TEST_CASE("tsv without header is refused") {
    CHECK_THROWS_AS(parse_dataset("x\ten\ts\tit\t\ta|b\t0\n", Format::GenericTsv), FormatError);
  }

  TEST_CASE("normalized candidates are ordered by offset with the label following") {
    auto r = raw("The suitcase was smaller than the trophy, so it broke.", "it", {"trophy", "suitcase"}, 0);
    auto n = normalize(r, RepairConfig::defaults());
    REQUIRE(std::holds_alternative<WinogradExample>(n));
    const auto& e = std::get<WinogradExample>(n);
    CHECK(e.candidates[0].text == "suitcase");
    CHECK(e.candidates[1].text == "trophy");
    CHECK(e.label == 1);
  }

  TEST_CASE("pronoun match respects word boundaries") {
    auto r = raw("It fit in the kit because it was small.", "it", {"kit", "It"}, 0);
    // "it" as a whole word occurs once in exact case; "fit" and "kit" do not count.
    auto n = normalize(r, RepairConfig::defaults());
    REQUIRE(std::holds_alternative<WinogradExample>(n));
    CHECK(std::get<WinogradExample>(n).pronoun.start == 26);
  }

  TEST_CASE("candidate overlapping the pronoun is not accepted") {
    auto r = raw("Bob saw him and Tom.", "him", {"him", "Tom"}, 0);
    auto n = normalize(r, RepairConfig::defaults());
    REQUIRE(std::holds_alternative<RejectReason>(n));
    CHECK(std::get<RejectReason>(n).code == RejectCode::CandidateNotSubstring);
  }

  TEST_CASE("whitespace-collapsed repair") {
    auto r = raw("The  big   dog bit the cat because it was angry.", "it", {"big dog", "cat"}, 0);
    auto n = normalize(r, RepairConfig::defaults());
    REQUIRE(std::holds_alternative<WinogradExample>(n));
    CHECK(std::get<WinogradExample>(n).candidates[0].text == "big   dog");
  }

  TEST_CASE("repair config from json overrides per-language prefixes") {
    const auto rc = RepairConfig::from_json(R"({"de": ["der ", "die ", "das "]})");
    CHECK(rc.for_lang("de").size() == 3);
    CHECK(rc.for_lang("xx").empty());
    CHECK_THROWS_AS(RepairConfig::from_json("[1,2]"), FormatError);
    auto r = raw("Der Hund jagte die Katze, weil er hungrig war.", "er", {"der Hund", "die Katze"}, 0, "de");
    r.sentence = "Hund jagte die Katze, weil er hungrig war.";
    auto n = normalize(r, rc);
    REQUIRE(std::holds_alternative<WinogradExample>(n));
    CHECK(std::get<WinogradExample>(n).candidates[0].text == "Hund");
  }

  TEST_CASE("multichoice expansion keeps order and suffixes ids") {
    auto r = raw("A B C D and it.", "it", {"A", "B", "C", "D"}, 2);
    r.id = "q";
    const auto xs = expand_multichoice(r);
    REQUIRE(xs.size() == 3);
    CHECK(xs[0].id == "q#0");
    CHECK(xs[0].candidate_texts == std::vector<std::string>{"A", "C"});
    CHECK(xs[0].correct_index == 1);
    CHECK(xs[1].candidate_texts == std::vector<std::string>{"B", "C"});
    CHECK(xs[2].candidate_texts == std::vector<std::string>{"C", "D"});
    CHECK(xs[2].correct_index == 0);
  }

  TEST_CASE("normalized output always satisfies the invariants") {
    // Property: random word sentences, random candidate/pronoun picks.
    Rng rng(3);
    const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
    int accepted = 0;
    for (int t = 0; t < 300; ++t) {
      std::vector<std::string> s;
      for (int i = 0; i < 8; ++i) s.push_back(words[rng.uniform_index(words.size())]);
      std::string sentence;
      for (const auto& w : s) sentence += (sentence.empty() ? "" : " ") + w;
      auto r = raw(sentence, "it", {s[rng.uniform_index(8)], s[rng.uniform_index(8)]}, rng.uniform_index(2));
      r.sentence += " and it ended.";
      auto n = normalize(r, RepairConfig::defaults());
      if (auto* e = std::get_if<WinogradExample>(&n)) {
        CHECK_NOTHROW(check_invariants(*e));
        ++accepted;
        const auto back = read_xwino(serialize_xwino(std::vector<WinogradExample>{*e}));
        CHECK(back.front() == *e);
      }
    }
    CHECK(accepted > 100);
  }
}
