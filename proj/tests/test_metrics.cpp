#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "genst/errors.hpp"
#include "genst/metrics.hpp"
#include "genst/rng.hpp"
#include "genst/text.hpp"

using namespace genst;

namespace {

// Independent brute-force BLEU oracle. Works on joined n-gram strings and
// recomputes everything from scratch; shares no code with corpus_bleu.
double bleu_oracle(const std::vector<std::vector<std::string>>& hyps,
                   const std::vector<std::vector<std::string>>& refs) {
  double product = 1.0;
  for (int n = 1; n <= 4; ++n) {
    long matched = 0, total = 0;
    for (size_t s = 0; s < hyps.size(); ++s) {
      std::map<std::string, long> hyp_grams, ref_grams;
      for (size_t i = 0; i + n <= hyps[s].size(); ++i) {
        std::string g;
        for (int j = 0; j < n; ++j) g += hyps[s][i + j] + "\x1f";
        ++hyp_grams[g];
      }
      for (size_t i = 0; i + n <= refs[s].size(); ++i) {
        std::string g;
        for (int j = 0; j < n; ++j) g += refs[s][i + j] + "\x1f";
        ++ref_grams[g];
      }
      for (const auto& [g, c] : hyp_grams) {
        total += c;
        const auto it = ref_grams.find(g);
        if (it != ref_grams.end()) matched += std::min(c, it->second);
      }
    }
    if (total == 0 || matched == 0) return 0.0;
    product *= static_cast<double>(matched) / static_cast<double>(total);
  }
  long hyp_len = 0, ref_len = 0;
  for (const auto& h : hyps) hyp_len += static_cast<long>(h.size());
  for (const auto& r : refs) ref_len += static_cast<long>(r.size());
  double bp = 1.0;
  if (hyp_len < ref_len)
    bp = std::exp(1.0 - static_cast<double>(ref_len) / hyp_len);
  return 100.0 * bp * std::pow(product, 0.25);
}

BenchmarkEntry make_entry(const std::string& id, GenderTag gender,
                          const std::string& ref_c, const std::string& ref_w,
                          const std::vector<std::pair<std::string, std::string>>&
                              term_strings,
                          const std::string& category = "1") {
  BenchmarkEntry e;
  e.id = id;
  e.talk_id = "talk_" + id;
  e.src = "src of " + id;
  e.ref_correct = ref_c;
  e.ref_wrong = ref_w;
  e.gender = gender;
  e.category = category;
  for (const auto& [c, w] : term_strings)
    e.terms.push_back({tokenize(c), tokenize(w)});
  return e;
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Sono stata eletta...") ==
        std::vector<std::string>{"sono", "stata", "eletta", ".", ".", "."});
  CHECK(tokenize("Quand j'étais petite") ==
        std::vector<std::string>{"quand", "j", "'", "étais", "petite"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("  \t \n ").empty());
  CHECK(tokenize("UPPER Case") == std::vector<std::string>{"upper", "case"});
  CHECK(tokenize("a,b") == std::vector<std::string>{"a", ",", "b"});
}

TEST_CASE("match_terms") {
  const TermPair eletta{tokenize("eletta"), tokenize("eletto")};
  SUBCASE("wrong form found") {
    const auto out = match_terms(tokenize("fui eletto"), {eletta});
    REQUIRE(out.size() == 1);
    CHECK(out[0] == TermOutcome::WrongForm);
  }
  SUBCASE("neither form found") {
    const auto out = match_terms(tokenize("fui selezionata"), {eletta});
    REQUIRE(out.size() == 1);
    CHECK(out[0] == TermOutcome::NotCovered);
  }
  SUBCASE("reference matches itself completely") {
    const std::string ref = "sono stata eletta presidente";
    const std::vector<TermPair> terms = {
        {tokenize("stata"), tokenize("stato")},
        {tokenize("eletta"), tokenize("eletto")}};
    const auto out = match_terms(tokenize(ref), terms);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == TermOutcome::CorrectForm);
    CHECK(out[1] == TermOutcome::CorrectForm);
  }
  SUBCASE("correct form takes precedence over wrong form") {
    const auto out = match_terms(tokenize("eletto eletta"), {eletta});
    CHECK(out[0] == TermOutcome::CorrectForm);
  }
  SUBCASE("repeated term needs repeated occurrences") {
    const std::vector<TermPair> twice = {eletta, eletta};
    auto out = match_terms(tokenize("fui eletta"), twice);
    CHECK(out[0] == TermOutcome::CorrectForm);
    CHECK(out[1] == TermOutcome::NotCovered);
    out = match_terms(tokenize("eletta e eletta"), twice);
    CHECK(out[0] == TermOutcome::CorrectForm);
    CHECK(out[1] == TermOutcome::CorrectForm);
    out = match_terms(tokenize("eletta e eletto"), twice);
    CHECK(out[0] == TermOutcome::CorrectForm);
    CHECK(out[1] == TermOutcome::WrongForm);
  }
  SUBCASE("multi-token span must stay contiguous") {
    const TermPair span{tokenize("la classica studentessa"),
                        tokenize("il classico studente")};
    CHECK(match_terms(tokenize("ero la classica studentessa"), {span})[0] ==
          TermOutcome::CorrectForm);
    CHECK(match_terms(tokenize("la brava classica studentessa"), {span})[0] ==
          TermOutcome::NotCovered);
  }
  SUBCASE("empty hypothesis covers nothing") {
    CHECK(match_terms({}, {eletta})[0] == TermOutcome::NotCovered);
  }
}

TEST_CASE("corpus_bleu") {
  SUBCASE("identity is exactly 100") {
    const std::vector<std::vector<std::string>> segs = {
        tokenize("the cat sat on the mat"), tokenize("a longer second segment here")};
    CHECK(corpus_bleu(segs, segs) == 100.0);
  }
  SUBCASE("disjoint vocabulary scores zero") {
    CHECK(corpus_bleu({{"a", "b", "c", "d"}}, {{"e", "f", "g", "h"}}) == 0.0);
  }
  SUBCASE("short hypothesis against its reference matches the oracle") {
    const std::vector<std::vector<std::string>> hyp = {{"the", "cat", "sat"}};
    const std::vector<std::vector<std::string>> ref = {
        {"the", "cat", "sat", "down"}};
    CHECK(corpus_bleu(hyp, ref) ==
          doctest::Approx(bleu_oracle(hyp, ref)).epsilon(1e-9));
  }
  SUBCASE("clipping: repeated hypothesis tokens match the oracle") {
    const std::vector<std::vector<std::string>> hyp = {
        {"the", "the", "the", "the", "cat", "cat"}};
    const std::vector<std::vector<std::string>> ref = {
        {"the", "cat", "is", "on", "the", "mat"}};
    const double got = corpus_bleu(hyp, ref);
    CHECK(got == doctest::Approx(bleu_oracle(hyp, ref)).epsilon(1e-9));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(corpus_bleu({}, {}), ValidationError);
    CHECK_THROWS_AS(corpus_bleu({{"a"}}, {}), ValidationError);
  }
  SUBCASE("randomized agreement with the brute-force oracle") {
    Xoshiro256 rng(4242);
    const std::vector<std::string> words = {"the", "cat", "sat", "on",
                                            "mat",  "a",  "dog", "ran"};
    for (int iter = 0; iter < 200; ++iter) {
      const int n_segs = 1 + static_cast<int>(rng.below(4));
      std::vector<std::vector<std::string>> hyps, refs;
      for (int s = 0; s < n_segs; ++s) {
        std::vector<std::string> h, r;
        const int hl = 1 + static_cast<int>(rng.below(10));
        const int rl = 1 + static_cast<int>(rng.below(10));
        for (int i = 0; i < hl; ++i) h.push_back(words[rng.below(words.size())]);
        for (int i = 0; i < rl; ++i) r.push_back(words[rng.below(words.size())]);
        hyps.push_back(std::move(h));
        refs.push_back(std::move(r));
      }
      const double got = corpus_bleu(hyps, refs);
      const double want = bleu_oracle(hyps, refs);
      CHECK(std::fabs(got - want) < 1e-9);
    }
  }
}

TEST_CASE("evaluate") {
  // 3 entries, one single-token term each.
  const std::vector<BenchmarkEntry> benchmark = {
      make_entry("e1", GenderTag::F, "sono stata qui ieri", "sono stato qui ieri",
                 {{"stata", "stato"}}),
      make_entry("e2", GenderTag::F, "sono andata via presto",
                 "sono andato via presto", {{"andata", "andato"}}),
      make_entry("e3", GenderTag::M, "sono tornato tardi oggi",
                 "sono tornata tardi oggi", {{"tornato", "tornata"}}),
  };

  SUBCASE("all-correct hypotheses") {
    HypothesisSet hyps;
    for (const auto& e : benchmark) hyps[e.id] = e.ref_correct;
    const EvalReport r = evaluate(benchmark, hyps, std::nullopt);
    CHECK(*r.overall.coverage_pct() == 100.0);
    CHECK(*r.overall.accuracy_pct() == 100.0);
    CHECK(r.bleu_correct == 100.0);
  }
  SUBCASE("all-wrong hypotheses") {
    HypothesisSet hyps;
    for (const auto& e : benchmark) hyps[e.id] = e.ref_wrong;
    const EvalReport r = evaluate(benchmark, hyps, std::nullopt);
    CHECK(*r.overall.coverage_pct() == 100.0);
    CHECK(*r.overall.accuracy_pct() == 0.0);
    CHECK(r.bleu_wrong == 100.0);
  }
  SUBCASE("2 of 3 terms covered, 1 correct: 66.67 / 50.00") {
    HypothesisSet hyps;
    hyps["e1"] = "sono stata qui";      // correct form
    hyps["e2"] = "sono andato via";     // wrong form
    hyps["e3"] = "sono rimasto tardi";  // term absent
    const EvalReport r = evaluate(benchmark, hyps, std::nullopt);
    CHECK(r.overall.terms_total == 3);
    CHECK(r.overall.covered == 2);
    CHECK(r.overall.covered_correct == 1);
    CHECK(r.overall.covered_wrong == 1);
    CHECK(*r.overall.coverage_pct() ==
          doctest::Approx(100.0 * 2 / 3).epsilon(1e-12));
    CHECK(*r.overall.accuracy_pct() == 50.0);
    // Rendered with two decimals.
    const std::string rendered = render_report(r);
    CHECK(rendered.find("\"coverage_pct\": 66.67") != std::string::npos);
    CHECK(rendered.find("\"accuracy_pct\": 50.0") != std::string::npos);
  }
  SUBCASE("per-gender counts sum to overall") {
    HypothesisSet hyps;
    for (const auto& e : benchmark) hyps[e.id] = e.ref_correct;
    const EvalReport r = evaluate(benchmark, hyps, std::nullopt);
    EvalCounts sum;
    for (const auto& [g, c] : r.per_gender) sum += c;
    CHECK(sum == r.overall);
    CHECK(r.per_gender.at(GenderTag::F).terms_total == 2);
    CHECK(r.per_gender.at(GenderTag::M).terms_total == 1);
  }
  SUBCASE("category filter applies before anything else") {
    auto filtered = benchmark;
    filtered[2].category = "2";
    HypothesisSet hyps;
    hyps["e1"] = "sono stata qui";
    hyps["e2"] = "sono andata via";
    // e3 intentionally missing: it must not be required once filtered out.
    const EvalReport r = evaluate(filtered, hyps, std::string("1"));
    CHECK(r.overall.terms_total == 2);
    CHECK_THROWS_AS(evaluate(filtered, hyps, std::string("3")),
                    ValidationError);
  }
  SUBCASE("missing hypotheses are listed by id") {
    HypothesisSet hyps;
    hyps["e2"] = "sono andata via";
    CHECK_THROWS_WITH_AS(evaluate(benchmark, hyps, std::nullopt),
                         doctest::Contains("e1"), ValidationError);
    CHECK_THROWS_WITH_AS(evaluate(benchmark, hyps, std::nullopt),
                         doctest::Contains("e3"), ValidationError);
  }
  SUBCASE("permutation invariance") {
    HypothesisSet hyps;
    hyps["e1"] = "sono stata qui";
    hyps["e2"] = "sono andato via";
    hyps["e3"] = "sono tornato tardi";
    auto shuffled = benchmark;
    std::reverse(shuffled.begin(), shuffled.end());
    const std::string a = render_report(evaluate(benchmark, hyps, std::nullopt));
    const std::string b = render_report(evaluate(shuffled, hyps, std::nullopt));
    CHECK(a == b);
  }
  SUBCASE("hypothesis casing does not matter") {
    HypothesisSet lower, upper;
    for (const auto& e : benchmark) {
      lower[e.id] = e.ref_correct;
      std::string up = e.ref_correct;
      for (char& c : up) c = static_cast<char>(std::toupper(c));
      upper[e.id] = up;
    }
    CHECK(render_report(evaluate(benchmark, lower, std::nullopt)) ==
          render_report(evaluate(benchmark, upper, std::nullopt)));
  }
  SUBCASE("per-segment outcomes preserved on request") {
    HypothesisSet hyps;
    hyps["e1"] = "sono stata qui";
    hyps["e2"] = "sono andato via";
    hyps["e3"] = "niente";
    const EvalReport r = evaluate(benchmark, hyps, std::nullopt, true);
    REQUIRE(r.per_segment.has_value());
    REQUIRE(r.per_segment->size() == 3);
    CHECK((*r.per_segment)[0].outcome == TermOutcome::CorrectForm);
    CHECK((*r.per_segment)[1].outcome == TermOutcome::WrongForm);
    CHECK((*r.per_segment)[2].outcome == TermOutcome::NotCovered);
  }
}

TEST_CASE("swap_expectation") {
  const std::vector<BenchmarkEntry> benchmark = {
      make_entry("e1", GenderTag::F, "sono stata", "sono stato",
                 {{"stata", "stato"}})};
  SUBCASE("references and term sides exchange; gender stays") {
    const auto swapped = swap_expectation(benchmark);
    CHECK(swapped[0].ref_correct == "sono stato");
    CHECK(swapped[0].ref_wrong == "sono stata");
    CHECK(swapped[0].terms[0].correct == tokenize("stato"));
    CHECK(swapped[0].terms[0].wrong == tokenize("stata"));
    CHECK(swapped[0].gender == GenderTag::F);
  }
  SUBCASE("involution") {
    CHECK(swap_expectation(swap_expectation(benchmark)) == benchmark);
  }
  SUBCASE("correct hypotheses become 0% accurate after the swap") {
    HypothesisSet hyps;
    hyps["e1"] = "sono stata";
    const EvalReport r =
        evaluate(swap_expectation(benchmark), hyps, std::nullopt);
    CHECK(*r.overall.coverage_pct() == 100.0);
    CHECK(*r.overall.accuracy_pct() == 0.0);
  }
  SUBCASE("accuracy complement on randomized entries") {
    Xoshiro256 rng(777);
    const std::vector<std::string> fillers = {"poi", "qui", "ieri", "sempre"};
    for (int iter = 0; iter < 50; ++iter) {
      std::vector<BenchmarkEntry> bench;
      HypothesisSet hyps;
      const int n = 2 + static_cast<int>(rng.below(6));
      for (int i = 0; i < n; ++i) {
        const std::string id = "r" + std::to_string(i);
        const std::string stem = "w" + std::to_string(rng.below(4));
        const std::string correct = stem + "a", wrong = stem + "o";
        bench.push_back(make_entry(id, rng.below(2) ? GenderTag::F : GenderTag::M,
                                   "sono " + correct, "sono " + wrong,
                                   {{correct, wrong}}));
        // Hypotheses contain exactly one of the two forms so both coverage
        // sets coincide and each covered outcome flips under the swap.
        const std::string& form = rng.below(2) ? correct : wrong;
        hyps[id] = fillers[rng.below(fillers.size())] + " " + form;
      }
      const auto a = evaluate(bench, hyps, std::nullopt);
      const auto b = evaluate(swap_expectation(bench), hyps, std::nullopt);
      CHECK(a.overall.covered == b.overall.covered);
      CHECK(*a.overall.accuracy_pct() + *b.overall.accuracy_pct() ==
            doctest::Approx(100.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("render_report") {
  SUBCASE("null accuracy when nothing is covered") {
    EvalReport r;
    r.overall.terms_total = 4;
    const std::string s = render_report(r);
    CHECK(s.find("\"accuracy_pct\": null") != std::string::npos);
  }
  SUBCASE("two-decimal rendering of a large benchmark row") {
    // Counts chosen so coverage is 58.02% and accuracy 87.02%.
    EvalReport r;
    r.overall.terms_total = 10000;
    r.overall.covered = 5802;
    r.overall.covered_correct = 5049;
    r.overall.covered_wrong = 753;
    const std::string s = render_report(r);
    CHECK(s.find("\"coverage_pct\": 58.02") != std::string::npos);
    CHECK(s.find("\"accuracy_pct\": 87.02") != std::string::npos);
  }
  SUBCASE("byte-identical on repeated rendering") {
    EvalReport r;
    r.bleu_correct = 24.127;
    r.overall.terms_total = 3;
    r.overall.covered = 2;
    r.overall.covered_correct = 1;
    r.overall.covered_wrong = 1;
    r.per_gender[GenderTag::F] = r.overall;
    CHECK(render_report(r) == render_report(r));
    CHECK(render_report(r).find("\"bleu_correct\": 24.13") !=
          std::string::npos);
  }
}
