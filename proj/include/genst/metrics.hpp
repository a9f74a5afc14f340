#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genst/corpus.hpp"
#include "genst/text.hpp"

namespace genst {

// What happened to one annotated term pair in a hypothesis.
enum class TermOutcome { CorrectForm, WrongForm, NotCovered };

std::string to_string(TermOutcome o);

struct EvalCounts {
  long terms_total = 0;
  long covered = 0;
  long covered_correct = 0;
  long covered_wrong = 0;

  // 100*covered/terms_total; nullopt when terms_total == 0.
  std::optional<double> coverage_pct() const;
  // 100*covered_correct/covered; nullopt when covered == 0.
  std::optional<double> accuracy_pct() const;

  EvalCounts& operator+=(const EvalCounts& other);
  bool operator==(const EvalCounts&) const = default;
};

struct SegmentOutcome {
  std::string id;
  TermPair term;
  TermOutcome outcome;
};

// Coverage/accuracy/BLEU aggregates, overall and per gender.
struct EvalReport {
  double bleu_correct = 0.0;
  double bleu_wrong = 0.0;
  EvalCounts overall;
  std::map<GenderTag, EvalCounts> per_gender;
  std::optional<std::vector<SegmentOutcome>> per_segment;
};

// Per-pair matching against one hypothesis. The correct form is checked
// before the wrong one; matched spans are consumed left to right, so a
// repeated annotated term requires repeated hypothesis occurrences.
std::vector<TermOutcome> match_terms(const std::vector<std::string>& hyp_tokens,
                                     const std::vector<TermPair>& terms);

// Corpus-level BLEU in [0,100]: geometric mean of clipped n-gram precisions
// for n=1..4 times the brevity penalty; 0 if any precision is 0; unsmoothed.
double corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                   const std::vector<std::vector<std::string>>& references);

// Scores a hypothesis set against a benchmark. `category_filter`, when set,
// keeps only entries with that CATEGORY value before anything else.
EvalReport evaluate(const std::vector<BenchmarkEntry>& benchmark,
                    const HypothesisSet& hyps,
                    const std::optional<std::string>& category_filter,
                    bool keep_per_segment = false);

// Counterfactual mode: exchanges REF-C/REF-W and each pair's correct/wrong
// form while keeping the speaker-gender label of each entry. Involution.
std::vector<BenchmarkEntry> swap_expectation(
    const std::vector<BenchmarkEntry>& benchmark);

// Deterministic JSON rendering; percentages with 2 decimals; null accuracy
// when no term is covered.
std::string render_report(const EvalReport& report);

}  // namespace genst
