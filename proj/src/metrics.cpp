#include "genst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "genst/errors.hpp"

namespace genst {

std::string to_string(TermOutcome o) {
  switch (o) {
    case TermOutcome::CorrectForm: return "correct";
    case TermOutcome::WrongForm: return "wrong";
    case TermOutcome::NotCovered: return "not_covered";
  }
  return "not_covered";
}

std::optional<double> EvalCounts::coverage_pct() const {
  if (terms_total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(covered) /
         static_cast<double>(terms_total);
}

std::optional<double> EvalCounts::accuracy_pct() const {
  if (covered == 0) return std::nullopt;
  return 100.0 * static_cast<double>(covered_correct) /
         static_cast<double>(covered);
}

EvalCounts& EvalCounts::operator+=(const EvalCounts& other) {
  terms_total += other.terms_total;
  covered += other.covered;
  covered_correct += other.covered_correct;
  covered_wrong += other.covered_wrong;
  return *this;
}

// ---------------------------------------------------------------------------
// Term matching
// ---------------------------------------------------------------------------

namespace {

// Leftmost span of `needle` in `hyp` whose positions are all unconsumed;
// -1 if none. Spans stay contiguous in the original token sequence.
long find_free_span(const std::vector<std::string>& hyp,
                    const std::vector<bool>& consumed,
                    const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hyp.size()) return -1;
  for (size_t i = 0; i + needle.size() <= hyp.size(); ++i) {
    bool ok = true;
    for (size_t j = 0; j < needle.size(); ++j) {
      if (consumed[i + j] || hyp[i + j] != needle[j]) {
        ok = false;
        break;
      }
    }
    if (ok) return static_cast<long>(i);
  }
  return -1;
}

void consume(std::vector<bool>& consumed, long start, size_t len) {
  for (size_t j = 0; j < len; ++j) consumed[static_cast<size_t>(start) + j] = true;
}

}  // namespace

std::vector<TermOutcome> match_terms(const std::vector<std::string>& hyp_tokens,
                                     const std::vector<TermPair>& terms) {
  std::vector<bool> consumed(hyp_tokens.size(), false);
  std::vector<TermOutcome> outcomes;
  outcomes.reserve(terms.size());
  for (const TermPair& pair : terms) {
    long pos = find_free_span(hyp_tokens, consumed, pair.correct);
    if (pos >= 0) {
      consume(consumed, pos, pair.correct.size());
      outcomes.push_back(TermOutcome::CorrectForm);
      continue;
    }
    pos = find_free_span(hyp_tokens, consumed, pair.wrong);
    if (pos >= 0) {
      consume(consumed, pos, pair.wrong.size());
      outcomes.push_back(TermOutcome::WrongForm);
      continue;
    }
    outcomes.push_back(TermOutcome::NotCovered);
  }
  return outcomes;
}

// ---------------------------------------------------------------------------
// BLEU
// ---------------------------------------------------------------------------

double corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                   const std::vector<std::vector<std::string>>& references) {
  if (hypotheses.empty()) throw ValidationError("corpus_bleu: empty input");
  if (hypotheses.size() != references.size())
    throw ValidationError("corpus_bleu: hypothesis/reference length mismatch");

  constexpr int kMaxOrder = 4;
  double matched[kMaxOrder] = {0, 0, 0, 0};
  double total[kMaxOrder] = {0, 0, 0, 0};
  long hyp_len = 0;
  long ref_len = 0;

  auto ngram_counts = [](const std::vector<std::string>& tokens, int n) {
    std::map<std::vector<std::string>, long> counts;
    if (static_cast<int>(tokens.size()) >= n) {
      for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::vector<std::string> gram(tokens.begin() + i,
                                      tokens.begin() + i + n);
        ++counts[std::move(gram)];
      }
    }
    return counts;
  };

  for (size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& ref = references[s];
    hyp_len += static_cast<long>(hyp.size());
    ref_len += static_cast<long>(ref.size());
    for (int n = 1; n <= kMaxOrder; ++n) {
      const auto hyp_counts = ngram_counts(hyp, n);
      const auto ref_counts = ngram_counts(ref, n);
      for (const auto& [gram, count] : hyp_counts) {
        total[n - 1] += static_cast<double>(count);
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end())
          matched[n - 1] += static_cast<double>(std::min(count, it->second));
      }
    }
  }

  double log_precision_sum = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (total[n] <= 0.0 || matched[n] <= 0.0) return 0.0;
    log_precision_sum += std::log(matched[n] / total[n]);
  }
  double brevity = 1.0;
  if (hyp_len < ref_len) {
    if (hyp_len == 0) return 0.0;
    brevity = std::exp(1.0 - static_cast<double>(ref_len) /
                                 static_cast<double>(hyp_len));
  }
  return 100.0 * brevity * std::exp(log_precision_sum / kMaxOrder);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

EvalReport evaluate(const std::vector<BenchmarkEntry>& benchmark,
                    const HypothesisSet& hyps,
                    const std::optional<std::string>& category_filter,
                    bool keep_per_segment) {
  std::vector<const BenchmarkEntry*> selected;
  for (const auto& e : benchmark)
    if (!category_filter || e.category == *category_filter)
      selected.push_back(&e);
  if (selected.empty())
    throw ValidationError("evaluate: no benchmark entries selected");

  std::string missing;
  for (const auto* e : selected) {
    if (!hyps.count(e->id)) {
      if (!missing.empty()) missing += ", ";
      missing += e->id;
    }
  }
  if (!missing.empty())
    throw ValidationError("evaluate: missing hypotheses for ids: " + missing);

  EvalReport report;
  report.per_gender[GenderTag::F] = EvalCounts{};
  report.per_gender[GenderTag::M] = EvalCounts{};
  if (keep_per_segment) report.per_segment.emplace();

  std::vector<std::vector<std::string>> hyp_tokens;
  std::vector<std::vector<std::string>> ref_c_tokens;
  std::vector<std::vector<std::string>> ref_w_tokens;
  // Entries are scored by id order so aggregation never depends on input
  // permutation.
  std::vector<const BenchmarkEntry*> ordered = selected;
  std::sort(ordered.begin(), ordered.end(),
            [](const BenchmarkEntry* a, const BenchmarkEntry* b) {
              return a->id < b->id;
            });

  for (const auto* e : ordered) {
    const auto tokens = tokenize(hyps.at(e->id));
    hyp_tokens.push_back(tokens);
    ref_c_tokens.push_back(tokenize(e->ref_correct));
    ref_w_tokens.push_back(tokenize(e->ref_wrong));

    const auto outcomes = match_terms(tokens, e->terms);
    EvalCounts& counts = report.per_gender[e->gender];
    for (size_t i = 0; i < outcomes.size(); ++i) {
      ++counts.terms_total;
      switch (outcomes[i]) {
        case TermOutcome::CorrectForm:
          ++counts.covered;
          ++counts.covered_correct;
          break;
        case TermOutcome::WrongForm:
          ++counts.covered;
          ++counts.covered_wrong;
          break;
        case TermOutcome::NotCovered:
          break;
      }
      if (report.per_segment)
        report.per_segment->push_back({e->id, e->terms[i], outcomes[i]});
    }
  }
  for (const auto& [gender, counts] : report.per_gender)
    report.overall += counts;

  report.bleu_correct = corpus_bleu(hyp_tokens, ref_c_tokens);
  report.bleu_wrong = corpus_bleu(hyp_tokens, ref_w_tokens);
  return report;
}

std::vector<BenchmarkEntry> swap_expectation(
    const std::vector<BenchmarkEntry>& benchmark) {
  std::vector<BenchmarkEntry> swapped = benchmark;
  for (auto& e : swapped) {
    std::swap(e.ref_correct, e.ref_wrong);
    for (auto& t : e.terms) std::swap(t.correct, t.wrong);
    // e.gender stays: per-gender rows keep reporting by speaker gender.
  }
  return swapped;
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

nlohmann::ordered_json counts_json(const EvalCounts& c) {
  nlohmann::ordered_json j;
  j["terms_total"] = c.terms_total;
  j["covered"] = c.covered;
  j["covered_correct"] = c.covered_correct;
  j["covered_wrong"] = c.covered_wrong;
  const auto cov = c.coverage_pct();
  j["coverage_pct"] = cov ? nlohmann::ordered_json(round2(*cov))
                          : nlohmann::ordered_json(nullptr);
  const auto acc = c.accuracy_pct();
  j["accuracy_pct"] = acc ? nlohmann::ordered_json(round2(*acc))
                          : nlohmann::ordered_json(nullptr);
  return j;
}

}  // namespace

std::string render_report(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["bleu_correct"] = round2(report.bleu_correct);
  j["bleu_wrong"] = round2(report.bleu_wrong);
  j["overall"] = counts_json(report.overall);
  nlohmann::ordered_json per_gender;
  for (const GenderTag g : {GenderTag::F, GenderTag::M}) {
    const auto it = report.per_gender.find(g);
    per_gender[to_string(g)] =
        counts_json(it != report.per_gender.end() ? it->second : EvalCounts{});
  }
  j["per_gender"] = per_gender;
  if (report.per_segment) {
    nlohmann::ordered_json segs = nlohmann::ordered_json::array();
    for (const auto& s : *report.per_segment) {
      nlohmann::ordered_json seg;
      seg["id"] = s.id;
      std::string correct, wrong;
      for (size_t i = 0; i < s.term.correct.size(); ++i)
        correct += (i ? " " : "") + s.term.correct[i];
      for (size_t i = 0; i < s.term.wrong.size(); ++i)
        wrong += (i ? " " : "") + s.term.wrong[i];
      seg["term_correct"] = correct;
      seg["term_wrong"] = wrong;
      seg["outcome"] = to_string(s.outcome);
      segs.push_back(std::move(seg));
    }
    j["per_segment"] = segs;
  }
  return j.dump(2) + "\n";
}

}  // namespace genst
