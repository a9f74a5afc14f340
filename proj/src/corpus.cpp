#include "genst/corpus.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "genst/errors.hpp"
#include "genst/text.hpp"
#include "genst/tsv.hpp"

namespace genst {

std::string to_string(GenderTag g) { return g == GenderTag::F ? "F" : "M"; }

std::string to_string(PronounLabel p) {
  switch (p) {
    case PronounLabel::She: return "She";
    case PronounLabel::He: return "He";
    case PronounLabel::They: return "They";
    case PronounLabel::Mixed: return "Mixed";
    case PronounLabel::Unknown: return "Unknown";
  }
  return "Unknown";
}

GenderTag parse_gender(const std::string& s) {
  if (s == "F") return GenderTag::F;
  if (s == "M") return GenderTag::M;
  throw ParseError("unknown gender label `" + s + "`");
}

PronounLabel parse_pronoun(const std::string& s) {
  if (s == "She") return PronounLabel::She;
  if (s == "He") return PronounLabel::He;
  if (s == "They") return PronounLabel::They;
  if (s == "Mixed") return PronounLabel::Mixed;
  if (s == "Unknown") return PronounLabel::Unknown;
  throw ParseError("unknown pronoun label `" + s + "`");
}

std::optional<GenderTag> gender_of(PronounLabel p) {
  if (p == PronounLabel::She) return GenderTag::F;
  if (p == PronounLabel::He) return GenderTag::M;
  return std::nullopt;
}

GenderTag opposite(GenderTag g) {
  return g == GenderTag::F ? GenderTag::M : GenderTag::F;
}

// ---------------------------------------------------------------------------
// speakers.tsv
// ---------------------------------------------------------------------------

static const std::vector<std::string> kSpeakersHeader = {"TALK-ID", "NAME",
                                                         "PRONOUN"};

std::vector<SpeakerRecord> parse_speakers(std::istream& in) {
  std::vector<SpeakerRecord> records;
  std::unordered_set<std::string> seen;
  for (const TsvRow& row : read_tsv(in, kSpeakersHeader)) {
    SpeakerRecord rec;
    rec.talk_id = row.fields[0];
    rec.name = row.fields[1];
    if (rec.talk_id.empty())
      throw ValidationError("empty talk_id at line " +
                            std::to_string(row.line_no));
    try {
      rec.pronoun = parse_pronoun(row.fields[2]);
    } catch (const ParseError&) {
      throw ParseError("unknown pronoun label at line " +
                       std::to_string(row.line_no) + ": `" + row.fields[2] +
                       "`");
    }
    if (!seen.insert(rec.talk_id).second)
      throw ValidationError("duplicate talk_id `" + rec.talk_id +
                            "` at line " + std::to_string(row.line_no));
    records.push_back(std::move(rec));
  }
  return records;
}

void serialize_speakers(std::ostream& out,
                        const std::vector<SpeakerRecord>& records) {
  write_tsv_line(out, kSpeakersHeader);
  for (const auto& rec : records)
    write_tsv_line(out, {rec.talk_id, rec.name, to_string(rec.pronoun)});
}

// ---------------------------------------------------------------------------
// benchmark.tsv
// ---------------------------------------------------------------------------

static const std::vector<std::string> kBenchmarkHeader = {
    "ID", "TALK-ID", "SRC", "REF-C", "REF-W", "GENDER", "CATEGORY", "TERMS"};

static std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  size_t start = 0;
  for (;;) {
    const size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

static std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

static std::vector<TermPair> parse_terms(const std::string& cell,
                                         const std::string& id) {
  if (cell.empty())
    throw ValidationError("entry `" + id + "`: empty TERMS field");
  std::vector<TermPair> terms;
  for (const std::string& part : split_on(cell, ';')) {
    const std::vector<std::string> sides = split_on(part, ':');
    if (sides.size() != 2)
      throw ValidationError("entry `" + id + "`: malformed term `" + part +
                            "` (expected correct:wrong)");
    TermPair pair;
    pair.correct = tokenize(sides[0]);
    pair.wrong = tokenize(sides[1]);
    if (pair.correct.empty() || pair.wrong.empty())
      throw ValidationError("entry `" + id + "`: empty term side in `" + part +
                            "`");
    if (pair.correct == pair.wrong)
      throw ValidationError("entry `" + id + "`: correct and wrong forms are "
                            "identical in `" + part + "`");
    terms.push_back(std::move(pair));
  }
  return terms;
}

std::vector<BenchmarkEntry> parse_benchmark(std::istream& in) {
  std::vector<BenchmarkEntry> entries;
  std::unordered_set<std::string> seen;
  for (const TsvRow& row : read_tsv(in, kBenchmarkHeader)) {
    BenchmarkEntry e;
    e.id = row.fields[0];
    e.talk_id = row.fields[1];
    e.src = row.fields[2];
    e.ref_correct = row.fields[3];
    e.ref_wrong = row.fields[4];
    e.gender = parse_gender(row.fields[5]);
    e.category = row.fields[6];
    e.terms = parse_terms(row.fields[7], e.id);
    if (!seen.insert(e.id).second)
      throw ValidationError("duplicate id `" + e.id + "` at line " +
                            std::to_string(row.line_no));

    const auto ref_c_tokens = tokenize(e.ref_correct);
    const auto ref_w_tokens = tokenize(e.ref_wrong);
    for (const TermPair& t : e.terms) {
      if (!contains_subsequence(ref_c_tokens, t.correct))
        throw ValidationError("entry `" + e.id + "`: term `" +
                              join_tokens(t.correct) +
                              "` not found in REF-C");
      if (!contains_subsequence(ref_w_tokens, t.wrong))
        throw ValidationError("entry `" + e.id + "`: term `" +
                              join_tokens(t.wrong) + "` not found in REF-W");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string format_terms(const std::vector<TermPair>& terms) {
  std::string out;
  for (size_t i = 0; i < terms.size(); ++i) {
    if (i) out += ';';
    out += join_tokens(terms[i].correct);
    out += ':';
    out += join_tokens(terms[i].wrong);
  }
  return out;
}

void serialize_benchmark(std::ostream& out,
                         const std::vector<BenchmarkEntry>& entries) {
  write_tsv_line(out, kBenchmarkHeader);
  for (const auto& e : entries)
    write_tsv_line(out, {e.id, e.talk_id, e.src, e.ref_correct, e.ref_wrong,
                         to_string(e.gender), e.category,
                         format_terms(e.terms)});
}

// ---------------------------------------------------------------------------
// manifest.tsv
// ---------------------------------------------------------------------------

static const std::vector<std::string> kManifestHeader = {
    "ID", "TALK-ID", "SRC", "TGT", "GENDER", "PITCH"};

static std::string format_pitch(double p) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), p);
  return std::string(buf, res.ptr);
}

std::vector<ManifestRow> parse_manifest(std::istream& in) {
  std::vector<ManifestRow> rows;
  std::unordered_set<std::string> seen;
  for (const TsvRow& row : read_tsv(in, kManifestHeader)) {
    ManifestRow r;
    r.id = row.fields[0];
    r.talk_id = row.fields[1];
    r.src = row.fields[2];
    r.tgt = row.fields[3];
    if (!row.fields[4].empty()) r.gender = parse_gender(row.fields[4]);
    if (!row.fields[5].empty()) {
      const std::string& cell = row.fields[5];
      double pitch = 0.0;
      const auto res =
          std::from_chars(cell.data(), cell.data() + cell.size(), pitch);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw ParseError("bad PITCH value `" + cell + "` at line " +
                         std::to_string(row.line_no));
      if (pitch < 0.0 || pitch > 1.0)
        throw ValidationError("PITCH out of [0,1] at line " +
                              std::to_string(row.line_no));
      r.pitch = pitch;
    }
    if (!seen.insert(r.id).second)
      throw ValidationError("duplicate id `" + r.id + "` at line " +
                            std::to_string(row.line_no));
    rows.push_back(std::move(r));
  }
  return rows;
}

void serialize_manifest(std::ostream& out,
                        const std::vector<ManifestRow>& rows) {
  write_tsv_line(out, kManifestHeader);
  for (const auto& r : rows)
    write_tsv_line(out, {r.id, r.talk_id, r.src, r.tgt,
                         r.gender ? to_string(*r.gender) : std::string(),
                         r.pitch ? format_pitch(*r.pitch) : std::string()});
}

// ---------------------------------------------------------------------------
// hypotheses.tsv
// ---------------------------------------------------------------------------

static const std::vector<std::string> kHypHeader = {"ID", "TEXT"};

HypothesisSet parse_hypotheses(std::istream& in) {
  HypothesisSet hyps;
  for (const TsvRow& row : read_tsv(in, kHypHeader)) {
    if (!hyps.emplace(row.fields[0], row.fields[1]).second)
      throw ValidationError("duplicate id `" + row.fields[0] + "` at line " +
                            std::to_string(row.line_no));
  }
  return hyps;
}

void serialize_hypotheses(std::ostream& out, const HypothesisSet& hyps) {
  write_tsv_line(out, kHypHeader);
  for (const auto& [id, text] : hyps) write_tsv_line(out, {id, text});
}

// ---------------------------------------------------------------------------

JoinResult join_gender(const std::vector<ManifestRow>& manifest,
                       const std::vector<SpeakerRecord>& speakers) {
  std::unordered_map<std::string, std::optional<GenderTag>> by_talk;
  for (const auto& s : speakers) by_talk[s.talk_id] = gender_of(s.pronoun);

  JoinResult result;
  for (const auto& row : manifest) {
    const auto it = by_talk.find(row.talk_id);
    if (it == by_talk.end() || !it->second) {
      ++result.dropped;
      continue;
    }
    ManifestRow joined = row;
    joined.gender = it->second;
    result.rows.push_back(std::move(joined));
  }
  return result;
}

}  // namespace genst
