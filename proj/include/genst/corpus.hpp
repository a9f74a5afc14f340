#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace genst {

// Binary linguistic gender label carried by references and manifests.
enum class GenderTag { F, M };

// Pronoun found on a speaker's public profile. Only She/He map to a
// GenderTag; the other labels are kept in the speaker table but excluded
// from training/eval selection.
enum class PronounLabel { She, He, They, Mixed, Unknown };

std::string to_string(GenderTag g);
std::string to_string(PronounLabel p);
GenderTag parse_gender(const std::string& s);             // throws ParseError
PronounLabel parse_pronoun(const std::string& s);         // throws ParseError
std::optional<GenderTag> gender_of(PronounLabel p);       // She->F, He->M
GenderTag opposite(GenderTag g);

// One row of the talk-level speaker annotation table.
struct SpeakerRecord {
  std::string talk_id;
  std::string name;  // may be empty
  PronounLabel pronoun = PronounLabel::Unknown;

  bool operator==(const SpeakerRecord&) const = default;
};

// A gender-marked term with its opposite-gender form, both tokenized.
struct TermPair {
  std::vector<std::string> correct;
  std::vector<std::string> wrong;

  bool operator==(const TermPair&) const = default;
};

// One evaluation segment: source, correct reference, gender-swapped wrong
// reference, the annotated term pairs, and the speaker's gender.
struct BenchmarkEntry {
  std::string id;
  std::string talk_id;
  std::string src;
  std::string ref_correct;
  std::string ref_wrong;
  GenderTag gender = GenderTag::F;
  std::string category;
  std::vector<TermPair> terms;

  bool operator==(const BenchmarkEntry&) const = default;
};

// One training/eval segment. Gender and pitch are optional until joined.
struct ManifestRow {
  std::string id;
  std::string talk_id;
  std::string src;
  std::string tgt;
  std::optional<GenderTag> gender;
  std::optional<double> pitch;  // in [0,1] when present

  bool operator==(const ManifestRow&) const = default;
};

// id -> hypothesis text. Ordered so every traversal is deterministic.
using HypothesisSet = std::map<std::string, std::string>;

// --- Parsers (throw ParseError / ValidationError) ---

std::vector<SpeakerRecord> parse_speakers(std::istream& in);
std::vector<BenchmarkEntry> parse_benchmark(std::istream& in);
std::vector<ManifestRow> parse_manifest(std::istream& in);
HypothesisSet parse_hypotheses(std::istream& in);

// --- Serializers; serialize(parse(x)) == x for canonical files ---

void serialize_speakers(std::ostream& out, const std::vector<SpeakerRecord>&);
void serialize_benchmark(std::ostream& out, const std::vector<BenchmarkEntry>&);
void serialize_manifest(std::ostream& out, const std::vector<ManifestRow>&);
void serialize_hypotheses(std::ostream& out, const HypothesisSet&);

// Joins speaker gender onto manifest rows by talk id. Rows whose talk maps
// to They/Mixed/Unknown, or has no speaker entry, are dropped (counted, not
// fatal).
struct JoinResult {
  std::vector<ManifestRow> rows;
  size_t dropped = 0;
};
JoinResult join_gender(const std::vector<ManifestRow>& manifest,
                       const std::vector<SpeakerRecord>& speakers);

// Serializes one TERMS cell ("correct:wrong;..." with space-joined tokens).
std::string format_terms(const std::vector<TermPair>& terms);

}  // namespace genst
