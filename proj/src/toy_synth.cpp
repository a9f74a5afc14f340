#include "genst/toy/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "genst/errors.hpp"
#include "genst/rng.hpp"
#include "genst/text.hpp"

namespace genst::toy {

namespace {

const std::vector<std::vector<std::string>> kTemplates = {
    {"i", "am", "<S>"},
    {"i", "was", "<S>", "yesterday"},
    {"as", "a", "<S>", "i", "work"},
    {"i", "felt", "<S>", "today"},
};

const std::vector<std::string> kFunctionWords = {
    "i", "am", "was", "yesterday", "as", "a", "work", "felt", "today"};

std::string stem_name(bool gendered, int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%02d", gendered ? "gs" : "ns", index);
  return buf;
}

bool is_gendered_stem(const std::string& tok, const SynthConfig& cfg) {
  for (int i = 0; i < cfg.gendered_stems; ++i)
    if (tok == stem_name(true, i)) return true;
  return false;
}

bool is_neutral_stem(const std::string& tok, const SynthConfig& cfg) {
  for (int i = 0; i < cfg.neutral_stems; ++i)
    if (tok == stem_name(false, i)) return true;
  return false;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

std::string map_target(const std::vector<std::string>& src_tokens,
                       GenderTag gender, const SynthConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& tok : src_tokens) {
    if (is_gendered_stem(tok, cfg))
      out.push_back(tok + (gender == GenderTag::F ? "a" : "o"));
    else if (is_neutral_stem(tok, cfg))
      out.push_back(tok + "e");
    else
      out.push_back("t_" + tok);
  }
  return join(out);
}

Vocab synth_vocab(const SynthConfig& cfg) {
  std::vector<std::string> words;
  for (const auto& w : kFunctionWords) words.push_back(w);
  for (int i = 0; i < cfg.gendered_stems; ++i)
    words.push_back(stem_name(true, i));
  for (int i = 0; i < cfg.neutral_stems; ++i)
    words.push_back(stem_name(false, i));
  for (const auto& w : kFunctionWords) words.push_back("t_" + w);
  for (int i = 0; i < cfg.gendered_stems; ++i) {
    words.push_back(stem_name(true, i) + "a");
    words.push_back(stem_name(true, i) + "o");
  }
  for (int i = 0; i < cfg.neutral_stems; ++i)
    words.push_back(stem_name(false, i) + "e");
  return Vocab::build(words);
}

SynthData gen_synthetic(const SynthConfig& cfg) {
  if (cfg.n_segments < 20)
    throw ValidationError("gen_synthetic: need at least 20 segments");
  if (cfg.gendered_stems <= 0 || cfg.neutral_stems < 0 ||
      cfg.pitch_std <= 0.0 || cfg.male_fraction <= 0.0 ||
      cfg.male_fraction >= 1.0)
    throw ValidationError("gen_synthetic: invalid config");

  Xoshiro256 rng(cfg.seed);
  SynthData data;
  // Segments of one talk are contiguous so talk-level sampling stays
  // meaningful.
  constexpr int kSegmentsPerTalk = 25;
  int count_f = 0;
  int count_m = 0;

  for (int i = 0; i < cfg.n_segments; ++i) {
    const GenderTag gender =
        rng.uniform() < cfg.male_fraction ? GenderTag::M : GenderTag::F;
    const int n_stems = cfg.gendered_stems + cfg.neutral_stems;
    const int stem_idx = static_cast<int>(rng.below(n_stems));
    const bool gendered = stem_idx < cfg.gendered_stems;
    const std::string stem =
        stem_name(gendered, gendered ? stem_idx : stem_idx - cfg.gendered_stems);
    const auto& tmpl = kTemplates[rng.below(kTemplates.size())];
    std::vector<std::string> src_tokens;
    for (const auto& t : tmpl) src_tokens.push_back(t == "<S>" ? stem : t);

    const double mean =
        gender == GenderTag::F ? cfg.pitch_mean_f : cfg.pitch_mean_m;
    const double pitch =
        std::clamp(rng.normal(mean, cfg.pitch_std), 0.0, 1.0);

    int& counter = gender == GenderTag::F ? count_f : count_m;
    char talk[16];
    std::snprintf(talk, sizeof(talk), "tk%c%03d",
                  gender == GenderTag::F ? 'F' : 'M',
                  counter / kSegmentsPerTalk);
    ++counter;
    char id[16];
    std::snprintf(id, sizeof(id), "s%05d", i);

    ManifestRow row;
    row.id = id;
    row.talk_id = talk;
    row.src = join(src_tokens);
    row.tgt = map_target(src_tokens, gender, cfg);
    row.gender = gender;
    row.pitch = pitch;

    if (i % 10 != 0) {
      data.train.push_back(std::move(row));
      continue;
    }
    data.eval_rows.push_back(row);
    if (!gendered) continue;  // neutral segments carry no annotated term

    BenchmarkEntry e;
    e.id = row.id;
    e.talk_id = row.talk_id;
    e.src = row.src;
    e.ref_correct = row.tgt;
    e.gender = gender;
    e.category = "1";
    const std::string correct =
        stem + (gender == GenderTag::F ? "a" : "o");
    const std::string wrong = stem + (gender == GenderTag::F ? "o" : "a");
    std::vector<std::string> wrong_tokens = split_ws(row.tgt);
    for (auto& t : wrong_tokens)
      if (t == correct) t = wrong;
    e.ref_wrong = join(wrong_tokens);
    e.terms.push_back(TermPair{{correct}, {wrong}});
    data.benchmark.push_back(std::move(e));
  }
  return data;
}

}  // namespace genst::toy
