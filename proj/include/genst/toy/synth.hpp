#pragma once

#include <cstdint>
#include <vector>

#include "genst/corpus.hpp"
#include "genst/toy/model.hpp"

namespace genst::toy {

// Synthetic gender-inflected language: fixed source templates over stems,
// deterministic target mapping (function word w -> t_w; gendered stem s ->
// s+"a"/s+"o"; neutral stem -> s+"e"), scalar pitch drawn per segment from
// the speaker gender's normal distribution.
struct SynthConfig {
  int n_segments = 5000;
  double male_fraction = 0.71;
  int gendered_stems = 20;
  int neutral_stems = 10;
  double pitch_mean_f = 0.7;
  double pitch_mean_m = 0.3;
  double pitch_std = 0.12;
  uint64_t seed = 0;
};

struct SynthData {
  std::vector<ManifestRow> train;      // 90% of segments, gender + pitch set
  std::vector<ManifestRow> eval_rows;  // held-out 10% (carries pitch)
  std::vector<BenchmarkEntry> benchmark;  // gendered held-out segments
};

SynthData gen_synthetic(const SynthConfig& cfg);

// Vocabulary covering every token the generator can emit.
Vocab synth_vocab(const SynthConfig& cfg);

// Deterministic target mapping for one source sentence.
std::string map_target(const std::vector<std::string>& src_tokens,
                       GenderTag gender, const SynthConfig& cfg);

}  // namespace genst::toy
