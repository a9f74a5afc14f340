#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genst/corpus.hpp"

namespace genst {

// One epoch of gender-balanced batches: every batch holds the same number of
// F and M ids, majority ids appear exactly once across the plan, minority ids
// are over-sampled by cycling reshuffled permutations.
struct BatchPlan {
  uint64_t seed = 0;
  std::vector<std::vector<std::string>> batches;
};

std::string batch_plan_to_json(const BatchPlan& plan);
BatchPlan batch_plan_from_json(const std::string& text);

struct DevSplit {
  std::vector<ManifestRow> dev;
  std::vector<ManifestRow> remaining;
};

// Picks n_talks/2 talks per gender uniformly at random (seeded); all
// segments of a selected talk go to dev. Talks whose speaker has no F/M
// mapping are never selected and stay in `remaining`.
DevSplit sample_balanced_dev(const std::vector<ManifestRow>& manifest,
                             const std::vector<SpeakerRecord>& speakers,
                             int n_talks, uint64_t seed);

// Rows of the requested gender, order preserved.
std::vector<ManifestRow> split_specialized(
    const std::vector<ManifestRow>& manifest, GenderTag gender);

// All minority-gender rows plus an equally sized uniform random subset of
// the majority gender; output keeps the original manifest order.
std::vector<ManifestRow> subsample_balanced(
    const std::vector<ManifestRow>& manifest, uint64_t seed);

// Majority ids are partitioned across batches exactly once (the last partial
// batch is dropped); minority ids cycle through reshuffled permutations so
// per-plan repetition counts differ by at most 1.
BatchPlan schedule_balanced_batches(const std::vector<ManifestRow>& manifest,
                                    int batch_size, uint64_t seed);

// Prepends "<TO-F> "/"<TO-M> " to each source according to the row's gender.
// Rejects rows that already start with a tag token.
std::vector<ManifestRow> prepend_tags(const std::vector<ManifestRow>& manifest);

}  // namespace genst
