#pragma once

#include <string>
#include <vector>

#include "genst/metrics.hpp"
#include "genst/toy/model.hpp"
#include "genst/toy/synth.hpp"

namespace genst::toy {

// Full 8-system pipeline: Base, Multi-{DecPrep,DecMerge,EncMerge}-{Bal,All},
// Specialized-All (one model per gender, selected by the requested gender).
struct ExperimentConfig {
  SynthConfig synth;
  ToyConfig model;
  Hyper base_hyper{1e-3, 3, 32, 0};     // lr, epochs, batch_size, seed
  // Multi-gender fine-tuning is deliberately gentler than base training so
  // the models keep some reliance on the pitch cue next to the tag.
  double multi_lr = 3e-4;
  int multi_epochs = 1;
  int specialized_epochs = 6;
  uint64_t seed = 0;
};

struct SystemResult {
  std::string name;
  EvalReport matched;   // tag (when any) agrees with the speaker's gender
  EvalReport conflict;  // tag opposite to the pitch-implied gender, scored
                        // against the swapped-expectation benchmark
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<SystemResult> systems;

  const SystemResult& system(const std::string& name) const;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

// One record per (system, subset) with the table-shaped numbers.
std::string experiment_report_json(const ExperimentReport& report);

}  // namespace genst::toy
