#include "genst/toy/experiment.hpp"

#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "genst/data_prep.hpp"
#include "genst/errors.hpp"
#include "genst/text.hpp"

namespace genst::toy {

const SystemResult& ExperimentReport::system(const std::string& name) const {
  for (const auto& s : systems)
    if (s.name == name) return s;
  throw std::out_of_range("no system named `" + name + "`");
}

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

// Which gender the translation should realize, given the speaker's gender.
enum class TagMode { Matched, Conflict };

GenderTag requested_gender(GenderTag speaker, TagMode mode) {
  return mode == TagMode::Matched ? speaker : opposite(speaker);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const SynthData data = gen_synthetic(cfg.synth);
  const Vocab vocab = synth_vocab(cfg.synth);

  std::unordered_map<std::string, double> pitch_by_id;
  for (const auto& row : data.eval_rows)
    pitch_by_id[row.id] = row.pitch.value_or(0.0);

  // The audio (pitch) always belongs to the actual speaker; only the
  // requested translation gender flips in the conflict condition.
  auto single_model_hyps = [&](const ToyModelParams& model, Strategy strategy,
                               TagMode mode) {
    HypothesisSet hyps;
    for (const auto& e : data.benchmark) {
      std::optional<GenderTag> tag;
      if (strategy != Strategy::None)
        tag = requested_gender(e.gender, mode);
      hyps[e.id] = join(translate(model, split_ws(e.src), pitch_by_id.at(e.id),
                                  strategy, tag));
    }
    return hyps;
  };

  auto evaluate_pair = [&](const HypothesisSet& matched_hyps,
                           const HypothesisSet& conflict_hyps) {
    SystemResult r;
    r.matched = evaluate(data.benchmark, matched_hyps, std::string("1"));
    r.conflict = evaluate(swap_expectation(data.benchmark), conflict_hyps,
                          std::string("1"));
    return r;
  };

  ExperimentReport report;
  report.config = cfg;

  // Base: gender-unaware, trained on everything.
  ToyModelParams base = init_params(cfg.model, vocab, cfg.seed);
  Hyper base_hyper = cfg.base_hyper;
  base_hyper.seed = cfg.seed + 1;
  train(base, data.train, Strategy::None, base_hyper);
  {
    const HypothesisSet hyps =
        single_model_hyps(base, Strategy::None, TagMode::Matched);
    SystemResult r = evaluate_pair(hyps, hyps);
    r.name = "base";
    report.systems.push_back(std::move(r));
  }

  // Multi-gender systems, initialized from the base weights.
  const struct {
    Strategy strategy;
    const char* tag;
  } kStrategies[] = {{Strategy::DecPrep, "dec-prep"},
                     {Strategy::DecMerge, "dec-merge"},
                     {Strategy::EncMerge, "enc-merge"}};
  uint64_t sub_seed = cfg.seed + 100;
  for (const auto& [strategy, tag_name] : kStrategies) {
    for (const bool balanced : {true, false}) {
      ToyModelParams model = base;
      Hyper hyper = cfg.base_hyper;
      hyper.lr = cfg.multi_lr;
      hyper.epochs = cfg.multi_epochs;
      hyper.seed = ++sub_seed;
      if (balanced) {
        const auto subset = subsample_balanced(data.train, ++sub_seed);
        train(model, subset, strategy, hyper);
      } else {
        const BatchPlan plan = schedule_balanced_batches(
            data.train, hyper.batch_size, ++sub_seed);
        train(model, data.train, strategy, hyper, &plan);
      }
      SystemResult r = evaluate_pair(
          single_model_hyps(model, strategy, TagMode::Matched),
          single_model_hyps(model, strategy, TagMode::Conflict));
      r.name = std::string("multi-") + tag_name + (balanced ? "-bal" : "-all");
      report.systems.push_back(std::move(r));
    }
  }

  // Specialized: one fine-tuned model per gender, selected at inference by
  // the requested translation gender.
  std::map<GenderTag, ToyModelParams> specialized;
  for (const GenderTag g : {GenderTag::F, GenderTag::M}) {
    ToyModelParams model = base;
    Hyper hyper = cfg.base_hyper;
    hyper.epochs = cfg.specialized_epochs;
    hyper.seed = ++sub_seed;
    finetune_specialized(model, split_specialized(data.train, g), hyper);
    specialized.emplace(g, std::move(model));
  }
  {
    auto specialized_hyps = [&](TagMode mode) {
      HypothesisSet hyps;
      for (const auto& e : data.benchmark) {
        const GenderTag want = requested_gender(e.gender, mode);
        hyps[e.id] = join(translate(specialized.at(want), split_ws(e.src),
                                    pitch_by_id.at(e.id), Strategy::None,
                                    std::nullopt));
      }
      return hyps;
    };
    SystemResult r = evaluate_pair(specialized_hyps(TagMode::Matched),
                                   specialized_hyps(TagMode::Conflict));
    r.name = "specialized-all";
    report.systems.push_back(std::move(r));
  }
  return report;
}

std::string experiment_report_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["config"] = {{"segments", report.config.synth.n_segments},
                 {"male_fraction", report.config.synth.male_fraction},
                 {"seed", report.config.seed},
                 {"base_epochs", report.config.base_hyper.epochs},
                 {"multi_lr", report.config.multi_lr},
                 {"multi_epochs", report.config.multi_epochs},
                 {"specialized_epochs", report.config.specialized_epochs},
                 {"lr", report.config.base_hyper.lr}};
  nlohmann::ordered_json systems = nlohmann::ordered_json::array();
  for (const auto& s : report.systems) {
    nlohmann::ordered_json sj;
    sj["name"] = s.name;
    sj["matched"] = nlohmann::ordered_json::parse(render_report(s.matched));
    sj["conflict"] = nlohmann::ordered_json::parse(render_report(s.conflict));
    systems.push_back(std::move(sj));
  }
  j["systems"] = std::move(systems);
  return j.dump(2) + "\n";
}

}  // namespace genst::toy
