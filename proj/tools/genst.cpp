// genst: command-line front end for the gender-translation toolkit.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genst/corpus.hpp"
#include "genst/data_prep.hpp"
#include "genst/errors.hpp"
#include "genst/metrics.hpp"
#include "genst/text.hpp"
#include "genst/toy/checkpoint.hpp"
#include "genst/toy/experiment.hpp"
#include "genst/toy/model.hpp"
#include "genst/toy/synth.hpp"

namespace fs = std::filesystem;
using namespace genst;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open `" + path + "` for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open `" + path + "` for writing");
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

// Deterministic vocabulary: every whitespace token of every src/tgt, sorted.
toy::Vocab vocab_from_manifest(const std::vector<ManifestRow>& rows) {
  std::set<std::string> tokens;
  for (const auto& r : rows) {
    for (const auto& t : split_ws(r.src)) tokens.insert(t);
    for (const auto& t : split_ws(r.tgt)) tokens.insert(t);
  }
  return toy::Vocab::build({tokens.begin(), tokens.end()});
}

void write_summary_counts(const EvalReport& r) {
  auto pct = [](const std::optional<double>& v) {
    if (!v) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return std::string(buf);
  };
  std::cout << "BLEU (correct refs): " << r.bleu_correct
            << "  BLEU (wrong refs): " << r.bleu_wrong << "\n";
  std::cout << "overall: coverage " << pct(r.overall.coverage_pct())
            << "%  accuracy " << pct(r.overall.accuracy_pct()) << "%  ("
            << r.overall.covered << "/" << r.overall.terms_total
            << " covered)\n";
  for (const auto& [g, c] : r.per_gender)
    std::cout << "  " << to_string(g) << ": coverage " << pct(c.coverage_pct())
              << "%  accuracy " << pct(c.accuracy_pct()) << "%\n";
}

int cmd_evaluate(const std::string& benchmark_path, const std::string& hyp_path,
                 const std::string& out_path, bool swap_expected,
                 bool per_segment, const std::optional<std::string>& category) {
  auto bench_in = open_in(benchmark_path);
  std::vector<BenchmarkEntry> benchmark = parse_benchmark(bench_in);
  if (swap_expected) benchmark = swap_expectation(benchmark);
  auto hyp_in = open_in(hyp_path);
  const HypothesisSet hyps = parse_hypotheses(hyp_in);
  const EvalReport report = evaluate(benchmark, hyps, category, per_segment);
  open_out(out_path) << render_report(report);
  write_summary_counts(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gender-translation evaluation and training toolkit"};
  app.require_subcommand(1);

  // --- evaluate ---
  struct {
    std::string benchmark, hyp, out;
    bool swap_expected = false, per_segment = false;
    std::string category;
  } ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score hypotheses");
  evaluate_cmd->add_option("--benchmark", ev.benchmark)->required();
  evaluate_cmd->add_option("--hyp", ev.hyp)->required();
  evaluate_cmd->add_option("--out", ev.out)->required();
  evaluate_cmd->add_flag("--swap-expected", ev.swap_expected,
                         "score against the gender-swapped expectation");
  evaluate_cmd->add_flag("--per-segment", ev.per_segment);
  evaluate_cmd->add_option("--category", ev.category,
                           "keep only entries with this CATEGORY");

  // --- prep ---
  auto* prep = app.add_subcommand("prep", "data preparation");
  prep->require_subcommand(1);
  struct {
    std::string manifest, speakers, out_dev, out_rest;
    int talks = 20;
    uint64_t seed = 0;
  } dv;
  auto* dev_cmd = prep->add_subcommand("dev-balanced",
                                       "sample a gender-balanced dev set");
  dev_cmd->add_option("--manifest", dv.manifest)->required();
  dev_cmd->add_option("--speakers", dv.speakers)->required();
  dev_cmd->add_option("--talks", dv.talks);
  dev_cmd->add_option("--seed", dv.seed)->required();
  dev_cmd->add_option("--out-dev", dv.out_dev)->required();
  dev_cmd->add_option("--out-rest", dv.out_rest)->required();

  struct {
    std::string manifest, mode, out;
    uint64_t seed = 0;
  } sp;
  auto* split_cmd = prep->add_subcommand("split", "gender-specific subsets");
  split_cmd->add_option("--manifest", sp.manifest)->required();
  split_cmd->add_option("--mode", sp.mode)
      ->required()
      ->check(CLI::IsMember({"specialized-f", "specialized-m", "balanced"}));
  split_cmd->add_option("--seed", sp.seed);
  split_cmd->add_option("--out", sp.out)->required();

  struct {
    std::string manifest, out;
  } tg;
  auto* tags_cmd = prep->add_subcommand("tags", "prepend gender tags");
  tags_cmd->add_option("--manifest", tg.manifest)->required();
  tags_cmd->add_option("--out", tg.out)->required();

  struct {
    std::string manifest, out;
    int batch_size = 32;
    uint64_t seed = 0;
  } bt;
  auto* batches_cmd = prep->add_subcommand("batches",
                                           "balanced batch schedule (JSON)");
  batches_cmd->add_option("--manifest", bt.manifest)->required();
  batches_cmd->add_option("--batch-size", bt.batch_size);
  batches_cmd->add_option("--seed", bt.seed)->required();
  batches_cmd->add_option("--out", bt.out)->required();

  // --- synth ---
  struct {
    int segments = 5000;
    double skew = 0.71;
    uint64_t seed = 0;
    std::string out_dir;
  } sy;
  auto* synth_cmd = app.add_subcommand("synth",
                                       "generate the synthetic corpus");
  synth_cmd->add_option("--segments", sy.segments);
  synth_cmd->add_option("--skew", sy.skew, "male fraction");
  synth_cmd->add_option("--seed", sy.seed)->required();
  synth_cmd->add_option("--out-dir", sy.out_dir)->required();

  // --- toy ---
  auto* toy_cmd = app.add_subcommand("toy", "desk-scale model");
  toy_cmd->require_subcommand(1);
  struct {
    std::string manifest, strategy = "none", out, plan;
    double lr = 1e-3;
    int epochs = 1, batch_size = 32;
    uint64_t seed = 0;
  } tr;
  auto* train_cmd = toy_cmd->add_subcommand("train", "train from scratch");
  train_cmd->add_option("--manifest", tr.manifest)->required();
  train_cmd->add_option("--strategy", tr.strategy)
      ->check(CLI::IsMember({"none", "dec-prep", "dec-merge", "enc-merge"}));
  train_cmd->add_option("--lr", tr.lr);
  train_cmd->add_option("--epochs", tr.epochs);
  train_cmd->add_option("--batch-size", tr.batch_size);
  train_cmd->add_option("--plan", tr.plan, "balanced batch plan JSON");
  train_cmd->add_option("--seed", tr.seed)->required();
  train_cmd->add_option("--out", tr.out)->required();

  struct {
    std::string checkpoint, manifest, out;
    double lr = 1e-3;
    int epochs = 1, batch_size = 32;
    uint64_t seed = 0;
  } ft;
  auto* finetune_cmd =
      toy_cmd->add_subcommand("finetune", "gender-specialized fine-tuning");
  finetune_cmd->add_option("--checkpoint", ft.checkpoint)->required();
  finetune_cmd->add_option("--manifest", ft.manifest)->required();
  finetune_cmd->add_option("--lr", ft.lr, "base rate; fine-tuning uses lr/10");
  finetune_cmd->add_option("--epochs", ft.epochs);
  finetune_cmd->add_option("--batch-size", ft.batch_size);
  finetune_cmd->add_option("--seed", ft.seed)->required();
  finetune_cmd->add_option("--out", ft.out)->required();

  struct {
    std::string checkpoint, manifest, out;
    bool conflict = false;
  } tl;
  auto* translate_cmd =
      toy_cmd->add_subcommand("translate", "greedy-decode a manifest");
  translate_cmd->add_option("--checkpoint", tl.checkpoint)->required();
  translate_cmd->add_option("--manifest", tl.manifest)->required();
  translate_cmd->add_flag("--conflict", tl.conflict,
                          "request the gender opposite to each row's label");
  translate_cmd->add_option("--out", tl.out)->required();

  struct {
    uint64_t seed = 0;
  } gc;
  auto* gradcheck_cmd =
      toy_cmd->add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck_cmd->add_option("--seed", gc.seed)->required();

  // --- experiment ---
  auto* exp_cmd = app.add_subcommand("experiment", "multi-system comparison pipelines");
  exp_cmd->require_subcommand(1);
  struct {
    std::string out_dir;
    int segments = 5000;
    uint64_t seed = 0;
  } ex;
  auto* full_cmd = exp_cmd->add_subcommand("full", "run the 8-system pipeline");
  full_cmd->add_option("--out-dir", ex.out_dir)->required();
  full_cmd->add_option("--segments", ex.segments);
  full_cmd->add_option("--seed", ex.seed)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*evaluate_cmd) {
      std::optional<std::string> category;
      if (!ev.category.empty()) category = ev.category;
      return cmd_evaluate(ev.benchmark, ev.hyp, ev.out, ev.swap_expected,
                          ev.per_segment, category);
    }
    if (*dev_cmd) {
      auto man_in = open_in(dv.manifest);
      auto spk_in = open_in(dv.speakers);
      const auto manifest = parse_manifest(man_in);
      const auto speakers = parse_speakers(spk_in);
      const DevSplit split =
          sample_balanced_dev(manifest, speakers, dv.talks, dv.seed);
      auto dev_out = open_out(dv.out_dev);
      serialize_manifest(dev_out, split.dev);
      auto rest_out = open_out(dv.out_rest);
      serialize_manifest(rest_out, split.remaining);
      std::cout << "dev: " << split.dev.size() << " segments, remaining: "
                << split.remaining.size() << "\n";
      return 0;
    }
    if (*split_cmd) {
      auto man_in = open_in(sp.manifest);
      const auto manifest = parse_manifest(man_in);
      std::vector<ManifestRow> out_rows;
      if (sp.mode == "specialized-f")
        out_rows = split_specialized(manifest, GenderTag::F);
      else if (sp.mode == "specialized-m")
        out_rows = split_specialized(manifest, GenderTag::M);
      else {
        if (!split_cmd->count("--seed"))
          throw CLI::RequiredError("--seed (with --mode balanced)");
        out_rows = subsample_balanced(manifest, sp.seed);
      }
      if (out_rows.empty())
        std::cerr << "warning: no rows match the requested gender\n";
      auto out = open_out(sp.out);
      serialize_manifest(out, out_rows);
      std::cout << out_rows.size() << " rows written\n";
      return 0;
    }
    if (*tags_cmd) {
      auto man_in = open_in(tg.manifest);
      const auto tagged = prepend_tags(parse_manifest(man_in));
      auto out = open_out(tg.out);
      serialize_manifest(out, tagged);
      std::cout << tagged.size() << " rows tagged\n";
      return 0;
    }
    if (*batches_cmd) {
      auto man_in = open_in(bt.manifest);
      const BatchPlan plan = schedule_balanced_batches(parse_manifest(man_in),
                                                       bt.batch_size, bt.seed);
      open_out(bt.out) << batch_plan_to_json(plan);
      std::cout << plan.batches.size() << " batches of " << bt.batch_size
                << "\n";
      return 0;
    }
    if (*synth_cmd) {
      toy::SynthConfig cfg;
      cfg.n_segments = sy.segments;
      cfg.male_fraction = sy.skew;
      cfg.seed = sy.seed;
      const toy::SynthData data = toy::gen_synthetic(cfg);
      fs::create_directories(sy.out_dir);
      const fs::path dir(sy.out_dir);
      auto train_out = open_out((dir / "train.tsv").string());
      serialize_manifest(train_out, data.train);
      auto eval_out = open_out((dir / "eval.tsv").string());
      serialize_manifest(eval_out, data.eval_rows);
      auto bench_out = open_out((dir / "benchmark.tsv").string());
      serialize_benchmark(bench_out, data.benchmark);
      std::cout << "train: " << data.train.size()
                << "  eval: " << data.eval_rows.size()
                << "  benchmark: " << data.benchmark.size() << "\n";
      return 0;
    }
    if (*train_cmd) {
      auto man_in = open_in(tr.manifest);
      const auto manifest = parse_manifest(man_in);
      toy::ToyModelParams params =
          toy::init_params(toy::ToyConfig{}, vocab_from_manifest(manifest),
                           tr.seed);
      toy::Hyper hyper{tr.lr, tr.epochs, tr.batch_size, tr.seed};
      std::optional<BatchPlan> plan;
      if (!tr.plan.empty()) {
        std::stringstream buf;
        buf << open_in(tr.plan).rdbuf();
        plan = batch_plan_from_json(buf.str());
      }
      toy::TrainLog log;
      toy::train(params, manifest, toy::parse_strategy(tr.strategy), hyper,
                 plan ? &*plan : nullptr, &log);
      auto out = open_out(tr.out);
      toy::save_checkpoint(out, params);
      for (size_t e = 0; e < log.epoch_losses.size(); ++e)
        std::cout << "epoch " << e + 1 << ": loss " << log.epoch_losses[e]
                  << "\n";
      return 0;
    }
    if (*finetune_cmd) {
      auto ckpt_in = open_in(ft.checkpoint);
      toy::ToyModelParams params = toy::load_checkpoint(ckpt_in);
      auto man_in = open_in(ft.manifest);
      toy::Hyper hyper{ft.lr, ft.epochs, ft.batch_size, ft.seed};
      toy::TrainLog log;
      toy::finetune_specialized(params, parse_manifest(man_in), hyper, &log);
      auto out = open_out(ft.out);
      toy::save_checkpoint(out, params);
      std::cout << "fine-tuned at lr " << log.lr_used << "\n";
      return 0;
    }
    if (*translate_cmd) {
      auto ckpt_in = open_in(tl.checkpoint);
      const toy::ToyModelParams params = toy::load_checkpoint(ckpt_in);
      auto man_in = open_in(tl.manifest);
      const auto manifest = parse_manifest(man_in);
      HypothesisSet hyps;
      for (const auto& row : manifest) {
        std::optional<GenderTag> tag;
        if (params.strategy != toy::Strategy::None) {
          if (!row.gender)
            throw ValidationError("row `" + row.id +
                                  "` has no gender but the checkpoint's "
                                  "strategy needs a tag");
          tag = tl.conflict ? opposite(*row.gender) : *row.gender;
        }
        hyps[row.id] = join_tokens(
            toy::translate(params, split_ws(row.src), row.pitch.value_or(0.0),
                           params.strategy, tag));
      }
      auto out = open_out(tl.out);
      serialize_hypotheses(out, hyps);
      std::cout << hyps.size() << " hypotheses written\n";
      return 0;
    }
    if (*gradcheck_cmd) {
      toy::ToyConfig cfg;
      cfg.model_dim = 8;
      cfg.layers = 1;
      cfg.heads = 2;
      cfg.ffn_dim = 16;
      cfg.max_len = 16;
      const double err = toy::grad_check(cfg, gc.seed);
      std::cout << "max relative error: " << err << "\n";
      return err < 1e-3 ? 0 : 1;
    }
    if (*full_cmd) {
      toy::ExperimentConfig cfg;
      cfg.synth.n_segments = ex.segments;
      cfg.synth.seed = ex.seed;
      cfg.seed = ex.seed;
      const toy::ExperimentReport report = toy::run_experiment(cfg);
      fs::create_directories(ex.out_dir);
      open_out((fs::path(ex.out_dir) / "report.json").string())
          << toy::experiment_report_json(report);
      std::cout << "system                 cov%    acc%  | conflict acc%\n";
      for (const auto& s : report.systems) {
        char line[128];
        std::snprintf(line, sizeof line, "%-20s %6.2f  %6.2f  | %6.2f\n",
                      s.name.c_str(),
                      s.matched.overall.coverage_pct().value_or(0.0),
                      s.matched.overall.accuracy_pct().value_or(0.0),
                      s.conflict.overall.accuracy_pct().value_or(0.0));
        std::cout << line;
      }
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 2;
}
