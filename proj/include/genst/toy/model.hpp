#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "genst/corpus.hpp"
#include "genst/data_prep.hpp"
#include "genst/toy/tensor.hpp"

namespace genst::toy {

// How speaker-gender information reaches the model.
enum class Strategy { None, DecPrep, DecMerge, EncMerge };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

// Token inventory. Ids 0..5 are the fixed specials.
struct Vocab {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, int> index;

  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kTagF = 4;
  static constexpr int kTagM = 5;

  static Vocab build(const std::vector<std::string>& words);
  int id(const std::string& token) const;  // kUnk for unknown tokens
  int tag_id(GenderTag g) const { return g == GenderTag::F ? kTagF : kTagM; }
  int size() const { return static_cast<int>(tokens.size()); }
};

struct ToyConfig {
  int model_dim = 64;
  int layers = 2;
  int heads = 4;
  int ffn_dim = 128;
  int max_len = 48;
};

struct LayerNormParams {
  Tensor gamma;  // 1×d
  Tensor beta;   // 1×d
};

struct AttnParams {
  Tensor wq, wk, wv, wo;  // each d×d
};

struct FfnParams {
  Tensor w1;  // d×f
  Tensor b1;  // 1×f
  Tensor w2;  // f×d
  Tensor b2;  // 1×d
};

struct EncLayerParams {
  LayerNormParams ln1, ln2;
  AttnParams attn;
  FfnParams ffn;
};

struct DecLayerParams {
  LayerNormParams ln1, ln2, ln3;
  AttnParams self_attn, cross_attn;
  FfnParams ffn;
};

// All learnable tensors of the encoder-decoder plus the gender embeddings
// and the scalar-pitch projection.
struct ToyModelParams {
  ToyConfig cfg;
  Vocab vocab;
  Strategy strategy = Strategy::None;  // recorded at training time

  Tensor token_emb;   // V×d
  Tensor gender_emb;  // 2×d (row 0 = F, row 1 = M)
  Tensor pitch_proj;  // 1×d
  std::vector<EncLayerParams> enc;
  std::vector<DecLayerParams> dec;
  LayerNormParams enc_ln, dec_ln;
  Tensor w_out;  // d×V
  Tensor b_out;  // 1×V

  // Tensors in a fixed order; used by the optimizer, the checkpoint writer
  // and the gradient checker.
  std::vector<std::pair<std::string, Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
};

// Random initialization. Gender embeddings are drawn small so that merge
// strategies start as mild perturbations of the base representations.
ToyModelParams init_params(const ToyConfig& cfg, const Vocab& vocab,
                           uint64_t seed);

// Same shapes as `like`, all zeros.
ToyModelParams zeros_like(const ToyModelParams& like);

// Encoder input vectors: token embedding + pitch·pitch_projection +
// sinusoidal position encoding (+ gender embedding everywhere for EncMerge).
Tensor encode_inputs(const ToyModelParams& params,
                     const std::vector<int>& src_ids, double pitch,
                     Strategy strategy, std::optional<GenderTag> tag);

// Decoder input vectors for a BOS-prefixed target prefix. DecPrep swaps the
// position-0 embedding for the tag token's embedding; DecMerge adds the
// gender embedding at every position.
Tensor decoder_inputs(const ToyModelParams& params,
                      const std::vector<int>& prefix_ids, Strategy strategy,
                      std::optional<GenderTag> tag);

struct Hyper {
  double lr = 3e-4;
  int epochs = 1;
  int batch_size = 32;
  uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainLog {
  std::vector<double> epoch_losses;  // mean per-token cross entropy
  double lr_used = 0.0;
};

// Teacher-forced cross-entropy training with Adam. When `plan` is given it
// dictates epoch-0 batch composition; later epochs use plans regenerated from
// plan->seed + epoch so minority oversampling reshuffles between epochs.
void train(ToyModelParams& params, const std::vector<ManifestRow>& manifest,
           Strategy strategy, const Hyper& hyper,
           const BatchPlan* plan = nullptr, TrainLog* log = nullptr);

// Fine-tunes on a single-gender manifest with strategy None and 0.1× the
// base learning rate.
void finetune_specialized(ToyModelParams& params,
                          const std::vector<ManifestRow>& manifest,
                          const Hyper& base_hyper, TrainLog* log = nullptr);

// Greedy decoding from BOS/TAG until EOS or 2·|src|+5 tokens.
std::vector<std::string> translate(const ToyModelParams& params,
                                   const std::vector<std::string>& src_tokens,
                                   double pitch, Strategy strategy,
                                   std::optional<GenderTag> tag);

// Next-token distribution after a given target prefix (softmax over vocab).
std::vector<double> next_token_distribution(
    const ToyModelParams& params, const std::vector<std::string>& src_tokens,
    double pitch, Strategy strategy, std::optional<GenderTag> tag,
    const std::vector<std::string>& prefix_tokens);

// Summed cross entropy and token count for one batch; accumulates gradients
// of the summed loss into `grads` when non-null.
struct BatchLoss {
  double loss_sum = 0.0;
  long tokens = 0;
};
BatchLoss loss_and_grads(const ToyModelParams& params,
                         const std::vector<const ManifestRow*>& batch,
                         Strategy strategy, ToyModelParams* grads);

// Central-finite-difference check (step 1e-4) of the analytic gradients over
// a random sample of at least `n_coords` coordinates. Returns the max
// relative error.
double grad_check(const ToyConfig& cfg, uint64_t seed, int n_coords = 200);

}  // namespace genst::toy
