#include "genst/toy/checkpoint.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "genst/errors.hpp"

namespace genst::toy {

static constexpr const char* kFormat = "genst-toy-v1";

void save_checkpoint(std::ostream& out, const ToyModelParams& params) {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["config"] = {{"model_dim", params.cfg.model_dim},
                 {"layers", params.cfg.layers},
                 {"heads", params.cfg.heads},
                 {"ffn_dim", params.cfg.ffn_dim},
                 {"max_len", params.cfg.max_len}};
  j["strategy"] = to_string(params.strategy);
  j["vocab"] = params.vocab.tokens;
  nlohmann::ordered_json tensors;
  for (const auto& [name, t] : params.named_tensors()) {
    nlohmann::ordered_json tj;
    tj["shape"] = {t->rows, t->cols};
    tj["data"] = t->v;
    tensors[name] = std::move(tj);
  }
  j["tensors"] = std::move(tensors);
  out << j.dump() << '\n';
}

ToyModelParams load_checkpoint(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat)
      throw ParseError("unsupported checkpoint format `" +
                       j.at("format").get<std::string>() + "`");
    ToyConfig cfg;
    const auto& cj = j.at("config");
    cfg.model_dim = cj.at("model_dim").get<int>();
    cfg.layers = cj.at("layers").get<int>();
    cfg.heads = cj.at("heads").get<int>();
    cfg.ffn_dim = cj.at("ffn_dim").get<int>();
    cfg.max_len = cj.at("max_len").get<int>();

    const auto tokens = j.at("vocab").get<std::vector<std::string>>();
    if (tokens.size() < 6)
      throw ParseError("checkpoint vocab too small");
    Vocab vocab = Vocab::build(
        std::vector<std::string>(tokens.begin() + 6, tokens.end()));
    for (int i = 0; i < 6; ++i)
      if (vocab.tokens[i] != tokens[i])
        throw ParseError("checkpoint specials out of order");

    ToyModelParams params = init_params(cfg, vocab, /*seed=*/0);
    params.strategy = parse_strategy(j.at("strategy").get<std::string>());
    const auto& tensors = j.at("tensors");
    for (auto& [name, t] : params.named_tensors()) {
      const auto& tj = tensors.at(name);
      const auto shape = tj.at("shape").get<std::vector<int>>();
      if (shape.size() != 2 || shape[0] != t->rows || shape[1] != t->cols)
        throw ParseError("checkpoint tensor `" + name + "` has wrong shape");
      t->v = tj.at("data").get<std::vector<double>>();
      if (t->v.size() != static_cast<size_t>(t->rows) * t->cols)
        throw ParseError("checkpoint tensor `" + name + "` has wrong size");
      for (const double x : t->v)
        if (!std::isfinite(x))
          throw ValidationError("checkpoint tensor `" + name +
                                "` contains non-finite values");
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint JSON: ") + e.what());
  }
}

}  // namespace genst::toy
