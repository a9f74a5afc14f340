#include "genst/toy/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "genst/errors.hpp"
#include "genst/rng.hpp"
#include "genst/text.hpp"

namespace genst::toy {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::None: return "none";
    case Strategy::DecPrep: return "dec-prep";
    case Strategy::DecMerge: return "dec-merge";
    case Strategy::EncMerge: return "enc-merge";
  }
  return "none";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "none") return Strategy::None;
  if (s == "dec-prep") return Strategy::DecPrep;
  if (s == "dec-merge") return Strategy::DecMerge;
  if (s == "enc-merge") return Strategy::EncMerge;
  throw ParseError("unknown strategy `" + s + "`");
}

// ---------------------------------------------------------------------------
// Vocab
// ---------------------------------------------------------------------------

static const char* kSpecials[] = {"<pad>", "<bos>", "<eos>",
                                  "<unk>", "<tag-f>", "<tag-m>"};

Vocab Vocab::build(const std::vector<std::string>& words) {
  Vocab v;
  for (const char* s : kSpecials) v.tokens.emplace_back(s);
  for (const auto& w : words) {
    for (const char* s : kSpecials)
      if (w == s)
        throw ValidationError("vocab word collides with special token `" + w +
                              "`");
    v.tokens.push_back(w);
  }
  for (int i = 0; i < static_cast<int>(v.tokens.size()); ++i) {
    if (!v.index.emplace(v.tokens[i], i).second)
      throw ValidationError("duplicate vocab token `" + v.tokens[i] + "`");
  }
  return v;
}

int Vocab::id(const std::string& token) const {
  const auto it = index.find(token);
  return it == index.end() ? kUnk : it->second;
}

// ---------------------------------------------------------------------------
// Parameter plumbing
// ---------------------------------------------------------------------------

namespace {

template <class Params, class Tns>
void collect(Params& p, std::vector<std::pair<std::string, Tns*>>& out) {
  auto add = [&](const std::string& name, Tns& t) { out.emplace_back(name, &t); };
  add("token_emb", p.token_emb);
  add("gender_emb", p.gender_emb);
  add("pitch_proj", p.pitch_proj);
  for (size_t l = 0; l < p.enc.size(); ++l) {
    const std::string pre = "enc." + std::to_string(l) + ".";
    auto& e = p.enc[l];
    add(pre + "ln1.gamma", e.ln1.gamma);
    add(pre + "ln1.beta", e.ln1.beta);
    add(pre + "attn.wq", e.attn.wq);
    add(pre + "attn.wk", e.attn.wk);
    add(pre + "attn.wv", e.attn.wv);
    add(pre + "attn.wo", e.attn.wo);
    add(pre + "ln2.gamma", e.ln2.gamma);
    add(pre + "ln2.beta", e.ln2.beta);
    add(pre + "ffn.w1", e.ffn.w1);
    add(pre + "ffn.b1", e.ffn.b1);
    add(pre + "ffn.w2", e.ffn.w2);
    add(pre + "ffn.b2", e.ffn.b2);
  }
  for (size_t l = 0; l < p.dec.size(); ++l) {
    const std::string pre = "dec." + std::to_string(l) + ".";
    auto& d = p.dec[l];
    add(pre + "ln1.gamma", d.ln1.gamma);
    add(pre + "ln1.beta", d.ln1.beta);
    add(pre + "self.wq", d.self_attn.wq);
    add(pre + "self.wk", d.self_attn.wk);
    add(pre + "self.wv", d.self_attn.wv);
    add(pre + "self.wo", d.self_attn.wo);
    add(pre + "ln2.gamma", d.ln2.gamma);
    add(pre + "ln2.beta", d.ln2.beta);
    add(pre + "cross.wq", d.cross_attn.wq);
    add(pre + "cross.wk", d.cross_attn.wk);
    add(pre + "cross.wv", d.cross_attn.wv);
    add(pre + "cross.wo", d.cross_attn.wo);
    add(pre + "ln3.gamma", d.ln3.gamma);
    add(pre + "ln3.beta", d.ln3.beta);
    add(pre + "ffn.w1", d.ffn.w1);
    add(pre + "ffn.b1", d.ffn.b1);
    add(pre + "ffn.w2", d.ffn.w2);
    add(pre + "ffn.b2", d.ffn.b2);
  }
  add("enc_ln.gamma", p.enc_ln.gamma);
  add("enc_ln.beta", p.enc_ln.beta);
  add("dec_ln.gamma", p.dec_ln.gamma);
  add("dec_ln.beta", p.dec_ln.beta);
  add("w_out", p.w_out);
  add("b_out", p.b_out);
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> ToyModelParams::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect(*this, out);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ToyModelParams::named_tensors()
    const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  collect(*this, out);
  return out;
}

namespace {

void init_ln(LayerNormParams& p, int d) {
  p.gamma = Tensor(1, d);
  std::fill(p.gamma.v.begin(), p.gamma.v.end(), 1.0);
  p.beta = Tensor(1, d);
}

void fill_normal(Tensor& t, Xoshiro256& rng, double stddev) {
  for (auto& x : t.v) x = rng.normal(0.0, stddev);
}

void init_attn(AttnParams& p, int d, Xoshiro256& rng) {
  p.wq = Tensor(d, d);
  p.wk = Tensor(d, d);
  p.wv = Tensor(d, d);
  p.wo = Tensor(d, d);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  fill_normal(p.wq, rng, s);
  fill_normal(p.wk, rng, s);
  fill_normal(p.wv, rng, s);
  fill_normal(p.wo, rng, s);
}

void init_ffn(FfnParams& p, int d, int f, Xoshiro256& rng) {
  p.w1 = Tensor(d, f);
  p.b1 = Tensor(1, f);
  p.w2 = Tensor(f, d);
  p.b2 = Tensor(1, d);
  fill_normal(p.w1, rng, 1.0 / std::sqrt(static_cast<double>(d)));
  fill_normal(p.w2, rng, 1.0 / std::sqrt(static_cast<double>(f)));
}

}  // namespace

ToyModelParams init_params(const ToyConfig& cfg, const Vocab& vocab,
                           uint64_t seed) {
  if (cfg.model_dim % cfg.heads != 0)
    throw ValidationError("model_dim must be divisible by heads");
  Xoshiro256 rng(seed);
  ToyModelParams p;
  p.cfg = cfg;
  p.vocab = vocab;
  const int d = cfg.model_dim;

  p.token_emb = Tensor(vocab.size(), d);
  fill_normal(p.token_emb, rng, 0.05);
  p.gender_emb = Tensor(2, d);
  fill_normal(p.gender_emb, rng, 0.02);
  p.pitch_proj = Tensor(1, d);
  fill_normal(p.pitch_proj, rng, 0.05);

  p.enc.resize(cfg.layers);
  for (auto& layer : p.enc) {
    init_ln(layer.ln1, d);
    init_ln(layer.ln2, d);
    init_attn(layer.attn, d, rng);
    init_ffn(layer.ffn, d, cfg.ffn_dim, rng);
  }
  p.dec.resize(cfg.layers);
  for (auto& layer : p.dec) {
    init_ln(layer.ln1, d);
    init_ln(layer.ln2, d);
    init_ln(layer.ln3, d);
    init_attn(layer.self_attn, d, rng);
    init_attn(layer.cross_attn, d, rng);
    init_ffn(layer.ffn, d, cfg.ffn_dim, rng);
  }
  init_ln(p.enc_ln, d);
  init_ln(p.dec_ln, d);
  p.w_out = Tensor(d, vocab.size());
  fill_normal(p.w_out, rng, 1.0 / std::sqrt(static_cast<double>(d)));
  p.b_out = Tensor(1, vocab.size());
  return p;
}

ToyModelParams zeros_like(const ToyModelParams& like) {
  ToyModelParams z;
  z.cfg = like.cfg;
  z.vocab = like.vocab;
  z.strategy = like.strategy;
  z.token_emb = Tensor(like.token_emb.rows, like.token_emb.cols);
  z.gender_emb = Tensor(like.gender_emb.rows, like.gender_emb.cols);
  z.pitch_proj = Tensor(like.pitch_proj.rows, like.pitch_proj.cols);
  z.enc.resize(like.enc.size());
  z.dec.resize(like.dec.size());
  // Shape every tensor by walking both trees in lockstep.
  auto src = like.named_tensors();
  auto dst = z.named_tensors();
  for (size_t i = 0; i < src.size(); ++i)
    *dst[i].second = Tensor(src[i].second->rows, src[i].second->cols);
  return z;
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

namespace {

constexpr double kLnEps = 1e-5;

double positional(int t, int i, int d) {
  const double exponent = static_cast<double>(2 * (i / 2)) / d;
  const double freq = std::pow(10000.0, exponent);
  const double angle = static_cast<double>(t) / freq;
  return (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
}

struct LnCache {
  Tensor xhat;
  std::vector<double> rstd;
};

Tensor ln_fwd(const Tensor& x, const LayerNormParams& p, LnCache& c) {
  const int d = x.cols;
  Tensor y(x.rows, d);
  c.xhat = Tensor(x.rows, d);
  c.rstd.assign(x.rows, 0.0);
  for (int r = 0; r < x.rows; ++r) {
    const double* xr = x.row(r);
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += xr[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= d;
    const double rstd = 1.0 / std::sqrt(var + kLnEps);
    c.rstd[r] = rstd;
    double* xh = c.xhat.row(r);
    double* yr = y.row(r);
    for (int j = 0; j < d; ++j) {
      xh[j] = (xr[j] - mean) * rstd;
      yr[j] = p.gamma.v[j] * xh[j] + p.beta.v[j];
    }
  }
  return y;
}

void ln_bwd(const Tensor& dy, const LnCache& c, const LayerNormParams& p,
            LayerNormParams* gp, Tensor& dx) {
  const int d = dy.cols;
  for (int r = 0; r < dy.rows; ++r) {
    const double* dyr = dy.row(r);
    const double* xh = c.xhat.row(r);
    double m1 = 0.0, m2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const double dxh = dyr[j] * p.gamma.v[j];
      m1 += dxh;
      m2 += dxh * xh[j];
    }
    m1 /= d;
    m2 /= d;
    double* dxr = dx.row(r);
    for (int j = 0; j < d; ++j) {
      const double dxh = dyr[j] * p.gamma.v[j];
      dxr[j] += c.rstd[r] * (dxh - m1 - xh[j] * m2);
      if (gp) {
        gp->gamma.v[j] += dyr[j] * xh[j];
        gp->beta.v[j] += dyr[j];
      }
    }
  }
}

struct AttnCache {
  Tensor q, k, v;
  std::vector<Tensor> att;  // one Tq×Tk matrix per head
  Tensor ctx;
};

Tensor attn_fwd(const Tensor& xq, const Tensor& xkv, const AttnParams& p,
                bool causal, int heads, AttnCache& c) {
  const int d = xq.cols;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c.q = matmul(xq, p.wq);
  c.k = matmul(xkv, p.wk);
  c.v = matmul(xkv, p.wv);
  const int tq = xq.rows;
  const int tk = xkv.rows;
  c.att.assign(heads, Tensor(tq, tk));
  c.ctx = Tensor(tq, d);
  for (int h = 0; h < heads; ++h) {
    const int off = h * dh;
    Tensor& att = c.att[h];
    for (int i = 0; i < tq; ++i) {
      const double* qi = c.q.row(i) + off;
      const int limit = causal ? i + 1 : tk;
      double max_score = -std::numeric_limits<double>::infinity();
      std::vector<double> scores(static_cast<size_t>(limit));
      for (int j = 0; j < limit; ++j) {
        const double* kj = c.k.row(j) + off;
        double s = 0.0;
        for (int e = 0; e < dh; ++e) s += qi[e] * kj[e];
        s *= scale;
        scores[j] = s;
        max_score = std::max(max_score, s);
      }
      double denom = 0.0;
      for (int j = 0; j < limit; ++j) {
        scores[j] = std::exp(scores[j] - max_score);
        denom += scores[j];
      }
      double* att_row = att.row(i);
      for (int j = 0; j < limit; ++j) att_row[j] = scores[j] / denom;
      double* ctx_row = c.ctx.row(i) + off;
      for (int j = 0; j < limit; ++j) {
        const double a = att_row[j];
        const double* vj = c.v.row(j) + off;
        for (int e = 0; e < dh; ++e) ctx_row[e] += a * vj[e];
      }
    }
  }
  return matmul(c.ctx, p.wo);
}

// dxq/dxkv are accumulated; gp may be null (frozen check paths don't exist,
// it is always set during training).
void attn_bwd(const Tensor& dout, const Tensor& xq, const Tensor& xkv,
              const AttnParams& p, AttnParams* gp, bool causal, int heads,
              const AttnCache& c, Tensor& dxq, Tensor& dxkv) {
  const int d = xq.cols;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const int tq = xq.rows;
  const int tk = xkv.rows;

  Tensor dctx(tq, d);
  add_matmul_a_bt(dctx, dout, p.wo);
  if (gp) add_matmul_at_b(gp->wo, c.ctx, dout);

  Tensor dq(tq, d), dk(tk, d), dv(tk, d);
  for (int h = 0; h < heads; ++h) {
    const int off = h * dh;
    const Tensor& att = c.att[h];
    for (int i = 0; i < tq; ++i) {
      const int limit = causal ? i + 1 : tk;
      const double* att_row = att.row(i);
      const double* dctx_row = dctx.row(i) + off;
      // dA and the softmax Jacobian, row by row.
      std::vector<double> da(static_cast<size_t>(limit));
      double dot = 0.0;
      for (int j = 0; j < limit; ++j) {
        const double* vj = c.v.row(j) + off;
        double s = 0.0;
        for (int e = 0; e < dh; ++e) s += dctx_row[e] * vj[e];
        da[j] = s;
        dot += att_row[j] * s;
        double* dvj = dv.row(j) + off;
        for (int e = 0; e < dh; ++e) dvj[e] += att_row[j] * dctx_row[e];
      }
      const double* qi = c.q.row(i) + off;
      double* dqi = dq.row(i) + off;
      for (int j = 0; j < limit; ++j) {
        const double ds = att_row[j] * (da[j] - dot) * scale;
        const double* kj = c.k.row(j) + off;
        double* dkj = dk.row(j) + off;
        for (int e = 0; e < dh; ++e) {
          dqi[e] += ds * kj[e];
          dkj[e] += ds * qi[e];
        }
      }
    }
  }
  add_matmul_a_bt(dxq, dq, p.wq);
  add_matmul_a_bt(dxkv, dk, p.wk);
  add_matmul_a_bt(dxkv, dv, p.wv);
  if (gp) {
    add_matmul_at_b(gp->wq, xq, dq);
    add_matmul_at_b(gp->wk, xkv, dk);
    add_matmul_at_b(gp->wv, xkv, dv);
  }
}

struct FfnCache {
  Tensor h_pre;
  Tensor h;
};

Tensor ffn_fwd(const Tensor& x, const FfnParams& p, FfnCache& c) {
  c.h_pre = matmul(x, p.w1);
  for (int r = 0; r < c.h_pre.rows; ++r) {
    double* hr = c.h_pre.row(r);
    for (int j = 0; j < c.h_pre.cols; ++j) hr[j] += p.b1.v[j];
  }
  c.h = c.h_pre;
  for (auto& x_ : c.h.v) x_ = std::max(0.0, x_);
  Tensor y = matmul(c.h, p.w2);
  for (int r = 0; r < y.rows; ++r) {
    double* yr = y.row(r);
    for (int j = 0; j < y.cols; ++j) yr[j] += p.b2.v[j];
  }
  return y;
}

void ffn_bwd(const Tensor& dy, const Tensor& x, const FfnParams& p,
             FfnParams* gp, const FfnCache& c, Tensor& dx) {
  Tensor dh(c.h.rows, c.h.cols);
  add_matmul_a_bt(dh, dy, p.w2);
  if (gp) {
    add_matmul_at_b(gp->w2, c.h, dy);
    for (int r = 0; r < dy.rows; ++r)
      for (int j = 0; j < dy.cols; ++j) gp->b2.v[j] += dy.at(r, j);
  }
  for (size_t i = 0; i < dh.v.size(); ++i)
    if (c.h_pre.v[i] <= 0.0) dh.v[i] = 0.0;
  add_matmul_a_bt(dx, dh, p.w1);
  if (gp) {
    add_matmul_at_b(gp->w1, x, dh);
    for (int r = 0; r < dh.rows; ++r)
      for (int j = 0; j < dh.cols; ++j) gp->b1.v[j] += dh.at(r, j);
  }
}

struct EncLayerCache {
  Tensor x0, a, x1, b;
  LnCache ln1, ln2;
  AttnCache attn;
  FfnCache ffn;
};

struct DecLayerCache {
  Tensor x0, a, x1, b, x2, cc;
  LnCache ln1, ln2, ln3;
  AttnCache self_attn, cross_attn;
  FfnCache ffn;
};

struct EncoderCache {
  Tensor input;
  std::vector<EncLayerCache> layers;
  LnCache final_ln;
  Tensor out;
};

struct DecoderCache {
  Tensor input;
  std::vector<DecLayerCache> layers;
  LnCache final_ln;
  Tensor out;
};

void run_encoder(const ToyModelParams& p, const Tensor& input,
                 EncoderCache& cache) {
  cache.input = input;
  cache.layers.resize(p.enc.size());
  Tensor x = input;
  for (size_t l = 0; l < p.enc.size(); ++l) {
    EncLayerCache& lc = cache.layers[l];
    const EncLayerParams& lp = p.enc[l];
    lc.x0 = x;
    lc.a = ln_fwd(lc.x0, lp.ln1, lc.ln1);
    Tensor sa = attn_fwd(lc.a, lc.a, lp.attn, /*causal=*/false, p.cfg.heads,
                         lc.attn);
    lc.x1 = lc.x0;
    for (size_t i = 0; i < sa.v.size(); ++i) lc.x1.v[i] += sa.v[i];
    lc.b = ln_fwd(lc.x1, lp.ln2, lc.ln2);
    Tensor ff = ffn_fwd(lc.b, lp.ffn, lc.ffn);
    x = lc.x1;
    for (size_t i = 0; i < ff.v.size(); ++i) x.v[i] += ff.v[i];
  }
  cache.out = ln_fwd(x, p.enc_ln, cache.final_ln);
}

// Returns gradient w.r.t. the encoder input rows.
Tensor encoder_bwd(const ToyModelParams& p, const EncoderCache& cache,
                   const Tensor& dout, ToyModelParams* g) {
  Tensor dx(cache.input.rows, cache.input.cols);
  ln_bwd(dout, cache.final_ln, p.enc_ln, g ? &g->enc_ln : nullptr, dx);
  for (size_t l = p.enc.size(); l-- > 0;) {
    const EncLayerCache& lc = cache.layers[l];
    const EncLayerParams& lp = p.enc[l];
    EncLayerParams* gl = g ? &g->enc[l] : nullptr;
    // x2 = x1 + ffn(ln2(x1))
    Tensor db(lc.b.rows, lc.b.cols);
    ffn_bwd(dx, lc.b, lp.ffn, gl ? &gl->ffn : nullptr, lc.ffn, db);
    Tensor dx1 = dx;
    ln_bwd(db, lc.ln2, lp.ln2, gl ? &gl->ln2 : nullptr, dx1);
    // x1 = x0 + attn(ln1(x0))
    Tensor da(lc.a.rows, lc.a.cols);
    attn_bwd(dx1, lc.a, lc.a, lp.attn, gl ? &gl->attn : nullptr,
             /*causal=*/false, p.cfg.heads, lc.attn, da, da);
    dx = dx1;
    ln_bwd(da, lc.ln1, lp.ln1, gl ? &gl->ln1 : nullptr, dx);
  }
  return dx;
}

void run_decoder(const ToyModelParams& p, const Tensor& input,
                 const Tensor& enc_out, DecoderCache& cache) {
  cache.input = input;
  cache.layers.resize(p.dec.size());
  Tensor x = input;
  for (size_t l = 0; l < p.dec.size(); ++l) {
    DecLayerCache& lc = cache.layers[l];
    const DecLayerParams& lp = p.dec[l];
    lc.x0 = x;
    lc.a = ln_fwd(lc.x0, lp.ln1, lc.ln1);
    Tensor sa = attn_fwd(lc.a, lc.a, lp.self_attn, /*causal=*/true,
                         p.cfg.heads, lc.self_attn);
    lc.x1 = lc.x0;
    for (size_t i = 0; i < sa.v.size(); ++i) lc.x1.v[i] += sa.v[i];
    lc.b = ln_fwd(lc.x1, lp.ln2, lc.ln2);
    Tensor ca = attn_fwd(lc.b, enc_out, lp.cross_attn, /*causal=*/false,
                         p.cfg.heads, lc.cross_attn);
    lc.x2 = lc.x1;
    for (size_t i = 0; i < ca.v.size(); ++i) lc.x2.v[i] += ca.v[i];
    lc.cc = ln_fwd(lc.x2, lp.ln3, lc.ln3);
    Tensor ff = ffn_fwd(lc.cc, lp.ffn, lc.ffn);
    x = lc.x2;
    for (size_t i = 0; i < ff.v.size(); ++i) x.v[i] += ff.v[i];
  }
  cache.out = ln_fwd(x, p.dec_ln, cache.final_ln);
}

// Returns gradient w.r.t. decoder input; accumulates gradient w.r.t. encoder
// output into denc_out.
Tensor decoder_bwd(const ToyModelParams& p, const DecoderCache& cache,
                   const Tensor& enc_out, const Tensor& dout,
                   ToyModelParams* g, Tensor& denc_out) {
  Tensor dx(cache.input.rows, cache.input.cols);
  ln_bwd(dout, cache.final_ln, p.dec_ln, g ? &g->dec_ln : nullptr, dx);
  for (size_t l = p.dec.size(); l-- > 0;) {
    const DecLayerCache& lc = cache.layers[l];
    const DecLayerParams& lp = p.dec[l];
    DecLayerParams* gl = g ? &g->dec[l] : nullptr;
    // x3 = x2 + ffn(ln3(x2))
    Tensor dcc(lc.cc.rows, lc.cc.cols);
    ffn_bwd(dx, lc.cc, lp.ffn, gl ? &gl->ffn : nullptr, lc.ffn, dcc);
    Tensor dx2 = dx;
    ln_bwd(dcc, lc.ln3, lp.ln3, gl ? &gl->ln3 : nullptr, dx2);
    // x2 = x1 + cross(ln2(x1), enc_out)
    Tensor db(lc.b.rows, lc.b.cols);
    attn_bwd(dx2, lc.b, enc_out, lp.cross_attn,
             gl ? &gl->cross_attn : nullptr, /*causal=*/false, p.cfg.heads,
             lc.cross_attn, db, denc_out);
    Tensor dx1 = dx2;
    ln_bwd(db, lc.ln2, lp.ln2, gl ? &gl->ln2 : nullptr, dx1);
    // x1 = x0 + self(ln1(x0))
    Tensor da(lc.a.rows, lc.a.cols);
    attn_bwd(dx1, lc.a, lc.a, lp.self_attn, gl ? &gl->self_attn : nullptr,
             /*causal=*/true, p.cfg.heads, lc.self_attn, da, da);
    dx = dx1;
    ln_bwd(da, lc.ln1, lp.ln1, gl ? &gl->ln1 : nullptr, dx);
  }
  return dx;
}

int gender_row(GenderTag g) { return g == GenderTag::F ? 0 : 1; }

}  // namespace

// ---------------------------------------------------------------------------
// Input construction
// ---------------------------------------------------------------------------

Tensor encode_inputs(const ToyModelParams& params,
                     const std::vector<int>& src_ids, double pitch,
                     Strategy strategy, std::optional<GenderTag> tag) {
  if ((strategy != Strategy::None) != tag.has_value())
    throw ValidationError("encode_inputs: tag must be given iff strategy is "
                          "gender-aware");
  const int d = params.cfg.model_dim;
  Tensor x(static_cast<int>(src_ids.size()), d);
  for (int t = 0; t < x.rows; ++t) {
    const double* emb = params.token_emb.row(src_ids[t]);
    double* xr = x.row(t);
    for (int j = 0; j < d; ++j)
      xr[j] = emb[j] + pitch * params.pitch_proj.v[j] + positional(t, j, d);
    if (strategy == Strategy::EncMerge) {
      const double* ge = params.gender_emb.row(gender_row(*tag));
      for (int j = 0; j < d; ++j) xr[j] += ge[j];
    }
  }
  return x;
}

Tensor decoder_inputs(const ToyModelParams& params,
                      const std::vector<int>& prefix_ids, Strategy strategy,
                      std::optional<GenderTag> tag) {
  if ((strategy != Strategy::None) != tag.has_value())
    throw ValidationError("decoder_inputs: tag must be given iff strategy is "
                          "gender-aware");
  const int d = params.cfg.model_dim;
  Tensor x(static_cast<int>(prefix_ids.size()), d);
  for (int t = 0; t < x.rows; ++t) {
    int id = prefix_ids[t];
    if (t == 0 && strategy == Strategy::DecPrep)
      id = params.vocab.tag_id(*tag);
    const double* emb = params.token_emb.row(id);
    double* xr = x.row(t);
    for (int j = 0; j < d; ++j) xr[j] = emb[j] + positional(t, j, d);
    if (strategy == Strategy::DecMerge) {
      const double* ge = params.gender_emb.row(gender_row(*tag));
      for (int j = 0; j < d; ++j) xr[j] += ge[j];
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

namespace {

struct Sample {
  std::vector<int> src;
  std::vector<int> prefix;   // BOS-prefixed decoder input ids
  std::vector<int> targets;  // per-position targets, PAD = masked
  double pitch = 0.0;
  std::optional<GenderTag> tag;
};

Sample make_sample(const ToyModelParams& p, const ManifestRow& row,
                   Strategy strategy) {
  Sample s;
  for (const auto& tok : split_ws(row.src)) s.src.push_back(p.vocab.id(tok));
  std::vector<int> tgt;
  for (const auto& tok : split_ws(row.tgt)) tgt.push_back(p.vocab.id(tok));
  if (s.src.empty())
    throw ValidationError("row `" + row.id + "`: empty source");
  if (static_cast<int>(s.src.size()) > p.cfg.max_len ||
      static_cast<int>(tgt.size()) + 1 > p.cfg.max_len)
    throw ValidationError("row `" + row.id + "`: sequence exceeds max_len");
  s.prefix.push_back(Vocab::kBos);
  s.prefix.insert(s.prefix.end(), tgt.begin(), tgt.end());
  const bool all_pad =
      !tgt.empty() &&
      std::all_of(tgt.begin(), tgt.end(), [](int t) { return t == Vocab::kPad; });
  s.targets = tgt;
  s.targets.push_back(all_pad ? Vocab::kPad : Vocab::kEos);
  s.pitch = row.pitch.value_or(0.0);
  if (strategy != Strategy::None) {
    if (!row.gender)
      throw ValidationError("row `" + row.id +
                            "`: gender required for gender-aware strategies");
    s.tag = *row.gender;
  }
  return s;
}

// Forward plus (optionally) backward for one sample; gradients of the summed
// cross entropy are accumulated into g.
BatchLoss sample_loss(const ToyModelParams& p, const Sample& s,
                      Strategy strategy, ToyModelParams* g) {
  EncoderCache enc_cache;
  run_encoder(p, encode_inputs(p, s.src, s.pitch, strategy, s.tag), enc_cache);
  DecoderCache dec_cache;
  run_decoder(p, decoder_inputs(p, s.prefix, strategy, s.tag), enc_cache.out,
              dec_cache);
  Tensor logits = matmul(dec_cache.out, p.w_out);
  for (int t = 0; t < logits.rows; ++t)
    for (int j = 0; j < logits.cols; ++j)
      logits.at(t, j) += p.b_out.v[j];

  BatchLoss result;
  Tensor dlogits(logits.rows, logits.cols);
  for (int t = 0; t < logits.rows; ++t) {
    const int target = s.targets[t];
    if (target == Vocab::kPad) continue;
    const double* lr = logits.row(t);
    double max_logit = lr[0];
    for (int j = 1; j < logits.cols; ++j) max_logit = std::max(max_logit, lr[j]);
    double denom = 0.0;
    for (int j = 0; j < logits.cols; ++j) denom += std::exp(lr[j] - max_logit);
    const double log_denom = std::log(denom) + max_logit;
    result.loss_sum += log_denom - lr[target];
    ++result.tokens;
    if (g) {
      double* dl = dlogits.row(t);
      for (int j = 0; j < logits.cols; ++j)
        dl[j] = std::exp(lr[j] - log_denom);
      dl[target] -= 1.0;
    }
  }
  if (!g) return result;

  Tensor ddec_out(dec_cache.out.rows, dec_cache.out.cols);
  add_matmul_a_bt(ddec_out, dlogits, p.w_out);
  add_matmul_at_b(g->w_out, dec_cache.out, dlogits);
  for (int t = 0; t < dlogits.rows; ++t)
    for (int j = 0; j < dlogits.cols; ++j) g->b_out.v[j] += dlogits.at(t, j);

  Tensor denc_out(enc_cache.out.rows, enc_cache.out.cols);
  Tensor ddec_in =
      decoder_bwd(p, dec_cache, enc_cache.out, ddec_out, g, denc_out);
  Tensor denc_in = encoder_bwd(p, enc_cache, denc_out, g);

  // Decoder input embeddings.
  const int d = p.cfg.model_dim;
  for (int t = 0; t < ddec_in.rows; ++t) {
    int id = s.prefix[t];
    if (t == 0 && strategy == Strategy::DecPrep) id = p.vocab.tag_id(*s.tag);
    double* ge = g->token_emb.row(id);
    const double* dr = ddec_in.row(t);
    for (int j = 0; j < d; ++j) ge[j] += dr[j];
    if (strategy == Strategy::DecMerge) {
      double* gg = g->gender_emb.row(gender_row(*s.tag));
      for (int j = 0; j < d; ++j) gg[j] += dr[j];
    }
  }
  // Encoder input embeddings, pitch projection, EncMerge gender embedding.
  for (int t = 0; t < denc_in.rows; ++t) {
    double* ge = g->token_emb.row(s.src[t]);
    const double* dr = denc_in.row(t);
    for (int j = 0; j < d; ++j) {
      ge[j] += dr[j];
      g->pitch_proj.v[j] += s.pitch * dr[j];
    }
    if (strategy == Strategy::EncMerge) {
      double* gg = g->gender_emb.row(gender_row(*s.tag));
      for (int j = 0; j < d; ++j) gg[j] += dr[j];
    }
  }
  return result;
}

}  // namespace

BatchLoss loss_and_grads(const ToyModelParams& params,
                         const std::vector<const ManifestRow*>& batch,
                         Strategy strategy, ToyModelParams* grads) {
  BatchLoss total;
  for (const ManifestRow* row : batch) {
    const Sample s = make_sample(params, *row, strategy);
    const BatchLoss l = sample_loss(params, s, strategy, grads);
    total.loss_sum += l.loss_sum;
    total.tokens += l.tokens;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

struct AdamState {
  ToyModelParams m;
  ToyModelParams v;
  long step = 0;
};

void adam_step(ToyModelParams& params, ToyModelParams& grads, AdamState& state,
               const Hyper& h, double grad_scale) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  auto ps = params.named_tensors();
  auto gs = grads.named_tensors();
  auto ms = state.m.named_tensors();
  auto vs = state.v.named_tensors();
  for (size_t i = 0; i < ps.size(); ++i) {
    auto& p = ps[i].second->v;
    auto& gv = gs[i].second->v;
    auto& mv = ms[i].second->v;
    auto& vv = vs[i].second->v;
    for (size_t j = 0; j < p.size(); ++j) {
      const double grad = gv[j] * grad_scale;
      mv[j] = h.beta1 * mv[j] + (1.0 - h.beta1) * grad;
      vv[j] = h.beta2 * vv[j] + (1.0 - h.beta2) * grad * grad;
      p[j] -= h.lr * (mv[j] / bc1) / (std::sqrt(vv[j] / bc2) + h.adam_eps);
    }
  }
}

}  // namespace

void train(ToyModelParams& params, const std::vector<ManifestRow>& manifest,
           Strategy strategy, const Hyper& hyper, const BatchPlan* plan,
           TrainLog* log) {
  if (manifest.empty()) throw ValidationError("train: empty manifest");
  if (hyper.epochs <= 0) throw ValidationError("train: epochs must be > 0");
  if (hyper.batch_size <= 0)
    throw ValidationError("train: batch_size must be > 0");

  params.strategy = strategy;
  std::unordered_map<std::string, const ManifestRow*> by_id;
  for (const auto& row : manifest) by_id[row.id] = &row;

  AdamState state{zeros_like(params), zeros_like(params), 0};
  ToyModelParams grads = zeros_like(params);
  if (log) log->lr_used = hyper.lr;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::vector<std::vector<const ManifestRow*>> batches;
    if (plan) {
      // Epoch 0 follows the given plan; later epochs reshuffle with a
      // seed derived from it.
      BatchPlan epoch_plan =
          epoch == 0 ? *plan
                     : schedule_balanced_batches(
                           manifest, hyper.batch_size,
                           plan->seed + static_cast<uint64_t>(epoch));
      for (const auto& ids : epoch_plan.batches) {
        std::vector<const ManifestRow*> batch;
        for (const auto& id : ids) {
          const auto it = by_id.find(id);
          if (it == by_id.end())
            throw ValidationError("train: batch plan id `" + id +
                                  "` not in manifest");
          batch.push_back(it->second);
        }
        batches.push_back(std::move(batch));
      }
    } else {
      std::vector<size_t> order(manifest.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      Xoshiro256 rng(hyper.seed + static_cast<uint64_t>(epoch));
      rng.shuffle(order);
      for (size_t start = 0; start < order.size();
           start += static_cast<size_t>(hyper.batch_size)) {
        std::vector<const ManifestRow*> batch;
        const size_t end = std::min(
            order.size(), start + static_cast<size_t>(hyper.batch_size));
        for (size_t i = start; i < end; ++i)
          batch.push_back(&manifest[order[i]]);
        batches.push_back(std::move(batch));
      }
    }

    double epoch_loss = 0.0;
    long epoch_tokens = 0;
    for (const auto& batch : batches) {
      for (auto& [name, t] : grads.named_tensors()) t->zero();
      const BatchLoss l = loss_and_grads(params, batch, strategy, &grads);
      if (!std::isfinite(l.loss_sum))
        throw ValidationError("train: non-finite loss at epoch " +
                              std::to_string(epoch));
      if (l.tokens == 0) continue;
      epoch_loss += l.loss_sum;
      epoch_tokens += l.tokens;
      adam_step(params, grads, state, hyper,
                1.0 / static_cast<double>(l.tokens));
    }
    if (log)
      log->epoch_losses.push_back(
          epoch_tokens > 0 ? epoch_loss / static_cast<double>(epoch_tokens)
                           : 0.0);
  }
}

void finetune_specialized(ToyModelParams& params,
                          const std::vector<ManifestRow>& manifest,
                          const Hyper& base_hyper, TrainLog* log) {
  if (manifest.empty())
    throw ValidationError("finetune_specialized: empty manifest");
  std::optional<GenderTag> gender;
  for (const auto& row : manifest) {
    if (!row.gender)
      throw ValidationError("finetune_specialized: row `" + row.id +
                            "` has no gender");
    if (gender && *gender != *row.gender)
      throw ValidationError("finetune_specialized: mixed-gender manifest");
    gender = *row.gender;
  }
  Hyper h = base_hyper;
  h.lr = base_hyper.lr * 0.1;
  train(params, manifest, Strategy::None, h, nullptr, log);
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

namespace {

Tensor decode_logits_last(const ToyModelParams& p, const Tensor& enc_out,
                          const std::vector<int>& prefix, Strategy strategy,
                          std::optional<GenderTag> tag) {
  DecoderCache dec_cache;
  run_decoder(p, decoder_inputs(p, prefix, strategy, tag), enc_out, dec_cache);
  const int last = dec_cache.out.rows - 1;
  Tensor logits(1, p.vocab.size());
  for (int j = 0; j < p.vocab.size(); ++j) {
    double acc = p.b_out.v[j];
    for (int e = 0; e < p.cfg.model_dim; ++e)
      acc += dec_cache.out.at(last, e) * p.w_out.at(e, j);
    logits.v[j] = acc;
  }
  return logits;
}

}  // namespace

std::vector<std::string> translate(const ToyModelParams& params,
                                   const std::vector<std::string>& src_tokens,
                                   double pitch, Strategy strategy,
                                   std::optional<GenderTag> tag) {
  std::vector<int> src;
  for (const auto& tok : src_tokens) src.push_back(params.vocab.id(tok));
  if (src.empty()) return {};
  EncoderCache enc_cache;
  run_encoder(params, encode_inputs(params, src, pitch, strategy, tag),
              enc_cache);

  const size_t max_steps = 2 * src.size() + 5;
  std::vector<int> prefix = {Vocab::kBos};
  std::vector<std::string> out;
  for (size_t step = 0; step < max_steps; ++step) {
    const Tensor logits =
        decode_logits_last(params, enc_cache.out, prefix, strategy, tag);
    int best = 0;
    for (int j = 1; j < params.vocab.size(); ++j)
      if (logits.v[j] > logits.v[best]) best = j;
    if (best == Vocab::kEos) break;
    out.push_back(params.vocab.tokens[best]);
    prefix.push_back(best);
  }
  return out;
}

std::vector<double> next_token_distribution(
    const ToyModelParams& params, const std::vector<std::string>& src_tokens,
    double pitch, Strategy strategy, std::optional<GenderTag> tag,
    const std::vector<std::string>& prefix_tokens) {
  std::vector<int> src;
  for (const auto& tok : src_tokens) src.push_back(params.vocab.id(tok));
  EncoderCache enc_cache;
  run_encoder(params, encode_inputs(params, src, pitch, strategy, tag),
              enc_cache);
  std::vector<int> prefix = {Vocab::kBos};
  for (const auto& tok : prefix_tokens) prefix.push_back(params.vocab.id(tok));
  const Tensor logits =
      decode_logits_last(params, enc_cache.out, prefix, strategy, tag);
  double max_logit = logits.v[0];
  for (const double l : logits.v) max_logit = std::max(max_logit, l);
  double denom = 0.0;
  std::vector<double> probs(logits.v.size());
  for (size_t j = 0; j < probs.size(); ++j) {
    probs[j] = std::exp(logits.v[j] - max_logit);
    denom += probs[j];
  }
  for (auto& pr : probs) pr /= denom;
  return probs;
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

double grad_check(const ToyConfig& cfg, uint64_t seed, int n_coords) {
  Vocab vocab = Vocab::build({"w0", "w1", "w2", "t0", "t1", "t2"});
  ToyModelParams params = init_params(cfg, vocab, seed);

  std::vector<ManifestRow> rows(2);
  rows[0] = {"g0", "talk", "w0 w1 w2", "t0 t1", GenderTag::F, 0.72};
  rows[1] = {"g1", "talk", "w1 w2", "t2 t0 t1", GenderTag::M, 0.31};
  std::vector<const ManifestRow*> batch = {&rows[0], &rows[1]};
  const Strategy strategy = Strategy::EncMerge;

  ToyModelParams grads = zeros_like(params);
  loss_and_grads(params, batch, strategy, &grads);

  auto ps = params.named_tensors();
  auto gs = grads.named_tensors();
  size_t total = 0;
  for (const auto& [name, t] : ps) total += t->size();

  Xoshiro256 rng(seed ^ 0xABCDEF12345ULL);
  const double step = 1e-4;
  double max_rel = 0.0;
  for (int c = 0; c < n_coords; ++c) {
    size_t flat = static_cast<size_t>(rng.below(total));
    size_t ti = 0;
    while (flat >= ps[ti].second->size()) {
      flat -= ps[ti].second->size();
      ++ti;
    }
    double& coord = ps[ti].second->v[flat];
    const double saved = coord;
    coord = saved + step;
    const double loss_hi = loss_and_grads(params, batch, strategy, nullptr).loss_sum;
    coord = saved - step;
    const double loss_lo = loss_and_grads(params, batch, strategy, nullptr).loss_sum;
    coord = saved;
    const double numeric = (loss_hi - loss_lo) / (2.0 * step);
    const double analytic = gs[ti].second->v[flat];
    // Tiny true gradients are compared on an absolute floor so that
    // finite-difference noise does not dominate the ratio.
    const double rel = std::fabs(analytic - numeric) /
                       std::max(std::fabs(analytic) + std::fabs(numeric), 1e-4);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace genst::toy
