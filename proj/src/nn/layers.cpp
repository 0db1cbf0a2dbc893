#include "pushgrasp/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace pushgrasp::nn {

namespace {

Tape::Var activate(Tape& t, Tape::Var x, Activation act) {
  switch (act) {
    case Activation::none: return x;
    case Activation::relu: return t.relu(x);
    case Activation::tanh: return t.tanh_act(x);
  }
  throw std::logic_error("unknown activation");
}

}  // namespace

Dense Dense::create(ParamStore& store, const std::string& prefix, int in, int out, Init init,
                    Rng& rng, double gain) {
  Dense d;
  d.in = in;
  d.out = out;
  d.w = prefix + "/w";
  d.b = prefix + "/b";
  store.create(d.w, {in, out});
  store.create(d.b, {out});
  switch (init) {
    case Init::uniform_fan_in: store.init_uniform_fan_in(d.w, rng); break;
    case Init::orthogonal: store.init_orthogonal(d.w, rng, gain); break;
    case Init::zeros: break;
  }
  return d;
}

Tape::Var Dense::operator()(Tape& t, ParamStore& store, Tape::Var x) const {
  return t.add_row_broadcast(t.matmul(x, t.param(store, w)), t.param(store, b));
}

LayerNorm LayerNorm::create(ParamStore& store, const std::string& prefix, int dim) {
  LayerNorm ln;
  ln.dim = dim;
  ln.gain = prefix + "/gain";
  ln.bias = prefix + "/bias";
  store.create(ln.gain, {dim});
  store.init_constant(ln.gain, 1.0);
  store.create(ln.bias, {dim});
  return ln;
}

Tape::Var LayerNorm::operator()(Tape& t, ParamStore& store, Tape::Var x) const {
  return t.layer_norm_rows(x, t.param(store, gain), t.param(store, bias));
}

Mlp Mlp::create(ParamStore& store, const std::string& prefix, const std::vector<int>& sizes,
                Activation hidden, Activation output, Init init, Rng& rng, double head_gain) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output sizes");
  Mlp m;
  m.hidden_act = hidden;
  m.output_act = output;
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    bool last = i + 2 == sizes.size();
    double gain = last ? head_gain : std::sqrt(2.0);
    m.layers.push_back(Dense::create(store, prefix + "/fc" + std::to_string(i), sizes[i],
                                     sizes[i + 1], init, rng, gain));
  }
  return m;
}

Tape::Var Mlp::operator()(Tape& t, ParamStore& store, Tape::Var x) const {
  for (size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](t, store, x);
    x = activate(t, x, i + 1 == layers.size() ? output_act : hidden_act);
  }
  return x;
}

int64_t mlp_parameter_count(const std::vector<int>& sizes) {
  int64_t n = 0;
  for (size_t i = 0; i + 1 < sizes.size(); ++i)
    n += static_cast<int64_t>(sizes[i]) * sizes[i + 1] + sizes[i + 1];
  return n;
}

MultiHeadAttention MultiHeadAttention::create(ParamStore& store, const std::string& prefix,
                                              int d_model, int n_heads, Rng& rng) {
  if (d_model % n_heads != 0)
    throw std::invalid_argument("attention: d_model must be divisible by n_heads");
  MultiHeadAttention a;
  a.d_model = d_model;
  a.n_heads = n_heads;
  a.wq = Dense::create(store, prefix + "/q", d_model, d_model, Init::uniform_fan_in, rng);
  a.wk = Dense::create(store, prefix + "/k", d_model, d_model, Init::uniform_fan_in, rng);
  a.wv = Dense::create(store, prefix + "/v", d_model, d_model, Init::uniform_fan_in, rng);
  a.wo = Dense::create(store, prefix + "/o", d_model, d_model, Init::uniform_fan_in, rng);
  return a;
}

MultiHeadAttention::Out MultiHeadAttention::forward(Tape& t, ParamStore& store, Tape::Var x) const {
  int dh = d_model / n_heads;
  Tape::Var q = wq(t, store, x);
  Tape::Var k = wk(t, store, x);
  Tape::Var v = wv(t, store, x);
  std::vector<Tape::Var> heads, attns;
  for (int h = 0; h < n_heads; ++h) {
    Tape::Var qh = t.col_slice(q, h * dh, dh);
    Tape::Var kh = t.col_slice(k, h * dh, dh);
    Tape::Var vh = t.col_slice(v, h * dh, dh);
    Tape::Var scores = t.scale(t.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
    Tape::Var attn = t.softmax_rows(scores);
    attns.push_back(attn);
    heads.push_back(t.matmul(attn, vh));
  }
  Tape::Var cat = t.concat_cols(heads);
  return {wo(t, store, cat), std::move(attns)};
}

TransformerLayer TransformerLayer::create(ParamStore& store, const std::string& prefix, int d_model,
                                          int n_heads, int d_ff, Rng& rng) {
  TransformerLayer l;
  l.mha = MultiHeadAttention::create(store, prefix + "/mha", d_model, n_heads, rng);
  l.ff1 = Dense::create(store, prefix + "/ff1", d_model, d_ff, Init::uniform_fan_in, rng);
  l.ff2 = Dense::create(store, prefix + "/ff2", d_ff, d_model, Init::uniform_fan_in, rng);
  l.ln1 = LayerNorm::create(store, prefix + "/ln1", d_model);
  l.ln2 = LayerNorm::create(store, prefix + "/ln2", d_model);
  return l;
}

Tape::Var TransformerLayer::operator()(Tape& t, ParamStore& store, Tape::Var x) const {
  Tape::Var attn = mha.forward(t, store, x).out;
  x = ln1(t, store, t.add(x, attn));
  Tape::Var ff = ff2(t, store, t.relu(ff1(t, store, x)));
  return ln2(t, store, t.add(x, ff));
}

TransformerEncoder TransformerEncoder::create(ParamStore& store, const std::string& prefix,
                                              int seq_len, int d_model, int n_heads, int n_layers,
                                              int d_ff, Rng& rng) {
  TransformerEncoder e;
  e.seq_len = seq_len;
  e.d_model = d_model;
  e.n_heads = n_heads;
  e.pos_enc = prefix + "/pos_enc";
  store.create(e.pos_enc, {seq_len, d_model});
  for (int64_t i = 0; i < store.get(e.pos_enc).size(); ++i)
    store.get(e.pos_enc).v[i] = 0.01 * rng.normal();
  for (int i = 0; i < n_layers; ++i)
    e.layers.push_back(
        TransformerLayer::create(store, prefix + "/layer" + std::to_string(i), d_model, n_heads, d_ff, rng));
  return e;
}

Tape::Var TransformerEncoder::operator()(Tape& t, ParamStore& store, Tape::Var x) const {
  x = t.add(x, t.param(store, pos_enc));
  for (const auto& layer : layers) x = layer(t, store, x);
  return x;
}

ResidualBlock ResidualBlock::create(ParamStore& store, const std::string& prefix, int dim, Rng& rng) {
  ResidualBlock b;
  b.fc1 = Dense::create(store, prefix + "/fc1", dim, dim, Init::uniform_fan_in, rng);
  b.fc2 = Dense::create(store, prefix + "/fc2", dim, dim, Init::uniform_fan_in, rng);
  b.ln = LayerNorm::create(store, prefix + "/ln", dim);
  return b;
}

Tape::Var ResidualBlock::operator()(Tape& t, ParamStore& store, Tape::Var x) const {
  Tape::Var h = fc2(t, store, t.relu(fc1(t, store, x)));
  return ln(t, store, t.add(x, h));
}

}  // namespace pushgrasp::nn
