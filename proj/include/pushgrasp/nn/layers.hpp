#ifndef PUSHGRASP_NN_LAYERS_HPP_
#define PUSHGRASP_NN_LAYERS_HPP_

#include <string>
#include <vector>

#include "pushgrasp/nn/tape.hpp"

namespace pushgrasp::nn {

enum class Init { uniform_fan_in, orthogonal, zeros };
enum class Activation { none, relu, tanh };

// Layers hold parameter names; values live in a ParamStore so checkpointing
// and the optimizer see everything uniformly.
struct Dense {
  std::string w, b;
  int in = 0, out = 0;

  static Dense create(ParamStore& store, const std::string& prefix, int in, int out, Init init,
                      Rng& rng, double gain = 1.0);
  Tape::Var operator()(Tape& t, ParamStore& store, Tape::Var x) const;
};

struct LayerNorm {
  std::string gain, bias;
  int dim = 0;

  static LayerNorm create(ParamStore& store, const std::string& prefix, int dim);
  Tape::Var operator()(Tape& t, ParamStore& store, Tape::Var x) const;
};

struct Mlp {
  std::vector<Dense> layers;
  Activation hidden_act = Activation::relu;
  Activation output_act = Activation::none;

  // sizes = {in, h1, ..., out}
  static Mlp create(ParamStore& store, const std::string& prefix, const std::vector<int>& sizes,
                    Activation hidden, Activation output, Init init, Rng& rng,
                    double head_gain = 1.0);
  Tape::Var operator()(Tape& t, ParamStore& store, Tape::Var x) const;
};

// Parameter count of an MLP with bias terms: sum(n_i*n_{i+1} + n_{i+1}).
int64_t mlp_parameter_count(const std::vector<int>& sizes);

struct MultiHeadAttention {
  Dense wq, wk, wv, wo;
  int d_model = 0, n_heads = 0;

  static MultiHeadAttention create(ParamStore& store, const std::string& prefix, int d_model,
                                   int n_heads, Rng& rng);
  struct Out {
    Tape::Var out;
    std::vector<Tape::Var> attention;  // per head, rows sum to 1
  };
  Out forward(Tape& t, ParamStore& store, Tape::Var x) const;
};

struct TransformerLayer {
  MultiHeadAttention mha;
  Dense ff1, ff2;
  LayerNorm ln1, ln2;

  static TransformerLayer create(ParamStore& store, const std::string& prefix, int d_model,
                                 int n_heads, int d_ff, Rng& rng);
  Tape::Var operator()(Tape& t, ParamStore& store, Tape::Var x) const;
};

// Stack of encoder layers plus learnable positional encodings added to the
// input sequence [T, d_model].
struct TransformerEncoder {
  std::string pos_enc;
  std::vector<TransformerLayer> layers;
  int seq_len = 0, d_model = 0, n_heads = 0;

  static TransformerEncoder create(ParamStore& store, const std::string& prefix, int seq_len,
                                   int d_model, int n_heads, int n_layers, int d_ff, Rng& rng);
  Tape::Var operator()(Tape& t, ParamStore& store, Tape::Var x) const;
  // Per-layer attention matrices from the last forward are not retained; use
  // layer.mha.forward directly when tests need them.
};

// Pre-activation residual block: LN(x + W2 relu(W1 x)).
struct ResidualBlock {
  Dense fc1, fc2;
  LayerNorm ln;

  static ResidualBlock create(ParamStore& store, const std::string& prefix, int dim, Rng& rng);
  Tape::Var operator()(Tape& t, ParamStore& store, Tape::Var x) const;
};

}  // namespace pushgrasp::nn

#endif  // PUSHGRASP_NN_LAYERS_HPP_
