#pragma once

#include <vector>

#include "labelnet/params.hpp"
#include "labelnet/tensor.hpp"

namespace labelnet {

struct EncoderConfig {
  int vocab_size = 0;
  int d_p = 64;
  int layers = 2;  // L
  int heads = 2;
  int n_max = 64;
  int ff_mult = 2;
  std::vector<int> kernel_sizes = {1, 2, 3};
  bool use_positions = true;
  bool alpha_softmax = true;  // normalize layer-mix weights with softmax
  int mix_layers = 0;         // top layers joining the weighted sum; 0 = all

  int mix_count() const { return mix_layers > 0 ? mix_layers : layers; }
  void validate() const;
};

// Token ids padded with PAD at the tail; position 0 is always CLS.
struct TokenSequence {
  std::vector<int> ids;
  int real_len = 0;

  int padded_len() const { return static_cast<int>(ids.size()); }
  std::vector<bool> mask() const;
};

struct TransformerLayerIds {
  int wq, bq, wk, bk, wv, bv, wo, bo;
  int ln1_g, ln1_b;
  int w1, b1, w2, b2;
  int ln2_g, ln2_b;
};

struct EncoderIds {
  int tok_emb = -1;
  int pos_emb = -1;
  std::vector<TransformerLayerIds> layers;
  int mix_raw = -1;  // raw layer weights a_1..a_M
  std::vector<int> conv_w, conv_b;
  int fuse_w = -1, fuse_b = -1;
};

EncoderIds make_encoder_params(ParamStore& store, const EncoderConfig& cfg,
                               std::mt19937_64& rng);

struct EncodeOut {
  Tensor H;    // padded_len x d_p; pad rows are exact zeros
  Tensor v_g;  // d_p, CLS row of the final layer
  int real_len = 0;
};

// Transformer encoding with per-layer weighted sum. Pads are stripped
// before any computation, so they cannot influence attention or pooling.
EncodeOut encode_text(const Binding& P, const EncoderIds& ids, const EncoderConfig& cfg,
                      const TokenSequence& seq);

// CNN local encoding: per kernel size convolve (same padding) over the
// real positions, max+avg pool, concatenate all pooled vectors in kernel
// order, then affine+ReLU down to d_p.
Tensor local_encode(const Binding& P, const EncoderIds& ids, const EncoderConfig& cfg,
                    const Tensor& H, int real_len);

// v = [v_g; v_l]
Tensor fuse(const Tensor& v_g, const Tensor& v_l);

}  // namespace labelnet
