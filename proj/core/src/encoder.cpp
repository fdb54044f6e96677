#include "labelnet/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace labelnet {

void EncoderConfig::validate() const {
  if (vocab_size < 4) throw std::invalid_argument("encoder: vocab_size must cover reserved ids");
  if (d_p < 1 || layers < 1 || heads < 1 || n_max < 1 || ff_mult < 1)
    throw std::invalid_argument("encoder: dimensions must be positive");
  if (d_p % heads != 0)
    throw std::invalid_argument("encoder: d_p " + std::to_string(d_p) +
                                " not divisible by heads " + std::to_string(heads));
  if (kernel_sizes.empty()) throw std::invalid_argument("encoder: kernel_sizes empty");
  for (int k : kernel_sizes)
    if (k < 1) throw std::invalid_argument("encoder: kernel width must be >= 1");
  if (mix_layers < 0 || mix_layers > layers)
    throw std::invalid_argument("encoder: mix_layers out of range");
}

std::vector<bool> TokenSequence::mask() const {
  std::vector<bool> m(ids.size(), false);
  for (int i = 0; i < real_len; ++i) m[static_cast<std::size_t>(i)] = true;
  return m;
}

EncoderIds make_encoder_params(ParamStore& store, const EncoderConfig& cfg,
                               std::mt19937_64& rng) {
  cfg.validate();
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.d_p));
  const int d = cfg.d_p;
  const int ff = cfg.ff_mult * d;
  const auto g = ParamGroup::kEncoder;

  EncoderIds ids;
  ids.tok_emb = store.add_uniform("enc.tok_emb", {cfg.vocab_size, d}, bound, g, rng);
  ids.pos_emb = store.add_uniform("enc.pos_emb", {cfg.n_max, d}, bound, g, rng);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "enc.layer" + std::to_string(l) + ".";
    TransformerLayerIds t;
    t.wq = store.add_uniform(p + "wq", {d, d}, bound, g, rng);
    t.bq = store.add_zeros(p + "bq", {d}, g);
    t.wk = store.add_uniform(p + "wk", {d, d}, bound, g, rng);
    t.bk = store.add_zeros(p + "bk", {d}, g);
    t.wv = store.add_uniform(p + "wv", {d, d}, bound, g, rng);
    t.bv = store.add_zeros(p + "bv", {d}, g);
    t.wo = store.add_uniform(p + "wo", {d, d}, bound, g, rng);
    t.bo = store.add_zeros(p + "bo", {d}, g);
    t.ln1_g = store.add_const(p + "ln1_g", {d}, 1.0, g);
    t.ln1_b = store.add_zeros(p + "ln1_b", {d}, g);
    t.w1 = store.add_uniform(p + "ff_w1", {ff, d}, bound, g, rng);
    t.b1 = store.add_zeros(p + "ff_b1", {ff}, g);
    t.w2 = store.add_uniform(p + "ff_w2", {d, ff}, bound, g, rng);
    t.b2 = store.add_zeros(p + "ff_b2", {d}, g);
    t.ln2_g = store.add_const(p + "ln2_g", {d}, 1.0, g);
    t.ln2_b = store.add_zeros(p + "ln2_b", {d}, g);
    ids.layers.push_back(t);
  }
  ids.mix_raw = store.add_zeros("enc.mix_raw", {cfg.mix_count()}, g);
  for (std::size_t i = 0; i < cfg.kernel_sizes.size(); ++i) {
    const int k = cfg.kernel_sizes[i];
    ids.conv_w.push_back(store.add_uniform("enc.conv" + std::to_string(k) + "_w",
                                           {k * d, d}, bound, g, rng));
    ids.conv_b.push_back(store.add_zeros("enc.conv" + std::to_string(k) + "_b", {d}, g));
  }
  const int kcount = static_cast<int>(cfg.kernel_sizes.size());
  ids.fuse_w = store.add_uniform("enc.fuse_w", {d, 2 * kcount * d}, bound, g, rng);
  ids.fuse_b = store.add_zeros("enc.fuse_b", {d}, g);
  return ids;
}

namespace {

Tensor transformer_layer(const Binding& P, const TransformerLayerIds& t, const Tensor& x,
                         int heads) {
  const int d = x.shape()[1];
  const int dh = d / heads;
  Tensor q = affine_rows(x, P[t.wq], P[t.bq]);
  Tensor k = affine_rows(x, P[t.wk], P[t.bk]);
  Tensor v = affine_rows(x, P[t.wv], P[t.bv]);
  std::vector<Tensor> head_out;
  head_out.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Tensor qh = slice(q, 1, h * dh, dh);
    Tensor kh = slice(k, 1, h * dh, dh);
    Tensor vh = slice(v, 1, h * dh, dh);
    Tensor scores = smul(matmul(qh, kh, false, true), 1.0 / std::sqrt(static_cast<double>(dh)));
    Tensor att = softmax(scores, 1);
    head_out.push_back(matmul(att, vh));
  }
  Tensor attn = heads == 1 ? head_out[0] : concat(head_out, 1);
  attn = affine_rows(attn, P[t.wo], P[t.bo]);
  Tensor h1 = layer_norm_rows(add(x, attn), P[t.ln1_g], P[t.ln1_b]);
  Tensor ffn = affine_rows(relu(affine_rows(h1, P[t.w1], P[t.b1])), P[t.w2], P[t.b2]);
  return layer_norm_rows(add(h1, ffn), P[t.ln2_g], P[t.ln2_b]);
}

}  // namespace

EncodeOut encode_text(const Binding& P, const EncoderIds& ids, const EncoderConfig& cfg,
                      const TokenSequence& seq) {
  if (seq.real_len < 1 || seq.real_len > seq.padded_len())
    throw std::invalid_argument("encode_text: bad real length " +
                                std::to_string(seq.real_len));
  if (seq.real_len > cfg.n_max)
    throw std::invalid_argument("encode_text: sequence of " + std::to_string(seq.real_len) +
                                " tokens exceeds n_max " + std::to_string(cfg.n_max));
  std::vector<int> real_ids(seq.ids.begin(), seq.ids.begin() + seq.real_len);
  for (int id : real_ids)
    if (id < 0 || id >= cfg.vocab_size)
      throw std::invalid_argument("encode_text: token id " + std::to_string(id) +
                                  " outside vocabulary of " + std::to_string(cfg.vocab_size));

  const int n = seq.real_len;
  Tensor x = gather_rows(P[ids.tok_emb], real_ids);
  if (cfg.use_positions) {
    std::vector<int> pos(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(i)] = i;
    x = add(x, gather_rows(P[ids.pos_emb], pos));
  }

  std::vector<Tensor> layer_out;
  layer_out.reserve(ids.layers.size());
  for (const auto& t : ids.layers) {
    x = transformer_layer(P, t, x, cfg.heads);
    layer_out.push_back(x);
  }

  // weighted sum over the top mix_count() layer outputs
  const int m = cfg.mix_count();
  const int first = static_cast<int>(layer_out.size()) - m;
  Tensor weights = cfg.alpha_softmax ? softmax(P[ids.mix_raw], 0) : P[ids.mix_raw];
  Tensor mixed = scale_by(layer_out[static_cast<std::size_t>(first)], slice(weights, 0, 0, 1));
  for (int j = 1; j < m; ++j)
    mixed = add(mixed, scale_by(layer_out[static_cast<std::size_t>(first + j)],
                                slice(weights, 0, j, 1)));

  EncodeOut out;
  out.H = pad_rows(mixed, seq.padded_len());
  out.v_g = reshape(slice(layer_out.back(), 0, 0, 1), {cfg.d_p});
  out.real_len = n;
  return out;
}

Tensor local_encode(const Binding& P, const EncoderIds& ids, const EncoderConfig& cfg,
                    const Tensor& H, int real_len) {
  int max_k = 0;
  for (int k : cfg.kernel_sizes) max_k = std::max(max_k, k);
  if (real_len < max_k)
    throw std::invalid_argument("local_encode: " + std::to_string(real_len) +
                                " real positions is shorter than the largest kernel " +
                                std::to_string(max_k));
  Tensor h = real_len == H.shape()[0] ? H : slice(H, 0, 0, real_len);
  std::vector<Tensor> pooled;
  pooled.reserve(2 * cfg.kernel_sizes.size());
  for (std::size_t i = 0; i < cfg.kernel_sizes.size(); ++i) {
    Tensor c = conv1d(h, P[ids.conv_w[i]], P[ids.conv_b[i]], cfg.kernel_sizes[i],
                      /*same_padding=*/true);
    pooled.push_back(max_axis(c, 0));
    pooled.push_back(mean_axis(c, 0));
  }
  Tensor h_concat = concat(pooled, 0);  // 2K * d_p
  return relu(affine_vec(h_concat, P[ids.fuse_w], P[ids.fuse_b]));
}

Tensor fuse(const Tensor& v_g, const Tensor& v_l) {
  if (v_g.shape() != v_l.shape())
    throw std::invalid_argument("fuse: lengths differ, " + shape_str(v_g.shape()) + " vs " +
                                shape_str(v_l.shape()));
  return concat({v_g, v_l}, 0);
}

}  // namespace labelnet
