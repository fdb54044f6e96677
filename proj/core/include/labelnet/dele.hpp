#pragma once

#include <utility>
#include <vector>

#include "labelnet/encoder.hpp"
#include "labelnet/params.hpp"
#include "labelnet/tensor.hpp"

namespace labelnet {

struct DeleDims {
  int d_p = 64;
  int d_a = 100;  // mutual-interaction attention size
  int d_2 = 300;  // projection hidden/output
  int d_3 = 200;  // classifier / pair-classifier hidden
  int m = 2;
};

struct DeleIds {
  int label_emb;  // vanilla embedding E_f, m x d_p
  int s2l_w, s2l_u, s2l_omega;
  int l2s_w, l2s_u, l2s_omega;
  int proj_w1, proj_b1, proj_w2, proj_b2;  // shared projection, d_p -> d_2 -> d_2
  int cls_w1, cls_b1, cls_w2, cls_b2;      // d_p -> d_3 -> m
  int r2_w1, r2_b1, r2_w2, r2_b2;          // 4d_p -> d_3 -> 2
};

DeleIds make_dele_heads(ParamStore& store, const DeleDims& dims, std::mt19937_64& rng);

// Enriched label matrix E: row i is E_f row i plus the mean CLS vector of
// that label's encoded descriptions (zero when a label has none).
Tensor encode_labels(const Binding& P, const DeleIds& dele, const EncoderIds& enc,
                     const EncoderConfig& enc_cfg,
                     const std::vector<std::vector<TokenSequence>>& descriptions);

// Variant with description encodings precomputed outside the tape
// (freeze/caching mode): desc_means[i] is the cached mean CLS vector,
// empty for labels without descriptions.
Tensor encode_labels_cached(const Binding& P, const DeleIds& dele,
                            const std::vector<std::vector<double>>& desc_means, int d_p);

struct AttentionOut {
  Tensor context;  // d_p
  Tensor weights;  // s2l: m; l2s: m x n (rows are per-label word distributions)
};

// Sentence-to-label attention guided by v_g. `guided` = false drops the
// sentence term (mutual-interaction ablation).
AttentionOut s2l_attention(const Binding& P, const DeleIds& ids, const Tensor& E,
                           const Tensor& v_g, bool guided = true);

// Label-to-sentence attention per label, merged by elementwise max over
// the per-label context vectors. Operates on the first real_len rows of H.
AttentionOut l2s_attention(const Binding& P, const DeleIds& ids, const Tensor& H,
                           int real_len, const Tensor& E, bool guided = true);

// Shared two-layer projection head used for both views.
Tensor project(const Binding& P, const DeleIds& ids, const Tensor& h);

// Distribution over the m labels from the label-supervised vector.
Tensor dele_predict(const Binding& P, const DeleIds& ids, const Tensor& h_s);

// Distribution over {different, same}; index 1 is "same relation".
Tensor dele_r2_predict(const Binding& P, const DeleIds& ids, const Tensor& h_e1,
                       const Tensor& h_e2);

// NT-Xent over aligned rows: positive pair (z_s[i], z_e[i]); negatives are
// the other z_s rows, plus the other z_e rows when extra_negatives is set.
Tensor nt_xent(const std::vector<Tensor>& z_s, const std::vector<Tensor>& z_e, double tau,
               bool extra_negatives = false);

// Matrix form of the same loss; rows are the projected views.
Tensor nt_xent(const Tensor& Z_s, const Tensor& Z_e, double tau,
               bool extra_negatives = false);

struct DeleLossWeights {
  double delta = 0.1;
  double mu = 0.1;
  double tau = 0.1;
};

// delta * L1 + mu * L2 + L3
Tensor dele_loss(const Tensor& cl_term, const Tensor& r2_term, const Tensor& cls_term,
                 const DeleLossWeights& w);

}  // namespace labelnet
