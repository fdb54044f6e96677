#include "labelnet/dele.hpp"

#include <cmath>
#include <stdexcept>

namespace labelnet {

DeleIds make_dele_heads(ParamStore& store, const DeleDims& dims, std::mt19937_64& rng) {
  if (dims.d_p < 1 || dims.d_a < 1 || dims.d_2 < 1 || dims.d_3 < 1 || dims.m < 1)
    throw std::invalid_argument("dele: bad head dimensions");
  const double bound = 1.0 / std::sqrt(static_cast<double>(dims.d_p));
  const auto g = ParamGroup::kHead;
  DeleIds ids;
  ids.label_emb = store.add_uniform("dele.label_emb", {dims.m, dims.d_p}, bound, g, rng);
  ids.s2l_w = store.add_uniform("dele.s2l_w", {dims.d_a, dims.d_p}, bound, g, rng);
  ids.s2l_u = store.add_uniform("dele.s2l_u", {dims.d_a, dims.d_p}, bound, g, rng);
  ids.s2l_omega = store.add_uniform("dele.s2l_omega", {dims.d_a}, bound, g, rng);
  ids.l2s_w = store.add_uniform("dele.l2s_w", {dims.d_a, dims.d_p}, bound, g, rng);
  ids.l2s_u = store.add_uniform("dele.l2s_u", {dims.d_a, dims.d_p}, bound, g, rng);
  ids.l2s_omega = store.add_uniform("dele.l2s_omega", {dims.d_a}, bound, g, rng);
  ids.proj_w1 = store.add_uniform("dele.proj_w1", {dims.d_2, dims.d_p}, bound, g, rng);
  ids.proj_b1 = store.add_zeros("dele.proj_b1", {dims.d_2}, g);
  ids.proj_w2 = store.add_uniform("dele.proj_w2", {dims.d_2, dims.d_2}, bound, g, rng);
  ids.proj_b2 = store.add_zeros("dele.proj_b2", {dims.d_2}, g);
  ids.cls_w1 = store.add_uniform("dele.cls_w1", {dims.d_3, dims.d_p}, bound, g, rng);
  ids.cls_b1 = store.add_zeros("dele.cls_b1", {dims.d_3}, g);
  ids.cls_w2 = store.add_uniform("dele.cls_w2", {dims.m, dims.d_3}, bound, g, rng);
  ids.cls_b2 = store.add_zeros("dele.cls_b2", {dims.m}, g);
  ids.r2_w1 = store.add_uniform("dele.r2_w1", {dims.d_3, 4 * dims.d_p}, bound, g, rng);
  ids.r2_b1 = store.add_zeros("dele.r2_b1", {dims.d_3}, g);
  ids.r2_w2 = store.add_uniform("dele.r2_w2", {2, dims.d_3}, bound, g, rng);
  ids.r2_b2 = store.add_zeros("dele.r2_b2", {2}, g);
  return ids;
}

Tensor encode_labels(const Binding& P, const DeleIds& dele, const EncoderIds& enc,
                     const EncoderConfig& enc_cfg,
                     const std::vector<std::vector<TokenSequence>>& descriptions) {
  const Tensor& ef = P[dele.label_emb];
  const int m = ef.shape()[0];
  const int d = ef.shape()[1];
  if (static_cast<int>(descriptions.size()) != m)
    throw std::invalid_argument("encode_labels: expected " + std::to_string(m) +
                                " description lists, got " +
                                std::to_string(descriptions.size()));
  Tape* tape = ef.tape();
  std::vector<Tensor> rows;
  rows.reserve(static_cast<std::size_t>(m));
  bool any = false;
  for (int i = 0; i < m; ++i) {
    const auto& descs = descriptions[static_cast<std::size_t>(i)];
    if (descs.empty()) {
      rows.push_back(tape->leaf({d}, std::vector<double>(static_cast<std::size_t>(d), 0.0)));
      continue;
    }
    any = true;
    std::vector<Tensor> cls;
    cls.reserve(descs.size());
    for (const auto& seq : descs) cls.push_back(encode_text(P, enc, enc_cfg, seq).v_g);
    rows.push_back(cls.size() == 1 ? cls[0] : mean_axis(stack(cls), 0));
  }
  if (!any) return ef;  // vanilla-embedding ablation: E = E_f exactly
  return add(ef, stack(rows));
}

Tensor encode_labels_cached(const Binding& P, const DeleIds& dele,
                            const std::vector<std::vector<double>>& desc_means, int d_p) {
  const Tensor& ef = P[dele.label_emb];
  const int m = ef.shape()[0];
  if (static_cast<int>(desc_means.size()) != m)
    throw std::invalid_argument("encode_labels_cached: wrong row count");
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m) * d_p);
  bool any = false;
  for (const auto& row : desc_means) {
    if (row.empty()) {
      flat.insert(flat.end(), static_cast<std::size_t>(d_p), 0.0);
    } else {
      if (static_cast<int>(row.size()) != d_p)
        throw std::invalid_argument("encode_labels_cached: cached width mismatch");
      flat.insert(flat.end(), row.begin(), row.end());
      any = true;
    }
  }
  if (!any) return ef;
  Tensor bar = ef.tape()->leaf({m, d_p}, std::move(flat));
  return add(ef, bar);
}

AttentionOut s2l_attention(const Binding& P, const DeleIds& ids, const Tensor& E,
                           const Tensor& v_g, bool guided) {
  const int m = E.shape()[0];
  const int d_a = P[ids.s2l_w].shape()[0];
  Tensor scores = matmul(E, P[ids.s2l_w], false, true);  // m x d_a
  if (guided) {
    Tensor u = reshape(matmul(P[ids.s2l_u], reshape(v_g, {v_g.shape()[0], 1})), {d_a});
    scores = add(scores, repeat_rows(u, m));
  }
  Tensor beta = reshape(matmul(tanh(scores), reshape(P[ids.s2l_omega], {d_a, 1})), {m});
  Tensor beta_norm = softmax(beta, 0);
  Tensor h_e = reshape(matmul(reshape(beta_norm, {1, m}), E), {E.shape()[1]});
  return {h_e, beta_norm};
}

AttentionOut l2s_attention(const Binding& P, const DeleIds& ids, const Tensor& H,
                           int real_len, const Tensor& E, bool guided) {
  if (real_len < 1 || real_len > H.shape()[0])
    throw std::invalid_argument("l2s_attention: all positions masked");
  const int m = E.shape()[0];
  const int d = E.shape()[1];
  const int d_a = P[ids.l2s_w].shape()[0];
  Tensor h = real_len == H.shape()[0] ? H : slice(H, 0, 0, real_len);
  Tensor shared = matmul(h, P[ids.l2s_w], false, true);  // n x d_a
  Tensor omega_col = reshape(P[ids.l2s_omega], {d_a, 1});
  std::vector<Tensor> contexts, weight_rows;
  contexts.reserve(static_cast<std::size_t>(m));
  weight_rows.reserve(static_cast<std::size_t>(m));
  for (int t = 0; t < m; ++t) {
    Tensor scores = shared;
    if (guided) {
      Tensor e_t = reshape(slice(E, 0, t, 1), {d});
      Tensor q = reshape(matmul(P[ids.l2s_u], reshape(e_t, {d, 1})), {d_a});
      scores = add(scores, repeat_rows(q, real_len));
    }
    Tensor beta = reshape(matmul(tanh(scores), omega_col), {real_len});
    Tensor att = softmax(beta, 0);
    weight_rows.push_back(att);
    contexts.push_back(reshape(matmul(reshape(att, {1, real_len}), h), {d}));
  }
  Tensor merged = m == 1 ? contexts[0] : max_axis(stack(contexts), 0);
  return {merged, stack(weight_rows)};
}

Tensor project(const Binding& P, const DeleIds& ids, const Tensor& h) {
  Tensor hidden = relu(affine_vec(h, P[ids.proj_w1], P[ids.proj_b1]));
  return affine_vec(hidden, P[ids.proj_w2], P[ids.proj_b2]);
}

Tensor dele_predict(const Binding& P, const DeleIds& ids, const Tensor& h_s) {
  Tensor hidden = relu(affine_vec(h_s, P[ids.cls_w1], P[ids.cls_b1]));
  return softmax(affine_vec(hidden, P[ids.cls_w2], P[ids.cls_b2]), 0);
}

Tensor dele_r2_predict(const Binding& P, const DeleIds& ids, const Tensor& h_e1,
                       const Tensor& h_e2) {
  Tensor u = concat({h_e1, h_e2, mul(h_e1, h_e2), sub(h_e1, h_e2)}, 0);
  Tensor hidden = relu(affine_vec(u, P[ids.r2_w1], P[ids.r2_b1]));
  return softmax(affine_vec(hidden, P[ids.r2_w2], P[ids.r2_b2]), 0);
}

Tensor nt_xent(const std::vector<Tensor>& z_s, const std::vector<Tensor>& z_e, double tau,
               bool extra_negatives) {
  const std::size_t n = z_s.size();
  if (n < 2) throw std::invalid_argument("nt_xent: needs at least 2 instances");
  if (z_e.size() != n) throw std::invalid_argument("nt_xent: view counts differ");
  if (tau <= 0.0) throw std::invalid_argument("nt_xent: temperature must be positive");
  std::vector<Tensor> terms;
  terms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Tensor> sims;
    sims.push_back(cosine_sim(z_s[i], z_e[i]));  // positive first
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sims.push_back(cosine_sim(z_s[i], z_s[j]));
    if (extra_negatives)
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) sims.push_back(cosine_sim(z_s[i], z_e[j]));
    Tensor p = softmax(smul(concat(sims, 0), 1.0 / tau), 0);
    terms.push_back(smul(safe_log(slice(p, 0, 0, 1)), -1.0));
  }
  return mean(concat(terms, 0));
}

Tensor nt_xent(const Tensor& Z_s, const Tensor& Z_e, double tau, bool extra_negatives) {
  if (Z_s.rank() != 2 || Z_e.rank() != 2 || Z_s.shape() != Z_e.shape())
    throw std::invalid_argument("nt_xent: views must be equal-shape matrices");
  const int n = Z_s.shape()[0];
  const int d = Z_s.shape()[1];
  std::vector<Tensor> zs, ze;
  zs.reserve(static_cast<std::size_t>(n));
  ze.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    zs.push_back(reshape(slice(Z_s, 0, i, 1), {d}));
    ze.push_back(reshape(slice(Z_e, 0, i, 1), {d}));
  }
  return nt_xent(zs, ze, tau, extra_negatives);
}

Tensor dele_loss(const Tensor& cl_term, const Tensor& r2_term, const Tensor& cls_term,
                 const DeleLossWeights& w) {
  if (w.delta < 0.0 || w.mu < 0.0)
    throw std::invalid_argument("dele_loss: loss weights must be nonnegative");
  return add(add(smul(cl_term, w.delta), smul(r2_term, w.mu)), cls_term);
}

}  // namespace labelnet
