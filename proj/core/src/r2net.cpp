#include "labelnet/r2net.hpp"

#include <cmath>
#include <stdexcept>

namespace labelnet {

R2NetIds make_r2net_heads(ParamStore& store, const R2NetDims& dims, std::mt19937_64& rng) {
  if (dims.d_p < 1 || dims.d_m < 1 || dims.d_2 < 1 || dims.m < 2)
    throw std::invalid_argument("r2net: bad head dimensions");
  const double bound = 1.0 / std::sqrt(static_cast<double>(dims.d_p));
  const int dv = 2 * dims.d_p;
  const auto g = ParamGroup::kHead;
  R2NetIds ids;
  ids.cls_w1 = store.add_uniform("r2net.cls_w1", {dims.d_m, dv}, bound, g, rng);
  ids.cls_b1 = store.add_zeros("r2net.cls_b1", {dims.d_m}, g);
  ids.cls_w2 = store.add_uniform("r2net.cls_w2", {dims.m, dims.d_m}, bound, g, rng);
  ids.cls_b2 = store.add_zeros("r2net.cls_b2", {dims.m}, g);
  ids.tr_w = store.add_uniform("r2net.tr_w", {dims.d_m, dv}, bound, g, rng);
  ids.tr_b = store.add_zeros("r2net.tr_b", {dims.d_m}, g);
  ids.r2_w1 = store.add_uniform("r2net.r2_w1", {dims.d_2, 4 * dims.d_m}, bound, g, rng);
  ids.r2_b1 = store.add_zeros("r2net.r2_b1", {dims.d_2}, g);
  ids.r2_w2 = store.add_uniform("r2net.r2_w2", {2, dims.d_2}, bound, g, rng);
  ids.r2_b2 = store.add_zeros("r2net.r2_b2", {2}, g);
  ids.dist_w = store.add_uniform("r2net.dist_w", {dims.d_m, dv}, bound, g, rng);
  ids.dist_b = store.add_zeros("r2net.dist_b", {dims.d_m}, g);
  return ids;
}

Tensor predict_label(const Binding& P, const R2NetIds& ids, const Tensor& v) {
  Tensor h = relu(affine_vec(v, P[ids.cls_w1], P[ids.cls_b1]));
  return softmax(affine_vec(h, P[ids.cls_w2], P[ids.cls_b2]), 0);
}

Tensor heuristic_match(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("heuristic_match: lengths differ, " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  return concat({a, b, mul(a, b), sub(a, b)}, 0);
}

Tensor r2_predict(const Binding& P, const R2NetIds& ids, const Tensor& v1, const Tensor& v2) {
  Tensor t1 = relu(affine_vec(v1, P[ids.tr_w], P[ids.tr_b]));
  Tensor t2 = relu(affine_vec(v2, P[ids.tr_w], P[ids.tr_b]));
  Tensor u = heuristic_match(t1, t2);
  Tensor h = relu(affine_vec(u, P[ids.r2_w1], P[ids.r2_b1]));
  return softmax(affine_vec(h, P[ids.r2_w2], P[ids.r2_b2]), 0);
}

std::pair<Tensor, Tensor> triplet_distances(const Binding& P, const R2NetIds& ids,
                                            const Tensor& v_a, const Tensor& v_p,
                                            const Tensor& v_n) {
  Tensor ta = relu(affine_vec(v_a, P[ids.dist_w], P[ids.dist_b]));
  Tensor tp = relu(affine_vec(v_p, P[ids.dist_w], P[ids.dist_b]));
  Tensor tn = relu(affine_vec(v_n, P[ids.dist_w], P[ids.dist_b]));
  return {euclidean_distance(ta, tp), euclidean_distance(ta, tn)};
}

Tensor triplet_hinge(const Tensor& d_ap, const Tensor& d_an, double margin) {
  return relu(sadd(sub(d_ap, d_an), margin));
}

Tensor cross_entropy_mean(const std::vector<Tensor>& probs, const std::vector<int>& targets,
                          double floor) {
  if (probs.empty() || probs.size() != targets.size())
    throw std::invalid_argument("cross_entropy_mean: probs/targets size mismatch");
  std::vector<Tensor> terms;
  terms.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int y = targets[i];
    if (y < 0 || y >= probs[i].shape()[0])
      throw std::invalid_argument("cross_entropy_mean: target out of range");
    terms.push_back(smul(safe_log(slice(probs[i], 0, y, 1), floor), -1.0));
  }
  return mean(concat(terms, 0));
}

Tensor r2net_loss(const R2BatchOutputs& out, const R2LossWeights& w) {
  if (w.eta < 0.0 || w.eta > 1.0)
    throw std::invalid_argument("r2net_loss: eta must lie in [0,1]");
  if (w.margin <= 0.0) throw std::invalid_argument("r2net_loss: margin must be positive");
  Tensor l_s = cross_entropy_mean(out.label_probs, out.labels);
  if (w.eta == 1.0) return l_s;
  if (out.pair_probs.empty())
    throw std::invalid_argument("r2net_loss: eta < 1 requires pair structures");
  Tensor l_r2 = cross_entropy_mean(out.pair_probs, out.pair_targets);
  Tensor aux = l_r2;
  if (!out.triplet_dists.empty()) {
    std::vector<Tensor> hinges;
    hinges.reserve(out.triplet_dists.size());
    for (const auto& [d_ap, d_an] : out.triplet_dists)
      hinges.push_back(triplet_hinge(d_ap, d_an, w.margin));
    aux = add(aux, mean(concat(hinges, 0)));
  }
  return add(smul(l_s, w.eta), smul(aux, 1.0 - w.eta));
}

}  // namespace labelnet
