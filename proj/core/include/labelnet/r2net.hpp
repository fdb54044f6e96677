#pragma once

#include <utility>
#include <vector>

#include "labelnet/params.hpp"
#include "labelnet/tensor.hpp"

namespace labelnet {

struct R2NetDims {
  int d_p = 64;   // encoder width; sentence vectors are 2*d_p
  int d_m = 300;  // transform / label-MLP hidden
  int d_2 = 300;  // pair-classifier hidden
  int m = 2;      // label count
};

struct R2NetIds {
  // label prediction, two layers 2d_p -> d_m -> m
  int cls_w1, cls_b1, cls_w2, cls_b2;
  // nonlinear transform ahead of heuristic matching, 2d_p -> d_m
  int tr_w, tr_b;
  // pair classifier over the matching vector, 4d_m -> d_2 -> 2
  int r2_w1, r2_b1, r2_w2, r2_b2;
  // shared triplet transform, 2d_p -> d_m
  int dist_w, dist_b;
};

R2NetIds make_r2net_heads(ParamStore& store, const R2NetDims& dims, std::mt19937_64& rng);

// Distribution over the m labels for one sentence vector v (2*d_p).
Tensor predict_label(const Binding& P, const R2NetIds& ids, const Tensor& v);

// u = [a; b; a (.) b; a - b]
Tensor heuristic_match(const Tensor& a, const Tensor& b);

// Distribution over {different, same}; index 1 is "same relation".
Tensor r2_predict(const Binding& P, const R2NetIds& ids, const Tensor& v1, const Tensor& v2);

// Euclidean distances after the shared ReLU-affine transform.
std::pair<Tensor, Tensor> triplet_distances(const Binding& P, const R2NetIds& ids,
                                            const Tensor& v_a, const Tensor& v_p,
                                            const Tensor& v_n);

// max(d_ap - d_an + margin, 0)
Tensor triplet_hinge(const Tensor& d_ap, const Tensor& d_an, double margin);

// mean over examples of -log p(true class); probabilities, not logits
Tensor cross_entropy_mean(const std::vector<Tensor>& probs, const std::vector<int>& targets,
                          double floor = 1e-12);

struct R2LossWeights {
  double eta = 0.5;
  double margin = 0.2;
};

struct R2BatchOutputs {
  std::vector<Tensor> label_probs;
  std::vector<int> labels;
  std::vector<Tensor> pair_probs;  // over {different, same}
  std::vector<int> pair_targets;   // 1 iff same label
  std::vector<std::pair<Tensor, Tensor>> triplet_dists;  // (d_ap, d_an)
};

// eta * L_s + (1 - eta) * (L_R2 + L_d), each term a batch mean.
Tensor r2net_loss(const R2BatchOutputs& out, const R2LossWeights& w);

}  // namespace labelnet
