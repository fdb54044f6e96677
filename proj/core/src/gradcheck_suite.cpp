#include <cmath>
#include <functional>

#include "labelnet/dele.hpp"
#include "labelnet/encoder.hpp"
#include "labelnet/gradcheck.hpp"
#include "labelnet/r2net.hpp"

namespace labelnet {

namespace {

constexpr double kPrimitiveTol = 1e-4;
constexpr double kFullLossTol = 1e-3;

std::vector<double> draw(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * uniform01(rng);
  return v;
}

GradCheckLeaf leaf(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  auto n = shape_size(shape);
  return {std::move(shape), draw(rng, n, lo, hi)};
}

// Values bounded away from zero so relu/l2_norm kinks stay clear of the
// finite-difference step.
GradCheckLeaf leaf_signed(std::mt19937_64& rng, Shape shape) {
  auto n = shape_size(shape);
  std::vector<double> v(n);
  for (auto& x : v) {
    const double mag = 0.2 + 0.8 * uniform01(rng);
    x = uniform01(rng) < 0.5 ? -mag : mag;
  }
  return {std::move(shape), std::move(v)};
}

// Fixed mixing weights so reductions of probability vectors do not
// collapse to a constant.
Tensor probe(Tape& tape, const Tensor& t, std::uint64_t salt) {
  std::mt19937_64 rng(salt);
  Tensor w = tape.leaf(t.shape(), draw(rng, t.size(), -1.0, 1.0));
  return sum(mul(t, w));
}

struct Suite {
  std::vector<GradCheckResult>* results;
  const std::string* filter;
  int seeds;

  void run(const std::string& name, double tol,
           const std::function<void(std::mt19937_64&, std::vector<GradCheckLeaf>&, ScalarFn&)>&
               make) const {
    if (!filter->empty() && name.rfind(*filter + "/", 0) != 0 && name != *filter) return;
    double worst = 0.0;
    for (int s = 0; s < seeds; ++s) {
      std::mt19937_64 rng(0xC0FFEEULL + 7919ULL * static_cast<std::uint64_t>(s));
      std::vector<GradCheckLeaf> leaves;
      ScalarFn fn;
      make(rng, leaves, fn);
      worst = std::max(worst, grad_check(fn, leaves));
    }
    results->push_back({name, worst, tol});
  }
};

// --- toy model fixtures -----------------------------------------------------

EncoderConfig toy_encoder_cfg() {
  EncoderConfig cfg;
  cfg.vocab_size = 14;
  cfg.d_p = 8;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.n_max = 10;
  cfg.ff_mult = 2;
  cfg.kernel_sizes = {1, 2, 3};
  return cfg;
}

TokenSequence toy_seq(std::mt19937_64& rng, int len, int vocab) {
  TokenSequence seq;
  seq.ids.push_back(2);  // CLS
  for (int i = 1; i < len; ++i)
    seq.ids.push_back(4 + static_cast<int>(rng() % static_cast<std::uint64_t>(vocab - 4)));
  seq.real_len = len;
  seq.ids.resize(8, 0);
  return seq;
}

std::vector<GradCheckLeaf> store_leaves(const ParamStore& store) {
  std::vector<GradCheckLeaf> leaves;
  leaves.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i)
    leaves.push_back({store.at(static_cast<int>(i)).shape, store.at(static_cast<int>(i)).value});
  return leaves;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(const std::string& module, int seeds) {
  std::vector<GradCheckResult> results;
  Suite s{&results, &module, seeds};

  // --- tensor primitives ---
  s.run("tensor/add", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {3, 4}), leaf(rng, {3, 4})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, add(x[0], x[1]), 1); };
  });
  s.run("tensor/sub", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {5}), leaf(rng, {5})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, sub(x[0], x[1]), 2); };
  });
  s.run("tensor/mul", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {3, 4}), leaf(rng, {3, 4})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, mul(x[0], x[1]), 3); };
  });
  s.run("tensor/scalar_mul", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {6})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, smul(x[0], 1.7), 4); };
  });
  s.run("tensor/scalar_add", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {6})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, sadd(x[0], -0.3), 5); };
  });
  s.run("tensor/scale_by_scalar", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {2, 3}), leaf(rng, {1})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, scale_by(x[0], x[1]), 6); };
  });
  s.run("tensor/matmul", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {3, 4}), leaf(rng, {4, 2})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, matmul(x[0], x[1]), 7); };
  });
  s.run("tensor/matmul_ta", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {4, 3}), leaf(rng, {4, 2})};
    fn = [](Tape& t, const std::vector<Tensor>& x) {
      return probe(t, matmul(x[0], x[1], true, false), 8);
    };
  });
  s.run("tensor/matmul_tb", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {3, 4}), leaf(rng, {2, 4})};
    fn = [](Tape& t, const std::vector<Tensor>& x) {
      return probe(t, matmul(x[0], x[1], false, true), 9);
    };
  });
  s.run("tensor/matmul_batched", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {2, 3, 4}), leaf(rng, {4, 2})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, matmul(x[0], x[1]), 10); };
  });
  s.run("tensor/concat", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {2, 3}), leaf(rng, {2, 2})};
    fn = [](Tape& t, const std::vector<Tensor>& x) {
      return probe(t, concat({x[0], x[1]}, 1), 11);
    };
  });
  s.run("tensor/slice", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {4, 5})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, slice(x[0], 1, 1, 3), 12); };
  });
  s.run("tensor/stack", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {4}), leaf(rng, {4}), leaf(rng, {4})};
    fn = [](Tape& t, const std::vector<Tensor>& x) {
      return probe(t, stack({x[0], x[1], x[2]}), 13);
    };
  });
  s.run("tensor/pad_rows", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {2, 3})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, pad_rows(x[0], 4), 14); };
  });
  s.run("tensor/reshape", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {2, 6})};
    fn = [](Tape& t, const std::vector<Tensor>& x) {
      return probe(t, reshape(x[0], {3, 4}), 15);
    };
  });
  s.run("tensor/tanh", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {8})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, tanh(x[0]), 16); };
  });
  s.run("tensor/relu", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf_signed(rng, {8})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, relu(x[0]), 17); };
  });
  s.run("tensor/exp", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {6})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, exp(x[0]), 18); };
  });
  s.run("tensor/log", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {6}, 0.2, 1.2)};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, log(x[0]), 19); };
  });
  s.run("tensor/safe_log", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {6}, 0.2, 1.2)};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, safe_log(x[0]), 20); };
  });
  s.run("tensor/softmax_vec", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {7})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, softmax(x[0], 0), 21); };
  });
  s.run("tensor/softmax_rows", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {3, 5})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, softmax(x[0], 1), 22); };
  });
  s.run("tensor/softmax_cols", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {3, 5})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, softmax(x[0], 0), 23); };
  });
  s.run("tensor/sum", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {3, 4})};
    fn = [](Tape&, const std::vector<Tensor>& x) { return sum(x[0]); };
  });
  s.run("tensor/mean", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {3, 4})};
    fn = [](Tape&, const std::vector<Tensor>& x) { return mean(x[0]); };
  });
  s.run("tensor/sum_axis", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {3, 4})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, sum_axis(x[0], 0), 24); };
  });
  s.run("tensor/mean_axis", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {3, 4})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, mean_axis(x[0], 1), 25); };
  });
  s.run("tensor/max_axis", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {4, 5})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, max_axis(x[0], 0), 26); };
  });
  s.run("tensor/conv1d_same", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {5, 3}), leaf(rng, {6, 2}), leaf(rng, {2})};
    fn = [](Tape& t, const std::vector<Tensor>& x) {
      return probe(t, conv1d(x[0], x[1], x[2], 2, true), 27);
    };
  });
  s.run("tensor/conv1d_valid", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {5, 3}), leaf(rng, {9, 2}), leaf(rng, {2})};
    fn = [](Tape& t, const std::vector<Tensor>& x) {
      return probe(t, conv1d(x[0], x[1], x[2], 3, false), 28);
    };
  });
  s.run("tensor/gather_rows", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {6, 3})};
    fn = [](Tape& t, const std::vector<Tensor>& x) {
      return probe(t, gather_rows(x[0], {0, 2, 2, 5}), 29);
    };
  });
  s.run("tensor/repeat_rows", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {3})};
    fn = [](Tape& t, const std::vector<Tensor>& x) { return probe(t, repeat_rows(x[0], 4), 30); };
  });
  s.run("tensor/layer_norm_rows", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {3, 4}), leaf(rng, {4}, 0.5, 1.5), leaf(rng, {4})};
    fn = [](Tape& t, const std::vector<Tensor>& x) {
      return probe(t, layer_norm_rows(x[0], x[1], x[2]), 31);
    };
  });
  s.run("tensor/dot", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {5}), leaf(rng, {5})};
    fn = [](Tape&, const std::vector<Tensor>& x) { return dot(x[0], x[1]); };
  });
  s.run("tensor/l2_norm", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf_signed(rng, {5})};
    fn = [](Tape&, const std::vector<Tensor>& x) { return l2_norm(x[0]); };
  });
  s.run("tensor/cosine_sim", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf_signed(rng, {5}), leaf_signed(rng, {5})};
    fn = [](Tape&, const std::vector<Tensor>& x) { return cosine_sim(x[0], x[1]); };
  });
  s.run("tensor/squared_distance", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {5}), leaf(rng, {5})};
    fn = [](Tape&, const std::vector<Tensor>& x) { return squared_distance(x[0], x[1]); };
  });
  s.run("tensor/euclidean_distance", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves = {leaf(rng, {5}, 0.5, 1.5), leaf(rng, {5}, -1.5, -0.5)};
    fn = [](Tape&, const std::vector<Tensor>& x) { return euclidean_distance(x[0], x[1]); };
  });

  // --- encoder heads ---
  s.run("encoder/encode_text", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    EncoderConfig cfg = toy_encoder_cfg();
    ParamStore store;
    EncoderIds ids = make_encoder_params(store, cfg, rng);
    leaves = store_leaves(store);
    TokenSequence seq = toy_seq(rng, 5, cfg.vocab_size);
    fn = [cfg, ids, seq](Tape& t, const std::vector<Tensor>& x) {
      EncodeOut out = encode_text(x, ids, cfg, seq);
      return add(probe(t, out.H, 40), probe(t, out.v_g, 41));
    };
  });
  s.run("encoder/local_encode", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    EncoderConfig cfg = toy_encoder_cfg();
    ParamStore store;
    EncoderIds ids = make_encoder_params(store, cfg, rng);
    leaves = store_leaves(store);
    TokenSequence seq = toy_seq(rng, 6, cfg.vocab_size);
    fn = [cfg, ids, seq](Tape& t, const std::vector<Tensor>& x) {
      EncodeOut out = encode_text(x, ids, cfg, seq);
      return probe(t, local_encode(x, ids, cfg, out.H, out.real_len), 42);
    };
  });

  // --- r2net heads ---
  const R2NetDims r2dims{6, 5, 4, 3};
  s.run("r2net/predict_label", kPrimitiveTol, [&](auto& rng, auto& leaves, auto& fn) {
    ParamStore store;
    R2NetIds ids = make_r2net_heads(store, r2dims, rng);
    leaves = store_leaves(store);
    leaves.push_back(leaf(rng, {2 * r2dims.d_p}));
    fn = [ids, n = store.size()](Tape&, const std::vector<Tensor>& x) {
      Binding P(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
      Tensor probs = predict_label(P, ids, x[n]);
      return smul(safe_log(slice(probs, 0, 1, 1)), -1.0);
    };
  });
  s.run("r2net/r2_predict", kPrimitiveTol, [&](auto& rng, auto& leaves, auto& fn) {
    ParamStore store;
    R2NetIds ids = make_r2net_heads(store, r2dims, rng);
    leaves = store_leaves(store);
    leaves.push_back(leaf(rng, {2 * r2dims.d_p}));
    leaves.push_back(leaf(rng, {2 * r2dims.d_p}));
    fn = [ids, n = store.size()](Tape&, const std::vector<Tensor>& x) {
      Binding P(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
      Tensor probs = r2_predict(P, ids, x[n], x[n + 1]);
      return smul(safe_log(slice(probs, 0, 1, 1)), -1.0);
    };
  });
  s.run("r2net/triplet_distances", kPrimitiveTol, [&](auto& rng, auto& leaves, auto& fn) {
    ParamStore store;
    R2NetIds ids = make_r2net_heads(store, r2dims, rng);
    leaves = store_leaves(store);
    for (int i = 0; i < 3; ++i) leaves.push_back(leaf(rng, {2 * r2dims.d_p}));
    fn = [ids, n = store.size()](Tape&, const std::vector<Tensor>& x) {
      Binding P(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
      auto [dap, dan] = triplet_distances(P, ids, x[n], x[n + 1], x[n + 2]);
      return add(dap, smul(dan, 0.5));
    };
  });
  s.run("r2net/full_loss", kFullLossTol, [&](auto& rng, auto& leaves, auto& fn) {
    EncoderConfig cfg = toy_encoder_cfg();
    ParamStore store;
    EncoderIds enc = make_encoder_params(store, cfg, rng);
    R2NetIds heads = make_r2net_heads(store, {cfg.d_p, 5, 4, 3}, rng);
    leaves = store_leaves(store);
    std::vector<TokenSequence> seqs;
    for (int i = 0; i < 6; ++i) seqs.push_back(toy_seq(rng, 4 + i % 3, cfg.vocab_size));
    fn = [cfg, enc, heads, seqs](Tape&, const std::vector<Tensor>& P) {
      std::vector<Tensor> vs;
      R2BatchOutputs out;
      for (const auto& seq : seqs) {
        EncodeOut e = encode_text(P, enc, cfg, seq);
        vs.push_back(fuse(e.v_g, local_encode(P, enc, cfg, e.H, e.real_len)));
        out.label_probs.push_back(predict_label(P, heads, vs.back()));
      }
      out.labels = {0, 1, 0, 2, 1, 0};
      const int pair_idx[3][2] = {{0, 2}, {1, 4}, {3, 5}};
      for (const auto& [a, b] : pair_idx) {
        out.pair_probs.push_back(r2_predict(P, heads, vs[static_cast<std::size_t>(a)],
                                            vs[static_cast<std::size_t>(b)]));
        out.pair_targets.push_back(out.labels[static_cast<std::size_t>(a)] ==
                                   out.labels[static_cast<std::size_t>(b)]);
      }
      out.triplet_dists.push_back(triplet_distances(P, heads, vs[0], vs[2], vs[1]));
      out.triplet_dists.push_back(triplet_distances(P, heads, vs[1], vs[4], vs[5]));
      return r2net_loss(out, {0.4, 0.2});
    };
  });

  // --- dele heads ---
  const DeleDims ddims{6, 5, 4, 4, 3};
  s.run("dele/s2l_attention", kPrimitiveTol, [&](auto& rng, auto& leaves, auto& fn) {
    ParamStore store;
    DeleIds ids = make_dele_heads(store, ddims, rng);
    leaves = store_leaves(store);
    leaves.push_back(leaf(rng, {ddims.m, ddims.d_p}));  // E
    leaves.push_back(leaf(rng, {ddims.d_p}));           // v_g
    fn = [ids, n = store.size()](Tape& t, const std::vector<Tensor>& x) {
      Binding P(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
      return probe(t, s2l_attention(P, ids, x[n], x[n + 1]).context, 50);
    };
  });
  s.run("dele/l2s_attention", kPrimitiveTol, [&](auto& rng, auto& leaves, auto& fn) {
    ParamStore store;
    DeleIds ids = make_dele_heads(store, ddims, rng);
    leaves = store_leaves(store);
    leaves.push_back(leaf(rng, {5, ddims.d_p}));        // H
    leaves.push_back(leaf(rng, {ddims.m, ddims.d_p}));  // E
    fn = [ids, n = store.size()](Tape& t, const std::vector<Tensor>& x) {
      Binding P(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
      return probe(t, l2s_attention(P, ids, x[n], 5, x[n + 1]).context, 51);
    };
  });
  s.run("dele/project", kPrimitiveTol, [&](auto& rng, auto& leaves, auto& fn) {
    ParamStore store;
    DeleIds ids = make_dele_heads(store, ddims, rng);
    leaves = store_leaves(store);
    leaves.push_back(leaf(rng, {ddims.d_p}));
    fn = [ids, n = store.size()](Tape& t, const std::vector<Tensor>& x) {
      Binding P(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
      return probe(t, project(P, ids, x[n]), 52);
    };
  });
  s.run("dele/r2_predict", kPrimitiveTol, [&](auto& rng, auto& leaves, auto& fn) {
    ParamStore store;
    DeleIds ids = make_dele_heads(store, ddims, rng);
    leaves = store_leaves(store);
    leaves.push_back(leaf(rng, {ddims.d_p}));
    leaves.push_back(leaf(rng, {ddims.d_p}));
    fn = [ids, n = store.size()](Tape&, const std::vector<Tensor>& x) {
      Binding P(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
      Tensor probs = dele_r2_predict(P, ids, x[n], x[n + 1]);
      return smul(safe_log(slice(probs, 0, 1, 1)), -1.0);
    };
  });
  s.run("dele/nt_xent", kPrimitiveTol, [](auto& rng, auto& leaves, auto& fn) {
    leaves.clear();
    for (int i = 0; i < 6; ++i) leaves.push_back(leaf_signed(rng, {4}));
    fn = [](Tape&, const std::vector<Tensor>& x) {
      return nt_xent(std::vector<Tensor>{x[0], x[1], x[2]},
                     std::vector<Tensor>{x[3], x[4], x[5]}, 0.5);
    };
  });
  s.run("dele/encode_labels", kPrimitiveTol, [&](auto& rng, auto& leaves, auto& fn) {
    EncoderConfig cfg = toy_encoder_cfg();
    ParamStore store;
    EncoderIds enc = make_encoder_params(store, cfg, rng);
    DeleIds heads = make_dele_heads(store, {cfg.d_p, 5, 4, 4, 3}, rng);
    leaves = store_leaves(store);
    std::vector<std::vector<TokenSequence>> descs(3);
    descs[0] = {toy_seq(rng, 4, cfg.vocab_size), toy_seq(rng, 3, cfg.vocab_size)};
    descs[2] = {toy_seq(rng, 5, cfg.vocab_size)};
    fn = [cfg, enc, heads, descs](Tape& t, const std::vector<Tensor>& P) {
      return probe(t, encode_labels(P, heads, enc, cfg, descs), 53);
    };
  });
  s.run("dele/full_loss", kFullLossTol, [&](auto& rng, auto& leaves, auto& fn) {
    EncoderConfig cfg = toy_encoder_cfg();
    ParamStore store;
    EncoderIds enc = make_encoder_params(store, cfg, rng);
    DeleIds heads = make_dele_heads(store, {cfg.d_p, 5, 4, 4, 3}, rng);
    leaves = store_leaves(store);
    std::vector<std::vector<TokenSequence>> descs(3);
    descs[0] = {toy_seq(rng, 4, cfg.vocab_size)};
    descs[1] = {toy_seq(rng, 3, cfg.vocab_size)};
    descs[2] = {toy_seq(rng, 5, cfg.vocab_size)};
    std::vector<TokenSequence> seqs;
    for (int i = 0; i < 4; ++i) seqs.push_back(toy_seq(rng, 4 + i % 2, cfg.vocab_size));
    fn = [cfg, enc, heads, descs, seqs](Tape&, const std::vector<Tensor>& P) {
      Tensor E = encode_labels(P, heads, enc, cfg, descs);
      std::vector<Tensor> he, hs, zs, ze, probs;
      for (const auto& seq : seqs) {
        EncodeOut e = encode_text(P, enc, cfg, seq);
        he.push_back(s2l_attention(P, heads, E, e.v_g).context);
        hs.push_back(l2s_attention(P, heads, e.H, e.real_len, E).context);
        zs.push_back(project(P, heads, hs.back()));
        ze.push_back(project(P, heads, he.back()));
        probs.push_back(dele_predict(P, heads, hs.back()));
      }
      const std::vector<int> labels{0, 1, 2, 0};
      Tensor l3 = cross_entropy_mean(probs, labels);
      Tensor l1 = nt_xent(zs, ze, 0.5);
      std::vector<Tensor> pp{dele_r2_predict(P, heads, he[0], he[3]),
                             dele_r2_predict(P, heads, he[1], he[2])};
      Tensor l2 = cross_entropy_mean(pp, {1, 0});
      return dele_loss(l1, l2, l3, {0.3, 0.4, 0.5});
    };
  });

  return results;
}

}  // namespace labelnet
