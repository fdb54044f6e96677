#include <random>

#include "benchmark/benchmark.h"
#include "labelnet/dele.hpp"
#include "labelnet/encoder.hpp"
#include "labelnet/params.hpp"
#include "labelnet/tensor.hpp"

using namespace labelnet;

namespace {

std::vector<double> rand_vals(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * uniform01(rng) - 1.0;
  return v;
}

EncoderConfig bench_cfg() {
  EncoderConfig cfg;
  cfg.vocab_size = 200;
  cfg.d_p = 64;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.n_max = 64;
  return cfg;
}

TokenSequence bench_seq(int len) {
  TokenSequence seq;
  seq.ids.push_back(2);
  for (int i = 1; i < len; ++i) seq.ids.push_back(4 + i % 100);
  seq.real_len = len;
  return seq;
}

void BM_matmul_forward_backward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const auto av = rand_vals(rng, static_cast<std::size_t>(n) * n);
  const auto bv = rand_vals(rng, static_cast<std::size_t>(n) * n);
  for (auto _ : state) {
    Tape tape;
    Tensor a = tape.leaf({n, n}, av, true);
    Tensor b = tape.leaf({n, n}, bv, true);
    Tensor loss = sum(matmul(a, b));
    GradientMap g = tape.backward(loss);
    benchmark::DoNotOptimize(g.at(a.id()).front());
  }
  state.SetItemsProcessed(state.iterations() * 2 * static_cast<long>(n) * n * n);
}
BENCHMARK(BM_matmul_forward_backward)->Arg(32)->Arg(64)->Arg(128);

void BM_encoder_forward(benchmark::State& state) {
  EncoderConfig cfg = bench_cfg();
  ParamStore store;
  std::mt19937_64 rng(2);
  EncoderIds ids = make_encoder_params(store, cfg, rng);
  TokenSequence seq = bench_seq(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Tape tape;
    Binding P = bind_all(tape, store, false);
    EncodeOut out = encode_text(P, ids, cfg, seq);
    benchmark::DoNotOptimize(out.v_g.values().front());
  }
}
BENCHMARK(BM_encoder_forward)->Arg(12)->Arg(32);

void BM_encoder_train_step(benchmark::State& state) {
  EncoderConfig cfg = bench_cfg();
  ParamStore store;
  std::mt19937_64 rng(3);
  EncoderIds ids = make_encoder_params(store, cfg, rng);
  TokenSequence seq = bench_seq(12);
  for (auto _ : state) {
    Tape tape;
    Binding P = bind_all(tape, store, true);
    EncodeOut out = encode_text(P, ids, cfg, seq);
    Tensor v_l = local_encode(P, ids, cfg, out.H, out.real_len);
    Tensor loss = add(sum(fuse(out.v_g, v_l)), sum(out.H));
    GradientMap g = tape.backward(loss);
    benchmark::DoNotOptimize(g.size());
  }
}
BENCHMARK(BM_encoder_train_step)->Unit(benchmark::kMillisecond);

void BM_nt_xent(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::vector<std::vector<double>> zs, ze;
  for (int i = 0; i < n; ++i) {
    zs.push_back(rand_vals(rng, 300));
    ze.push_back(rand_vals(rng, 300));
  }
  for (auto _ : state) {
    Tape tape;
    std::vector<Tensor> a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(tape.leaf({300}, zs[static_cast<std::size_t>(i)], true));
      b.push_back(tape.leaf({300}, ze[static_cast<std::size_t>(i)], true));
    }
    Tensor loss = nt_xent(a, b, 0.1);
    GradientMap g = tape.backward(loss);
    benchmark::DoNotOptimize(g.size());
  }
}
BENCHMARK(BM_nt_xent)->Arg(8)->Arg(24);

}  // namespace

BENCHMARK_MAIN();
