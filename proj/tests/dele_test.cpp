#include <stdexcept>
#include <cmath>
#include <random>

#include "doctest.h"
#include "labelnet/dele.hpp"
#include "labelnet/gradcheck.hpp"

using namespace labelnet;

namespace {

struct Fixture {
  DeleDims dims{6, 5, 4, 4, 3};
  ParamStore store;
  DeleIds ids;
  Fixture() {
    std::mt19937_64 rng(77);
    ids = make_dele_heads(store, dims, rng);
  }
  Binding bind(Tape& tape) { return bind_all(tape, store, false); }
};

std::vector<double> rand_vec(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * uniform01(rng) - 1.0;
  return v;
}

// plain-double NT-Xent, explicit loops, no tensor ops
double nt_xent_oracle(const std::vector<std::vector<double>>& zs,
                      const std::vector<std::vector<double>>& ze, double tau,
                      bool extra_negatives) {
  auto cos = [](const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += a[i] * b[i];
      aa += a[i] * a[i];
      bb += b[i] * b[i];
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb));
  };
  const std::size_t n = zs.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = std::exp(cos(zs[i], ze[i]) / tau);
    double denom = pos;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) denom += std::exp(cos(zs[i], zs[j]) / tau);
    if (extra_negatives)
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) denom += std::exp(cos(zs[i], ze[j]) / tau);
    total += -std::log(pos / denom);
  }
  return total / static_cast<double>(n);
}

}  // namespace

TEST_CASE("nt_xent with identical rows equals log N") {
  Tape tape;
  std::vector<Tensor> zs{tape.leaf({3}, {1, 2, 3}), tape.leaf({3}, {1, 2, 3})};
  std::vector<Tensor> ze = zs;
  CHECK(nt_xent(zs, ze, 0.1).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Tape t4;
  std::vector<Tensor> z4, e4;
  for (int i = 0; i < 4; ++i) z4.push_back(t4.leaf({3}, {1, 2, 3}));
  e4 = z4;
  CHECK(nt_xent(z4, e4, 0.7).item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("nt_xent closed form: aligned positives, orthogonal negatives") {
  // N = 2, tau = 0.1: -log(e^10 / (e^10 + 1)) = log(1 + e^-10)
  Tape tape;
  std::vector<Tensor> zs{tape.leaf({2}, {1, 0}), tape.leaf({2}, {0, 1})};
  std::vector<Tensor> ze{tape.leaf({2}, {2, 0}), tape.leaf({2}, {0, 3})};
  const double expected = std::log(1.0 + std::exp(-10.0));
  CHECK(nt_xent(zs, ze, 0.1).item() == doctest::Approx(expected).epsilon(1e-9));
  CHECK(expected == doctest::Approx(4.54e-5).epsilon(1e-2));
}

TEST_CASE("nt_xent strictly decreases as a positive similarity rises") {
  std::mt19937_64 rng(31);
  auto make = [&](double align) {
    Tape tape;
    std::vector<Tensor> zs{tape.leaf({2}, {1.0, 0.0}), tape.leaf({2}, {0.0, 1.0})};
    std::vector<Tensor> ze{tape.leaf({2}, {std::cos(align), std::sin(align)}),
                           tape.leaf({2}, {0.2, 0.9})};
    return nt_xent(zs, ze, 0.3).item();
  };
  CHECK(make(0.1) < make(0.5));
  CHECK(make(0.5) < make(1.2));
}

TEST_CASE("nt_xent is invariant to positive rescaling of all rows") {
  std::mt19937_64 rng(32);
  std::vector<std::vector<double>> zs, ze;
  for (int i = 0; i < 3; ++i) {
    zs.push_back(rand_vec(rng, 4));
    ze.push_back(rand_vec(rng, 4));
  }
  auto eval_scaled = [&](double c) {
    Tape tape;
    std::vector<Tensor> a, b;
    for (int i = 0; i < 3; ++i) {
      auto s = zs[static_cast<std::size_t>(i)];
      auto e = ze[static_cast<std::size_t>(i)];
      for (auto& x : s) x *= c;
      for (auto& x : e) x *= c;
      a.push_back(tape.leaf({4}, s));
      b.push_back(tape.leaf({4}, e));
    }
    return nt_xent(a, b, 0.2).item();
  };
  CHECK(eval_scaled(1.0) == doctest::Approx(eval_scaled(37.5)).epsilon(1e-12));
}

TEST_CASE("nt_xent matches the brute-force scalar oracle for N = 2..8") {
  std::mt19937_64 rng(33);
  for (int n = 2; n <= 8; ++n) {
    for (const bool extra : {false, true}) {
      std::vector<std::vector<double>> zs, ze;
      for (int i = 0; i < n; ++i) {
        zs.push_back(rand_vec(rng, 5));
        ze.push_back(rand_vec(rng, 5));
      }
      Tape tape;
      std::vector<Tensor> a, b;
      for (int i = 0; i < n; ++i) {
        a.push_back(tape.leaf({5}, zs[static_cast<std::size_t>(i)]));
        b.push_back(tape.leaf({5}, ze[static_cast<std::size_t>(i)]));
      }
      const double got = nt_xent(a, b, 0.4, extra).item();
      const double want = nt_xent_oracle(zs, ze, 0.4, extra);
      CHECK(std::abs(got - want) <= 1e-9);
    }
  }
}

TEST_CASE("nt_xent rejects degenerate inputs") {
  Tape tape;
  std::vector<Tensor> one{tape.leaf({2}, {1, 0})};
  CHECK_THROWS_AS(nt_xent(one, one, 0.1), std::invalid_argument);

  std::vector<Tensor> zs{tape.leaf({2}, {1, 0}), tape.leaf({2}, {0, 0})};
  std::vector<Tensor> ze{tape.leaf({2}, {1, 0}), tape.leaf({2}, {0, 1})};
  CHECK_THROWS_AS(nt_xent(zs, ze, 0.1), std::domain_error);  // zero-norm row
}

TEST_CASE("matrix nt_xent slices rows like the vector form") {
  std::mt19937_64 rng(34);
  std::vector<double> zs = rand_vec(rng, 12), ze = rand_vec(rng, 12);
  Tape tape;
  Tensor Zs = tape.leaf({3, 4}, zs);
  Tensor Ze = tape.leaf({3, 4}, ze);
  std::vector<Tensor> a, b;
  for (int i = 0; i < 3; ++i) {
    a.push_back(tape.leaf({4}, {zs.begin() + i * 4, zs.begin() + (i + 1) * 4}));
    b.push_back(tape.leaf({4}, {ze.begin() + i * 4, ze.begin() + (i + 1) * 4}));
  }
  CHECK(nt_xent(Zs, Ze, 0.5).item() == doctest::Approx(nt_xent(a, b, 0.5).item()));
}

TEST_CASE("s2l attention degenerate cases") {
  Fixture f;
  std::mt19937_64 rng(35);

  // m = 1: softmax over a singleton is 1, so h_e is the only row
  DeleDims d1 = f.dims;
  d1.m = 1;
  ParamStore store1;
  std::mt19937_64 r1(5);
  DeleIds ids1 = make_dele_heads(store1, d1, r1);
  Tape tape;
  Binding P = bind_all(tape, store1, false);
  auto row = rand_vec(rng, 6);
  Tensor E1 = tape.leaf({1, 6}, row);
  Tensor vg = tape.leaf({6}, rand_vec(rng, 6));
  auto out = s2l_attention(P, ids1, E1, vg);
  CHECK(out.context.values() == row);
  CHECK(out.weights.values() == std::vector<double>{1.0});

  // identical rows: any convex combination is that row
  Tape t2;
  Binding P2 = f.bind(t2);
  std::vector<double> same = rand_vec(rng, 6);
  std::vector<double> e3;
  for (int i = 0; i < 3; ++i) e3.insert(e3.end(), same.begin(), same.end());
  Tensor E3 = t2.leaf({3, 6}, e3);
  Tensor vg2 = t2.leaf({6}, rand_vec(rng, 6));
  auto out2 = s2l_attention(P2, f.ids, E3, vg2);
  for (int c = 0; c < 6; ++c)
    CHECK(out2.context.values()[static_cast<std::size_t>(c)] ==
          doctest::Approx(same[static_cast<std::size_t>(c)]).epsilon(1e-12));
}

TEST_CASE("s2l output stays inside the coordinate-wise hull of E") {
  Fixture f;
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 10; ++trial) {
    Tape tape;
    Binding P = f.bind(tape);
    Tensor E = tape.leaf({3, 6}, rand_vec(rng, 18));
    Tensor vg = tape.leaf({6}, rand_vec(rng, 6));
    auto out = s2l_attention(P, f.ids, E, vg);
    double wsum = 0.0;
    for (double w : out.weights.values()) {
      CHECK(w >= 0.0);
      wsum += w;
    }
    CHECK(std::abs(wsum - 1.0) <= 1e-9);
    for (int c = 0; c < 6; ++c) {
      double lo = 1e300, hi = -1e300;
      for (int r = 0; r < 3; ++r) {
        const double v = E.values()[static_cast<std::size_t>(r * 6 + c)];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double h = out.context.values()[static_cast<std::size_t>(c)];
      CHECK(h >= lo - 1e-12);
      CHECK(h <= hi + 1e-12);
    }
  }
}

TEST_CASE("l2s attention degenerate and structural cases") {
  Fixture f;
  std::mt19937_64 rng(37);

  SUBCASE("single word: every per-label context is that word") {
    Tape tape;
    Binding P = f.bind(tape);
    auto h1 = rand_vec(rng, 6);
    Tensor H = tape.leaf({1, 6}, h1);
    Tensor E = tape.leaf({3, 6}, rand_vec(rng, 18));
    auto out = l2s_attention(P, f.ids, H, 1, E);
    for (int c = 0; c < 6; ++c)
      CHECK(out.context.values()[static_cast<std::size_t>(c)] ==
            doctest::Approx(h1[static_cast<std::size_t>(c)]).epsilon(1e-12));
  }

  SUBCASE("single label: maxpool over one context is that context") {
    DeleDims d1 = f.dims;
    d1.m = 1;
    ParamStore store1;
    std::mt19937_64 r1(6);
    DeleIds ids1 = make_dele_heads(store1, d1, r1);
    Tape tape;
    Binding P = bind_all(tape, store1, false);
    Tensor H = tape.leaf({4, 6}, rand_vec(rng, 24));
    Tensor E = tape.leaf({1, 6}, rand_vec(rng, 6));
    auto out = l2s_attention(P, ids1, H, 4, E);
    // context must be the weights-weighted sum of rows
    const auto& w = out.weights.values();
    for (int c = 0; c < 6; ++c) {
      double want = 0.0;
      for (int i = 0; i < 4; ++i)
        want += w[static_cast<std::size_t>(i)] *
                H.values()[static_cast<std::size_t>(i * 6 + c)];
      CHECK(out.context.values()[static_cast<std::size_t>(c)] ==
            doctest::Approx(want).epsilon(1e-12));
    }
  }

  SUBCASE("merge is the elementwise max of the per-label contexts") {
    Tape tape;
    Binding P = f.bind(tape);
    Tensor H = tape.leaf({5, 6}, rand_vec(rng, 30));
    Tensor E = tape.leaf({3, 6}, rand_vec(rng, 18));
    auto out = l2s_attention(P, f.ids, H, 5, E);
    const auto& w = out.weights.values();  // 3 x 5
    for (int c = 0; c < 6; ++c) {
      double mx = -1e300;
      for (int t = 0; t < 3; ++t) {
        double ctx = 0.0;
        for (int i = 0; i < 5; ++i)
          ctx += w[static_cast<std::size_t>(t * 5 + i)] *
                 H.values()[static_cast<std::size_t>(i * 6 + c)];
        mx = std::max(mx, ctx);
      }
      CHECK(out.context.values()[static_cast<std::size_t>(c)] ==
            doctest::Approx(mx).epsilon(1e-12));
    }
  }

  SUBCASE("elementwise max of hand-set contexts") {
    Tape tape;
    Tensor a = tape.leaf({2}, {1, 0});
    Tensor b = tape.leaf({2}, {0, 1});
    CHECK(max_axis(stack({a, b}), 0).values() == std::vector<double>{1, 1});
  }

  SUBCASE("padding rows never influence the result") {
    Tape tape;
    Binding P = f.bind(tape);
    auto hvals = rand_vec(rng, 18);
    Tensor H3 = tape.leaf({3, 6}, hvals);
    auto padded = hvals;
    padded.resize(30, 0.0);
    Tensor H5 = tape.leaf({5, 6}, padded);
    Tensor E = tape.leaf({3, 6}, rand_vec(rng, 18));
    auto out3 = l2s_attention(P, f.ids, H3, 3, E);
    auto out5 = l2s_attention(P, f.ids, H5, 3, E);
    CHECK(out3.context.values() == out5.context.values());
    CHECK(out3.weights.values() == out5.weights.values());
  }

  SUBCASE("fully masked input is an error") {
    Tape tape;
    Binding P = f.bind(tape);
    Tensor H = tape.leaf({3, 6}, rand_vec(rng, 18));
    Tensor E = tape.leaf({3, 6}, rand_vec(rng, 18));
    CHECK_THROWS_AS(l2s_attention(P, f.ids, H, 0, E), std::invalid_argument);
  }
}

TEST_CASE("projection shares parameters across both views") {
  Fixture f;
  std::mt19937_64 rng(38);
  Tape tape;
  Binding P = f.bind(tape);
  auto h = rand_vec(rng, 6);
  Tensor he = tape.leaf({6}, h);
  Tensor hs = tape.leaf({6}, h);
  CHECK(project(P, f.ids, he).values() == project(P, f.ids, hs).values());
}

TEST_CASE("projection with zero weights is the constant bias") {
  Fixture f;
  for (int id : {f.ids.proj_w1, f.ids.proj_w2, f.ids.proj_b1})
    std::fill(f.store.at(id).value.begin(), f.store.at(id).value.end(), 0.0);
  f.store.at(f.ids.proj_b2).value = {1.0, -2.0, 3.0, -4.0};
  std::mt19937_64 rng(39);
  Tape tape;
  Binding P = f.bind(tape);
  Tensor h = tape.leaf({6}, rand_vec(rng, 6));
  CHECK(project(P, f.ids, h).values() == std::vector<double>{1.0, -2.0, 3.0, -4.0});
}

TEST_CASE("dele_predict is a distribution with scale-invariant argmax") {
  Fixture f;
  std::mt19937_64 rng(40);
  Tape tape;
  Binding P = f.bind(tape);
  Tensor h = tape.leaf({6}, rand_vec(rng, 6));
  const auto probs = dele_predict(P, f.ids, h).values();
  double s = 0.0;
  for (double p : probs) s += p;
  CHECK(std::abs(s - 1.0) <= 1e-9);

  // positive rescaling of the final logits preserves the argmax
  for (int id : {f.ids.cls_w2, f.ids.cls_b2})
    for (auto& v : f.store.at(id).value) v *= 3.7;
  Tape t2;
  Binding P2 = f.bind(t2);
  Tensor h2 = t2.leaf({6}, h.values());
  const auto probs2 = dele_predict(P2, f.ids, h2).values();
  const auto arg = [](const std::vector<double>& p) {
    return std::max_element(p.begin(), p.end()) - p.begin();
  };
  CHECK(arg(probs) == arg(probs2));

  for (int id : {f.ids.cls_w1, f.ids.cls_b1, f.ids.cls_w2, f.ids.cls_b2})
    std::fill(f.store.at(id).value.begin(), f.store.at(id).value.end(), 0.0);
  Tape t3;
  Binding P3 = f.bind(t3);
  Tensor h3 = t3.leaf({6}, rand_vec(rng, 6));
  for (double p : dele_predict(P3, f.ids, h3).values())
    CHECK(p == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("dele_r2_predict: distribution, zeroed difference block") {
  Fixture f;
  std::mt19937_64 rng(41);
  Tape tape;
  Binding P = f.bind(tape);
  Tensor a = tape.leaf({6}, rand_vec(rng, 6));
  Tensor b = tape.leaf({6}, rand_vec(rng, 6));
  const auto probs = dele_r2_predict(P, f.ids, a, b).values();
  CHECK(std::abs(probs[0] + probs[1] - 1.0) <= 1e-9);

  // make the pair head read only the difference block; identical inputs
  // then produce one fixed output regardless of the vector
  auto& w1 = f.store.at(f.ids.r2_w1).value;
  const int cols = 4 * 6;
  std::fill(w1.begin(), w1.end(), 0.0);
  std::mt19937_64 rw(42);
  for (int r = 0; r < f.dims.d_3; ++r)
    for (int c = 3 * 6; c < cols; ++c)
      w1[static_cast<std::size_t>(r * cols + c)] = 2.0 * uniform01(rw) - 1.0;
  Tape t2;
  Binding P2 = f.bind(t2);
  Tensor x = t2.leaf({6}, rand_vec(rng, 6));
  Tensor y = t2.leaf({6}, rand_vec(rng, 6));
  CHECK(dele_r2_predict(P2, f.ids, x, x).values() ==
        dele_r2_predict(P2, f.ids, y, y).values());
}

TEST_CASE("dele_r2_predict agrees with an independent scalar evaluation") {
  DeleDims dims{2, 2, 2, 3, 2};
  ParamStore store;
  std::mt19937_64 rng(43);
  DeleIds ids = make_dele_heads(store, dims, rng);
  Tape tape;
  Binding P = bind_all(tape, store, false);
  const std::vector<double> h1{0.3, -0.7}, h2{-0.2, 0.9};
  Tensor a = tape.leaf({2}, h1);
  Tensor b = tape.leaf({2}, h2);
  const auto got = dele_r2_predict(P, ids, a, b).values();

  // plain loops over the same parameters
  std::vector<double> u{h1[0], h1[1], h2[0], h2[1], h1[0] * h2[0], h1[1] * h2[1],
                        h1[0] - h2[0], h1[1] - h2[1]};
  const auto& w1 = store.at(ids.r2_w1).value;
  const auto& b1 = store.at(ids.r2_b1).value;
  std::vector<double> hid(3, 0.0);
  for (int r = 0; r < 3; ++r) {
    double acc = b1[static_cast<std::size_t>(r)];
    for (int c = 0; c < 8; ++c) acc += w1[static_cast<std::size_t>(r * 8 + c)] * u[static_cast<std::size_t>(c)];
    hid[static_cast<std::size_t>(r)] = std::max(acc, 0.0);
  }
  const auto& w2 = store.at(ids.r2_w2).value;
  const auto& b2 = store.at(ids.r2_b2).value;
  std::vector<double> logits(2, 0.0);
  for (int r = 0; r < 2; ++r) {
    double acc = b2[static_cast<std::size_t>(r)];
    for (int c = 0; c < 3; ++c) acc += w2[static_cast<std::size_t>(r * 3 + c)] * hid[static_cast<std::size_t>(c)];
    logits[static_cast<std::size_t>(r)] = acc;
  }
  const double mx = std::max(logits[0], logits[1]);
  const double z = std::exp(logits[0] - mx) + std::exp(logits[1] - mx);
  for (int i = 0; i < 2; ++i)
    CHECK(got[static_cast<std::size_t>(i)] ==
          doctest::Approx(std::exp(logits[static_cast<std::size_t>(i)] - mx) / z)
              .epsilon(1e-12));
}

TEST_CASE("dele_loss arithmetic and ablation limits") {
  Tape tape;
  Tensor l1 = tape.leaf({1}, {0.8});
  Tensor l2 = tape.leaf({1}, {0.6});
  Tensor l3 = tape.leaf({1}, {0.4});
  CHECK(dele_loss(l1, l2, l3, {0.0, 0.0, 0.1}).item() == 0.4);  // exactly L3
  Tensor one1 = tape.leaf({1}, {1.0});
  Tensor one2 = tape.leaf({1}, {1.0});
  Tensor one3 = tape.leaf({1}, {1.0});
  CHECK(dele_loss(one1, one2, one3, {1.0, 1.0, 0.1}).item() == doctest::Approx(3.0));
  CHECK_THROWS_AS(dele_loss(l1, l2, l3, {-0.1, 0.0, 0.1}), std::invalid_argument);
}

namespace {

struct LabelEncFixture {
  EncoderConfig cfg;
  ParamStore store;
  EncoderIds enc;
  DeleIds dele;
  LabelEncFixture() {
    cfg.vocab_size = 12;
    cfg.d_p = 6;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.n_max = 8;
    cfg.ff_mult = 2;
    std::mt19937_64 rng(55);
    enc = make_encoder_params(store, cfg, rng);
    dele = make_dele_heads(store, {6, 5, 4, 4, 3}, rng);
  }
  TokenSequence seq(std::initializer_list<int> real) const {
    TokenSequence s;
    s.ids = real;
    s.real_len = static_cast<int>(s.ids.size());
    s.ids.resize(8, 0);
    return s;
  }
};

}  // namespace

TEST_CASE("encode_labels adds mean description vectors to the vanilla rows") {
  LabelEncFixture f;
  std::vector<std::vector<TokenSequence>> descs(3);
  descs[0] = {f.seq({2, 4, 5}), f.seq({2, 6})};
  descs[1] = {};
  descs[2] = {f.seq({2, 7, 8, 9})};

  Tape tape;
  Binding P = bind_all(tape, f.store, false);
  Tensor E = encode_labels(P, f.dele, f.enc, f.cfg, descs);
  REQUIRE(E.shape() == Shape{3, 6});

  // independent assembly from CLS outputs
  const auto& ef = f.store.at(f.dele.label_emb).value;
  auto cls = [&](const TokenSequence& s) { return encode_text(P, f.enc, f.cfg, s).v_g.values(); };
  const auto c0a = cls(descs[0][0]), c0b = cls(descs[0][1]), c2 = cls(descs[2][0]);
  for (int c = 0; c < 6; ++c) {
    CHECK(E.values()[static_cast<std::size_t>(c)] ==
          doctest::Approx(ef[static_cast<std::size_t>(c)] +
                          0.5 * (c0a[static_cast<std::size_t>(c)] +
                                 c0b[static_cast<std::size_t>(c)]))
              .epsilon(1e-12));
    CHECK(E.values()[static_cast<std::size_t>(6 + c)] ==
          doctest::Approx(ef[static_cast<std::size_t>(6 + c)]).epsilon(1e-12));
    CHECK(E.values()[static_cast<std::size_t>(12 + c)] ==
          doctest::Approx(ef[static_cast<std::size_t>(12 + c)] +
                          c2[static_cast<std::size_t>(c)])
              .epsilon(1e-12));
  }
}

TEST_CASE("encode_labels: zero vanilla embedding leaves the description mean") {
  LabelEncFixture f;
  std::fill(f.store.at(f.dele.label_emb).value.begin(),
            f.store.at(f.dele.label_emb).value.end(), 0.0);
  std::vector<std::vector<TokenSequence>> descs(3);
  descs[0] = {f.seq({2, 4, 5})};
  descs[1] = {f.seq({2, 6})};
  descs[2] = {f.seq({2, 7})};
  Tape tape;
  Binding P = bind_all(tape, f.store, false);
  Tensor E = encode_labels(P, f.dele, f.enc, f.cfg, descs);
  const auto c0 = encode_text(P, f.enc, f.cfg, descs[0][0]).v_g.values();
  for (int c = 0; c < 6; ++c)
    CHECK(E.values()[static_cast<std::size_t>(c)] ==
          doctest::Approx(c0[static_cast<std::size_t>(c)]).epsilon(1e-12));
}

TEST_CASE("encode_labels without descriptions is exactly the vanilla matrix") {
  LabelEncFixture f;
  std::vector<std::vector<TokenSequence>> descs(3);
  Tape tape;
  Binding P = bind_all(tape, f.store, false);
  Tensor E = encode_labels(P, f.dele, f.enc, f.cfg, descs);
  CHECK(E.values() == f.store.at(f.dele.label_emb).value);
}

TEST_CASE("duplicated descriptions do not move the mean") {
  LabelEncFixture f;
  std::vector<std::vector<TokenSequence>> once(3), twice(3);
  once[0] = {f.seq({2, 4, 5})};
  twice[0] = {f.seq({2, 4, 5}), f.seq({2, 4, 5})};
  Tape tape;
  Binding P = bind_all(tape, f.store, false);
  const auto e1 = encode_labels(P, f.dele, f.enc, f.cfg, once).values();
  const auto e2 = encode_labels(P, f.dele, f.enc, f.cfg, twice).values();
  for (std::size_t i = 0; i < e1.size(); ++i)
    CHECK(e1[i] == doctest::Approx(e2[i]).epsilon(1e-12));
}

TEST_CASE("encode_labels is permutation-equivariant over labels") {
  LabelEncFixture f;
  std::vector<std::vector<TokenSequence>> descs(3);
  descs[0] = {f.seq({2, 4})};
  descs[1] = {f.seq({2, 5})};
  descs[2] = {f.seq({2, 6})};

  Tape tape;
  Binding P = bind_all(tape, f.store, false);
  const auto base = encode_labels(P, f.dele, f.enc, f.cfg, descs).values();

  // permute rows of E_f and the description lists the same way: 2,0,1
  auto& ef = f.store.at(f.dele.label_emb).value;
  std::vector<double> permuted(18);
  const int perm[3] = {2, 0, 1};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 6; ++c)
      permuted[static_cast<std::size_t>(r * 6 + c)] =
          ef[static_cast<std::size_t>(perm[r] * 6 + c)];
  ef = permuted;
  std::vector<std::vector<TokenSequence>> pdescs{descs[2], descs[0], descs[1]};
  Tape t2;
  Binding P2 = bind_all(t2, f.store, false);
  const auto out = encode_labels(P2, f.dele, f.enc, f.cfg, pdescs).values();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 6; ++c)
      CHECK(out[static_cast<std::size_t>(r * 6 + c)] ==
            doctest::Approx(base[static_cast<std::size_t>(perm[r] * 6 + c)]).epsilon(1e-12));
}

TEST_CASE("cached label encoding matches the on-tape computation") {
  LabelEncFixture f;
  std::vector<std::vector<TokenSequence>> descs(3);
  descs[0] = {f.seq({2, 4, 5}), f.seq({2, 6})};
  descs[2] = {f.seq({2, 7})};
  Tape tape;
  Binding P = bind_all(tape, f.store, false);
  const auto live = encode_labels(P, f.dele, f.enc, f.cfg, descs).values();

  std::vector<std::vector<double>> means(3);
  for (int i = 0; i < 3; ++i) {
    if (descs[static_cast<std::size_t>(i)].empty()) continue;
    std::vector<double> acc(6, 0.0);
    for (const auto& s : descs[static_cast<std::size_t>(i)]) {
      const auto v = encode_text(P, f.enc, f.cfg, s).v_g.values();
      for (int c = 0; c < 6; ++c) acc[static_cast<std::size_t>(c)] += v[static_cast<std::size_t>(c)];
    }
    for (auto& x : acc) x /= static_cast<double>(descs[static_cast<std::size_t>(i)].size());
    means[static_cast<std::size_t>(i)] = acc;
  }
  const auto cached = encode_labels_cached(P, f.dele, means, 6).values();
  for (std::size_t i = 0; i < live.size(); ++i)
    CHECK(live[i] == doctest::Approx(cached[i]).epsilon(1e-12));
}
