#include <stdexcept>
#include <cmath>
#include <random>

#include "doctest.h"
#include "labelnet/gradcheck.hpp"
#include "labelnet/r2net.hpp"

using namespace labelnet;

namespace {

struct Fixture {
  R2NetDims dims{4, 5, 4, 3};  // vectors are 2*d_p = 8 wide
  ParamStore store;
  R2NetIds ids;
  Fixture() {
    std::mt19937_64 rng(42);
    ids = make_r2net_heads(store, dims, rng);
  }
  Binding bind(Tape& tape, bool grad = false) { return bind_all(tape, store, grad); }
};

std::vector<double> rand_vec(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * uniform01(rng) - 1.0;
  return v;
}

}  // namespace

TEST_CASE("predict_label returns a probability vector") {
  Fixture f;
  std::mt19937_64 rng(1);
  Tape tape;
  Binding P = f.bind(tape);
  Tensor v = tape.leaf({8}, rand_vec(rng, 8));
  Tensor probs = predict_label(P, f.ids, v);
  REQUIRE(probs.shape() == Shape{3});
  double s = 0.0;
  for (double p : probs.values()) {
    CHECK(p >= 0.0);
    s += p;
  }
  CHECK(std::abs(s - 1.0) <= 1e-9);
}

TEST_CASE("zero weights and biases give the uniform distribution") {
  Fixture f;
  for (int id : {f.ids.cls_w1, f.ids.cls_b1, f.ids.cls_w2, f.ids.cls_b2})
    std::fill(f.store.at(id).value.begin(), f.store.at(id).value.end(), 0.0);
  Tape tape;
  Binding P = f.bind(tape);
  Tensor v = tape.leaf({8}, {1, -2, 3, -4, 5, -6, 7, -8});
  Tensor probs = predict_label(P, f.ids, v);
  for (double p : probs.values()) CHECK(p == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("argmax is invariant to shifting all final-layer biases") {
  Fixture f;
  std::mt19937_64 rng(2);
  Tape tape;
  Binding P = f.bind(tape);
  Tensor v = tape.leaf({8}, rand_vec(rng, 8));
  const auto base = predict_label(P, f.ids, v).values();
  for (auto& b : f.store.at(f.ids.cls_b2).value) b += 7.5;
  Tape tape2;
  Binding P2 = f.bind(tape2);
  Tensor v2 = tape2.leaf({8}, v.values());
  const auto shifted = predict_label(P2, f.ids, v2).values();
  const auto arg = [](const std::vector<double>& p) {
    return std::max_element(p.begin(), p.end()) - p.begin();
  };
  CHECK(arg(base) == arg(shifted));
}

TEST_CASE("heuristic matching layout and symmetries") {
  Tape tape;
  Tensor a = tape.leaf({2}, {1, 2});
  Tensor u = heuristic_match(a, a);
  CHECK(u.values() == std::vector<double>{1, 2, 1, 2, 1, 4, 0, 0});

  Tensor zero = tape.leaf({2}, {0, 0});
  Tensor b = tape.leaf({2}, {3, -5});
  CHECK(heuristic_match(zero, b).values() == std::vector<double>{0, 0, 3, -5, 0, 0, -3, 5});

  // swapping arguments swaps the first two blocks and negates the last
  const auto uv = heuristic_match(a, b).values();
  const auto vu = heuristic_match(b, a).values();
  for (int i = 0; i < 2; ++i) {
    CHECK(uv[static_cast<std::size_t>(i)] == vu[static_cast<std::size_t>(i + 2)]);
    CHECK(uv[static_cast<std::size_t>(i + 2)] == vu[static_cast<std::size_t>(i)]);
    CHECK(uv[static_cast<std::size_t>(i + 4)] == vu[static_cast<std::size_t>(i + 4)]);
    CHECK(uv[static_cast<std::size_t>(i + 6)] == -vu[static_cast<std::size_t>(i + 6)]);
  }

  Tensor c = tape.leaf({3}, {0, 0, 0});
  CHECK_THROWS_AS(heuristic_match(a, c), std::invalid_argument);
}

TEST_CASE("r2_predict sums to one and collapses under zero transforms") {
  Fixture f;
  std::mt19937_64 rng(5);
  Tape tape;
  Binding P = f.bind(tape);
  Tensor v1 = tape.leaf({8}, rand_vec(rng, 8));
  Tensor v2 = tape.leaf({8}, rand_vec(rng, 8));
  const auto probs = r2_predict(P, f.ids, v1, v2).values();
  CHECK(std::abs(probs[0] + probs[1] - 1.0) <= 1e-9);

  for (int id : {f.ids.tr_w, f.ids.tr_b})
    std::fill(f.store.at(id).value.begin(), f.store.at(id).value.end(), 0.0);
  Tape tape2;
  Binding P2 = f.bind(tape2);
  Tensor a = tape2.leaf({8}, rand_vec(rng, 8));
  Tensor b = tape2.leaf({8}, rand_vec(rng, 8));
  Tensor c = tape2.leaf({8}, rand_vec(rng, 8));
  Tensor d = tape2.leaf({8}, rand_vec(rng, 8));
  CHECK(r2_predict(P2, f.ids, a, b).values() == r2_predict(P2, f.ids, c, d).values());
}

TEST_CASE("triplet distances: identical inputs, hand arithmetic, symmetry") {
  Fixture f;
  std::mt19937_64 rng(6);
  Tape tape;
  Binding P = f.bind(tape);
  Tensor v = tape.leaf({8}, rand_vec(rng, 8));
  Tensor w = tape.leaf({8}, rand_vec(rng, 8));
  auto [d_ap, d_an] = triplet_distances(P, f.ids, v, v, w);
  CHECK(d_ap.item() == 0.0);
  CHECK(d_an.item() >= 0.0);

  // post-transform unit vectors sit sqrt(2) apart
  Tape t2;
  Tensor e1 = t2.leaf({2}, {1, 0});
  Tensor e2 = t2.leaf({2}, {0, 1});
  CHECK(euclidean_distance(e1, e2).item() == doctest::Approx(std::sqrt(2.0)));

  auto [ab, ba] = std::pair{euclidean_distance(v, w).item(), euclidean_distance(w, v).item()};
  CHECK(ab == ba);
}

TEST_CASE("triplet hinge matches the tabulated cases") {
  Tape tape;
  Tensor d1 = tape.leaf({1}, {0.1});
  Tensor d2 = tape.leaf({1}, {0.5});
  CHECK(triplet_hinge(d1, d2, 0.2).item() == 0.0);  // satisfied margin
  CHECK(triplet_hinge(d2, d1, 0.2).item() == doctest::Approx(0.6));
}

TEST_CASE("eta = 1 reduces the loss to plain cross-entropy") {
  // independent scalar oracle on a 2-example batch
  Fixture f;
  std::mt19937_64 rng(7);
  Tape tape;
  Binding P = f.bind(tape);
  R2BatchOutputs out;
  std::vector<std::vector<double>> raw;
  for (int i = 0; i < 2; ++i) {
    Tensor v = tape.leaf({8}, rand_vec(rng, 8));
    out.label_probs.push_back(predict_label(P, f.ids, v));
    raw.push_back(out.label_probs.back().values());
  }
  out.labels = {2, 0};
  Tensor loss = r2net_loss(out, {1.0, 0.2});
  const double oracle =
      (-std::log(raw[0][2]) - std::log(raw[1][0])) / 2.0;
  CHECK(loss.item() == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("loss drops the pair and triplet terms only at eta = 1") {
  Fixture f;
  std::mt19937_64 rng(8);
  Tape tape;
  Binding P = f.bind(tape);
  R2BatchOutputs out;
  for (int i = 0; i < 2; ++i) {
    Tensor v = tape.leaf({8}, rand_vec(rng, 8));
    out.label_probs.push_back(predict_label(P, f.ids, v));
  }
  out.labels = {0, 1};
  CHECK_THROWS_AS(r2net_loss(out, {0.5, 0.2}), std::invalid_argument);  // no pairs given
}

TEST_CASE("total loss moves the right way under distance perturbations") {
  Fixture f;
  std::mt19937_64 rng(9);
  auto eval_with = [&](double dap, double dan) {
    Tape tape;
    Binding P = f.bind(tape);
    R2BatchOutputs out;
    for (int i = 0; i < 2; ++i) {
      Tensor v = tape.leaf({8}, rand_vec(rng, 8));
      out.label_probs.push_back(predict_label(P, f.ids, v));
    }
    out.labels = {0, 1};
    out.pair_probs.push_back(r2_predict(P, f.ids, tape.leaf({8}, rand_vec(rng, 8)),
                                        tape.leaf({8}, rand_vec(rng, 8))));
    out.pair_targets.push_back(0);
    out.triplet_dists.push_back({tape.leaf({1}, {dap}), tape.leaf({1}, {dan})});
    return r2net_loss(out, {0.5, 0.2}).item();
  };
  const auto rng_state = rng;
  const double base = eval_with(0.4, 0.3);
  rng = rng_state;
  const double worse_ap = eval_with(0.5, 0.3);  // larger d_ap
  rng = rng_state;
  const double better_an = eval_with(0.4, 0.9);  // larger d_an
  CHECK(worse_ap >= base);
  CHECK(better_an <= base);
}

TEST_CASE("full r2net loss passes grad_check on a toy batch") {
  // assembled from head inputs only; the end-to-end variant lives in the
  // gradcheck suite
  Fixture f;
  std::mt19937_64 rng(10);
  std::vector<GradCheckLeaf> leaves;
  for (std::size_t i = 0; i < f.store.size(); ++i)
    leaves.push_back({f.store.at(static_cast<int>(i)).shape,
                      f.store.at(static_cast<int>(i)).value});
  for (int i = 0; i < 6; ++i) leaves.push_back({Shape{8}, rand_vec(rng, 8)});
  const auto ids = f.ids;
  const auto nstore = f.store.size();
  const double err = grad_check(
      [ids, nstore](Tape&, const std::vector<Tensor>& x) {
        Binding P(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nstore));
        R2BatchOutputs out;
        for (int i = 0; i < 6; ++i)
          out.label_probs.push_back(predict_label(P, ids, x[nstore + i]));
        out.labels = {0, 1, 2, 0, 1, 2};
        for (int j = 0; j < 3; ++j) {
          out.pair_probs.push_back(r2_predict(P, ids, x[nstore + 2 * j], x[nstore + 2 * j + 1]));
          out.pair_targets.push_back(j % 2);
        }
        out.triplet_dists.push_back(
            triplet_distances(P, ids, x[nstore], x[nstore + 3], x[nstore + 1]));
        out.triplet_dists.push_back(
            triplet_distances(P, ids, x[nstore + 2], x[nstore + 5], x[nstore + 4]));
        return r2net_loss(out, {0.4, 0.2});
      },
      leaves);
  CHECK(err <= 1e-3);
}
