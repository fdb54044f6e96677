// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Training-based checks generate their corpora under the system temp dir.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "labelnet/checkpoint.hpp"
#include "labelnet/gradcheck.hpp"
#include "labelnet/train.hpp"

using namespace labelnet;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("%-5s %s  %s\n", id.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

fs::path work_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("labelnet_accept_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// AC-1: gradient suite over all primitives and heads, 3 seeds
// ---------------------------------------------------------------------------

void ac1() {
  const double t0 = now_seconds();
  const auto results = run_gradcheck_suite("", 3);
  const double elapsed = now_seconds() - t0;
  int bad = 0;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : results) {
    if (!r.pass()) {
      ++bad;
      std::printf("      gradcheck FAIL: %s err %.3e tol %.0e\n", r.name.c_str(),
                  r.max_rel_error, r.threshold);
    }
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_name = r.name;
    }
  }
  std::ostringstream os;
  os << results.size() << " checks, worst " << worst_name << " at " << worst << ", "
     << elapsed << "s";
  report("AC-1", bad == 0 && elapsed <= 120.0 && !results.empty(), os.str());
}

// ---------------------------------------------------------------------------
// AC-2: loss oracles
// ---------------------------------------------------------------------------

double nt_xent_scalar_oracle(const std::vector<std::vector<double>>& zs,
                             const std::vector<std::vector<double>>& ze, double tau) {
  auto cosv = [](const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += a[i] * b[i];
      aa += a[i] * a[i];
      bb += b[i] * b[i];
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb));
  };
  double total = 0.0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const double pos = std::exp(cosv(zs[i], ze[i]) / tau);
    double denom = pos;
    for (std::size_t j = 0; j < zs.size(); ++j)
      if (j != i) denom += std::exp(cosv(zs[i], zs[j]) / tau);
    total += -std::log(pos / denom);
  }
  return total / static_cast<double>(zs.size());
}

void ac2() {
  std::mt19937_64 rng(202);
  bool ok = true;
  std::ostringstream os;

  double worst_nt = 0.0;
  for (int n = 2; n <= 8; ++n) {
    std::vector<std::vector<double>> zs, ze;
    for (int i = 0; i < n; ++i) {
      std::vector<double> a(6), b(6);
      for (auto& x : a) x = 2.0 * uniform01(rng) - 1.0;
      for (auto& x : b) x = 2.0 * uniform01(rng) - 1.0;
      zs.push_back(a);
      ze.push_back(b);
    }
    Tape tape;
    std::vector<Tensor> ts, te;
    for (int i = 0; i < n; ++i) {
      ts.push_back(tape.leaf({6}, zs[static_cast<std::size_t>(i)]));
      te.push_back(tape.leaf({6}, ze[static_cast<std::size_t>(i)]));
    }
    const double diff =
        std::abs(nt_xent(ts, te, 0.3).item() - nt_xent_scalar_oracle(zs, ze, 0.3));
    worst_nt = std::max(worst_nt, diff);
  }
  ok = ok && worst_nt <= 1e-9;
  os << "nt_xent vs oracle " << worst_nt;

  {
    Tape tape;
    Tensor lo = tape.leaf({1}, {0.1});
    Tensor hi = tape.leaf({1}, {0.5});
    const double satisfied = triplet_hinge(lo, hi, 0.2).item();
    const double violated = triplet_hinge(hi, lo, 0.2).item();
    ok = ok && satisfied == 0.0 && std::abs(violated - 0.6) <= 1e-15;
    os << "; hinge " << satisfied << "/" << violated;
  }

  {
    Tape tape;
    std::vector<Tensor> probs;
    std::vector<int> targets;
    double scalar_ce = 0.0;
    for (int i = 0; i < 5; ++i) {
      std::vector<double> logits(4);
      for (auto& x : logits) x = 4.0 * uniform01(rng) - 2.0;
      Tensor p = softmax(tape.leaf({4}, logits), 0);
      probs.push_back(p);
      targets.push_back(static_cast<int>(rng() % 4));
      scalar_ce += -std::log(p.values()[static_cast<std::size_t>(targets.back())]);
    }
    scalar_ce /= 5.0;
    const double diff = std::abs(cross_entropy_mean(probs, targets).item() - scalar_ce);
    ok = ok && diff <= 1e-12;
    os << "; ce " << diff;
  }
  report("AC-2", ok, os.str());
}

// ---------------------------------------------------------------------------
// AC-3: Eq.-2 exactness over 1e5 pairs plus triplet label patterns
// ---------------------------------------------------------------------------

void ac3() {
  std::mt19937_64 rng(303);
  Vocab vocab = build_vocab({"w0 w1 w2 w3"}, 1);
  long pairs_seen = 0, violations = 0, triplet_violations = 0, triplets_seen = 0;
  std::vector<Example> pool;
  for (int i = 0; i < 24; ++i) pool.push_back({"p" + std::to_string(i), "w0 w1", "", false, 0});
  while (pairs_seen < 100000) {
    for (auto& ex : pool) ex.label = static_cast<int>(rng() % 5);
    std::vector<int> idx(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) idx[i] = static_cast<int>(i);
    Batch b = make_batch(pool, idx, vocab, 8, rng);
    for (const auto& pr : b.pairs) {
      const int want = b.labels[static_cast<std::size_t>(pr.a)] ==
                               b.labels[static_cast<std::size_t>(pr.b)]
                           ? 1
                           : 0;
      if (pr.target != want) ++violations;
      ++pairs_seen;
    }
    for (const auto& tr : b.triplets) {
      ++triplets_seen;
      if (b.labels[static_cast<std::size_t>(tr.anchor)] !=
              b.labels[static_cast<std::size_t>(tr.positive)] ||
          b.labels[static_cast<std::size_t>(tr.anchor)] ==
              b.labels[static_cast<std::size_t>(tr.negative)])
        ++triplet_violations;
    }
  }
  std::ostringstream os;
  os << pairs_seen << " pairs, " << violations << " violations; " << triplets_seen
     << " triplets, " << triplet_violations << " violations";
  report("AC-3", violations == 0 && triplet_violations == 0 && triplets_seen > 0, os.str());
}

// ---------------------------------------------------------------------------
// AC-4: synthetic learnability with the default configuration
// ---------------------------------------------------------------------------

struct Ac4Result {
  Model model;
  fs::path data_dir;
  bool ok = false;
};

Ac4Result ac4() {
  fs::path dir = work_dir("ac4");
  SynthSpec spec;
  spec.classes = 4;
  spec.vocab_size = 200;
  spec.per_class = 500;  // 2000 train, 500 dev, 500 test
  spec.overlap = 0.0;
  spec.seed = 404;
  gen_synthetic(spec, dir.string());

  Ac4Result out;
  out.data_dir = dir;
  bool all_ok = true;
  for (const ModelKind kind : {ModelKind::kDele, ModelKind::kR2Net}) {
    TrainConfig cfg;  // defaults throughout
    cfg.model = kind;
    cfg.train_data = (dir / "train.jsonl").string();
    cfg.dev_data = (dir / "dev.jsonl").string();
    cfg.label_desc = (dir / "labels.json").string();
    const double t0 = now_seconds();
    Model model;
    TrainResult res = train(cfg, &model);
    const double elapsed = now_seconds() - t0;
    Dataset test = load_dataset_for(model, (dir / "test.jsonl").string());
    Metrics m = evaluate(model, test, cfg.eval_pair_seed);
    const bool ok = m.accuracy >= 0.95 && m.r2_accuracy >= 0.90 && elapsed <= 300.0 &&
                    static_cast<int>(res.history.size()) <= 20;
    all_ok = all_ok && ok;
    std::ostringstream os;
    os << (kind == ModelKind::kDele ? "dele" : "r2net") << " test acc " << m.accuracy
       << ", pair acc " << m.r2_accuracy << ", " << res.history.size() << " epochs, "
       << elapsed << "s";
    std::printf("      %s\n", os.str().c_str());
    if (kind == ModelKind::kDele) out.model = std::move(model);
  }
  report("AC-4", all_ok, "both architectures >= 0.95 accuracy, pair accuracy >= 0.90");
  out.ok = all_ok;
  return out;
}

// ---------------------------------------------------------------------------
// AC-5: ablation directions on an overlap-0.5 corpus, 3 seeds
// ---------------------------------------------------------------------------

void ac5() {
  fs::path dir = work_dir("ac5");
  SynthSpec spec;
  spec.classes = 4;
  spec.vocab_size = 160;
  spec.per_class = 150;  // 600 train, 148 dev
  spec.overlap = 0.5;
  spec.seed = 505;
  gen_synthetic(spec, dir.string());

  auto base_cfg = [&](std::uint64_t seed) {
    TrainConfig cfg;
    cfg.model = ModelKind::kDele;
    // scaled-down heads keep the nine runs quick; the mechanism under test
    // is the loss wiring, not capacity
    cfg.d_m = 64;
    cfg.d_2 = 64;
    cfg.d_3 = 64;
    cfg.epochs = 8;
    cfg.batch_size = 24;
    cfg.seed = seed;
    cfg.train_data = (dir / "train.jsonl").string();
    cfg.dev_data = (dir / "dev.jsonl").string();
    cfg.label_desc = (dir / "labels.json").string();
    return cfg;
  };

  double full_sum = 0.0, plain_sum = 0.0, he_sum = 0.0;
  for (std::uint64_t seed : {11ULL, 22ULL, 33ULL}) {
    TrainConfig full = base_cfg(seed);
    full_sum += train(full).final_dev.accuracy;

    TrainConfig plain = base_cfg(seed);
    plain.delta = 0.0;
    plain.mu = 0.0;
    plain_sum += train(plain).final_dev.accuracy;

    TrainConfig he = base_cfg(seed);
    he.classifier_input = ClassifierInput::kTextSupervised;
    he.mutual_interaction = false;
    he_sum += train(he).final_dev.accuracy;
  }
  const double full_acc = full_sum / 3.0, plain_acc = plain_sum / 3.0,
               he_acc = he_sum / 3.0;
  const bool direction_ok = full_acc >= plain_acc - 0.005;
  const bool collapse_ok = he_acc <= 0.25 + 0.10;
  std::ostringstream os;
  os << "full " << full_acc << " vs no-aux " << plain_acc << " (need >= -0.5pt); "
     << "h_e-only w/o interaction " << he_acc << " (need <= 0.35)";
  report("AC-5", direction_ok && collapse_ok, os.str());
}

// ---------------------------------------------------------------------------
// AC-6: error-rate-reduction convention
// ---------------------------------------------------------------------------

void ac6() {
  char buf1[32], buf2[32];
  std::snprintf(buf1, sizeof buf1, "%+.2f%%", error_rate_reduction(0.903, 0.911));
  std::snprintf(buf2, sizeof buf2, "%+.2f%%", error_rate_reduction(0.903, 0.913));
  const bool ok = std::string(buf1) == "+8.25%" && std::string(buf2) == "+10.31%";
  report("AC-6", ok, std::string(buf1) + " and " + std::string(buf2));
}

// ---------------------------------------------------------------------------
// AC-7: learning-rate schedule shape
// ---------------------------------------------------------------------------

void ac7() {
  const double C = 1000.0, w = 0.1;
  const double wc = w * C;
  bool ok = std::abs(lr_factor(wc, C, w) - 1.0) <= 1e-12 &&
            std::abs(lr_factor(wc - 1.0, C, w) - 1.0) <= 1e-12 &&
            lr_factor(C, C, w) == 0.0;
  const double lr_at_end = lr_factor(C, C, w) * (1.0 - 1e-6) + 1e-6;
  ok = ok && std::abs(lr_at_end - 1e-6) <= 1e-18;
  double prev = 2.0;
  for (int i = 0; i <= 1000; ++i) {
    const double f = lr_factor(i, C, w);
    if (f < 0.0 || f > 1.0) ok = false;
    if (i > wc) {
      if (f > prev + 1e-15) ok = false;
      prev = f;
    }
  }
  std::ostringstream os;
  os << "crest " << lr_factor(wc, C, w) << ", end factor " << lr_factor(C, C, w)
     << ", end lr " << lr_at_end;
  report("AC-7", ok, os.str());
}

// ---------------------------------------------------------------------------
// AC-8: intra/inter class separation of exported embeddings
// ---------------------------------------------------------------------------

void ac8(const Ac4Result& ac4res) {
  if (!ac4res.model.params.size()) {
    report("AC-8", false, "skipped: AC-4 model unavailable");
    return;
  }
  Dataset test = load_dataset_for(ac4res.model, (ac4res.data_dir / "test.jsonl").string());
  const fs::path csv = ac4res.data_dir / "embeddings.csv";
  export_embeddings(ac4res.model, test, csv.string());

  std::ifstream is(csv);
  std::string line;
  std::getline(is, line);  // header
  std::vector<std::vector<double>> vecs;
  std::vector<std::string> labels;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // id
    std::getline(ss, cell, ',');
    labels.push_back(cell);
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    vecs.push_back(std::move(v));
  }
  auto cos_dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += a[i] * b[i];
      aa += a[i] * a[i];
      bb += b[i] * b[i];
    }
    return 1.0 - ab / (std::sqrt(aa) * std::sqrt(bb));
  };
  double intra = 0.0, inter = 0.0;
  long n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < vecs.size(); ++i)
    for (std::size_t j = i + 1; j < vecs.size(); ++j) {
      const double d = cos_dist(vecs[i], vecs[j]);
      if (labels[i] == labels[j]) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  intra /= static_cast<double>(n_intra);
  inter /= static_cast<double>(n_inter);
  std::ostringstream os;
  os << "mean intra " << intra << ", mean inter " << inter << " over " << vecs.size()
     << " embeddings";
  report("AC-8", intra + 0.05 <= inter, os.str());
}

// ---------------------------------------------------------------------------
// AC-9: determinism of metric streams and checkpoints
// ---------------------------------------------------------------------------

void ac9() {
  fs::path dir = work_dir("ac9");
  SynthSpec spec;
  spec.classes = 3;
  spec.vocab_size = 80;
  spec.per_class = 24;
  spec.seed = 909;
  gen_synthetic(spec, dir.string());

  TrainConfig cfg;
  cfg.model = ModelKind::kDele;
  cfg.d_p = 16;
  cfg.d_m = 16;
  cfg.d_a = 8;
  cfg.d_2 = 16;
  cfg.d_3 = 16;
  cfg.epochs = 3;
  cfg.batch_size = 12;
  cfg.seed = 77;
  cfg.train_data = (dir / "train.jsonl").string();
  cfg.dev_data = (dir / "dev.jsonl").string();
  cfg.label_desc = (dir / "labels.json").string();

  cfg.checkpoint_dir = (dir / "run").string();
  TrainResult r1 = train(cfg);
  const std::string c1 = read_file(dir / "run" / "best.ckpt");
  TrainResult r2 = train(cfg);  // identical config and seed, fresh run
  const std::string c2 = read_file(dir / "run" / "best.ckpt");

  // wall-clock is the only nondeterministic field and is excluded
  const bool streams = metrics_to_jsonl(r1.history, false) == metrics_to_jsonl(r2.history, false);
  const bool ckpt = !c1.empty() && c1 == c2;
  report("AC-9", streams && ckpt,
         std::string("metric streams ") + (streams ? "identical" : "differ") +
             ", checkpoints " + (ckpt ? "byte-identical" : "differ"));
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  ac1();
  ac2();
  ac3();
  ac6();
  ac7();
  ac9();
  Ac4Result r4 = ac4();
  ac8(r4);
  ac5();
  if (g_failures) std::printf("%d criterion(s) FAILED\n", g_failures);
  else std::printf("all criteria passed\n");
  return g_failures == 0 ? 0 : 1;
}
