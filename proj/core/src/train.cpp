#include "labelnet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "labelnet/checkpoint.hpp"

namespace labelnet {

namespace {

constexpr double kPi = 3.14159265358979323846;

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::mt19937_64 epoch_rng(std::uint64_t seed, int epoch) {
  return std::mt19937_64(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1)));
}

void shuffle_indices(std::vector<int>& idx, std::mt19937_64& rng) {
  for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i)
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(i + 1))]);
}

}  // namespace

Model build_model(const TrainConfig& cfg, Vocab vocab, LabelSet labels) {
  cfg.validate();
  if (labels.size() < 2) throw std::invalid_argument("build_model: need at least 2 labels");
  Model m;
  m.cfg = cfg;
  m.vocab = std::move(vocab);
  m.labels = std::move(labels);
  m.enc_cfg.vocab_size = m.vocab.size();
  m.enc_cfg.d_p = cfg.d_p;
  m.enc_cfg.layers = cfg.layers;
  m.enc_cfg.heads = cfg.heads;
  m.enc_cfg.n_max = cfg.n_max;
  m.enc_cfg.ff_mult = cfg.ff_mult;
  m.enc_cfg.kernel_sizes = cfg.kernels;
  m.enc_cfg.use_positions = cfg.use_positions;
  m.enc_cfg.alpha_softmax = cfg.alpha_softmax;
  m.enc_cfg.mix_layers = cfg.mix_layers;

  std::mt19937_64 rng(cfg.seed);
  m.enc = make_encoder_params(m.params, m.enc_cfg, rng);
  if (cfg.model == ModelKind::kR2Net) {
    m.r2 = make_r2net_heads(m.params, {cfg.d_p, cfg.d_m, cfg.d_2, m.labels.size()}, rng);
  } else {
    m.dele = make_dele_heads(m.params, {cfg.d_p, cfg.d_a, cfg.d_2, cfg.d_3, m.labels.size()},
                             rng);
  }
  for (const auto& descs : m.labels.descriptions) {
    std::vector<TokenSequence> seqs;
    seqs.reserve(descs.size());
    for (const auto& d : descs) seqs.push_back(tokenize(d, m.vocab, cfg.n_max));
    m.desc_seqs.push_back(std::move(seqs));
  }
  return m;
}

double lr_factor(double i, double total_batches, double warmup_frac) {
  if (total_batches <= 0.0) throw std::invalid_argument("lr_factor: total must be positive");
  if (i < 0.0 || i > total_batches)
    throw std::invalid_argument("lr_factor: batch index " + std::to_string(i) +
                                " outside [0, " + std::to_string(total_batches) + "]");
  const double wc = warmup_frac * total_batches;
  if (warmup_frac >= 1.0)  // degenerate: warmup branch only
    return 0.5 * std::cos(kPi / wc * (i - wc + 1.0)) + 0.5;
  if (warmup_frac <= 0.0 || i >= wc) {
    const double f = 0.5 * std::cos(kPi / (total_batches - wc) * (i - wc)) + 0.5;
    return f * f;
  }
  return 0.5 * std::cos(kPi / wc * (i - wc + 1.0)) + 0.5;
}

double error_rate_reduction(double acc_backbone, double acc_model) {
  if (acc_backbone <= 0.0 || acc_backbone >= 1.0 || acc_model <= 0.0 || acc_model >= 1.0)
    throw std::invalid_argument(
        "error_rate_reduction: accuracies must lie in (0,1); the backbone error rate "
        "vanishes at 1");
  return ((1.0 - acc_backbone) - (1.0 - acc_model)) / (1.0 - acc_backbone) * 100.0;
}

// ---------------------------------------------------------------------------
// Batch forward passes
// ---------------------------------------------------------------------------

namespace {

struct BatchStats {
  double loss = 0.0, cls = 0.0, pair = 0.0, aux = 0.0;
  int correct = 0;
  int count = 0;
};

int count_correct(const std::vector<Tensor>& probs, const std::vector<int>& labels) {
  int correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (argmax(probs[i].values()) == labels[i]) ++correct;
  return correct;
}

Tensor r2net_batch_forward(const Model& m, const Binding& P, const Batch& batch,
                           BatchStats* st) {
  const int n = batch.size();
  R2BatchOutputs out;
  std::vector<Tensor> vs;
  vs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    EncodeOut e = encode_text(P, m.enc, m.enc_cfg, batch.tokens[static_cast<std::size_t>(i)]);
    Tensor v_l = local_encode(P, m.enc, m.enc_cfg, e.H, e.real_len);
    vs.push_back(fuse(e.v_g, v_l));
    out.label_probs.push_back(predict_label(P, m.r2, vs.back()));
  }
  out.labels = batch.labels;
  const R2LossWeights w{m.cfg.eta, m.cfg.margin};
  Tensor loss;
  if (m.cfg.eta < 1.0) {
    for (const auto& pr : batch.pairs) {
      out.pair_probs.push_back(r2_predict(P, m.r2, vs[static_cast<std::size_t>(pr.a)],
                                          vs[static_cast<std::size_t>(pr.b)]));
      out.pair_targets.push_back(pr.target);
    }
    if (m.cfg.r2_distance_loss == DistanceLoss::kTriplet) {
      for (const auto& tr : batch.triplets)
        out.triplet_dists.push_back(triplet_distances(P, m.r2,
                                                      vs[static_cast<std::size_t>(tr.anchor)],
                                                      vs[static_cast<std::size_t>(tr.positive)],
                                                      vs[static_cast<std::size_t>(tr.negative)]));
      loss = r2net_loss(out, w);
      if (st) {
        double aux = 0.0;
        for (const auto& [dap, dan] : out.triplet_dists)
          aux += std::max(dap.item() - dan.item() + w.margin, 0.0);
        st->aux = out.triplet_dists.empty() ? 0.0
                                            : aux / static_cast<double>(out.triplet_dists.size());
      }
    } else {
      // ablation: NT-Xent over the triplet transforms instead of the hinge
      Tensor l_s = cross_entropy_mean(out.label_probs, out.labels);
      Tensor l_r2 = cross_entropy_mean(out.pair_probs, out.pair_targets);
      Tensor aux = P[0].tape()->constant(0.0);
      if (batch.triplets.size() >= 2) {
        std::vector<Tensor> za, zp;
        for (const auto& tr : batch.triplets) {
          za.push_back(relu(affine_vec(vs[static_cast<std::size_t>(tr.anchor)], P[m.r2.dist_w],
                                       P[m.r2.dist_b])));
          zp.push_back(relu(affine_vec(vs[static_cast<std::size_t>(tr.positive)],
                                       P[m.r2.dist_w], P[m.r2.dist_b])));
        }
        aux = nt_xent(za, zp, m.cfg.tau, m.cfg.ntxent_extra_negatives);
      }
      loss = add(smul(l_s, w.eta), smul(add(l_r2, aux), 1.0 - w.eta));
      if (st) st->aux = aux.item();
    }
  } else {
    loss = r2net_loss(out, w);
  }
  if (st) {
    st->count = n;
    st->correct = count_correct(out.label_probs, out.labels);
    double cls = 0.0;
    for (int i = 0; i < n; ++i)
      cls -= std::log(std::max(
          out.label_probs[static_cast<std::size_t>(i)].values()[static_cast<std::size_t>(
              batch.labels[static_cast<std::size_t>(i)])],
          1e-12));
    st->cls = cls / n;
    if (!out.pair_probs.empty()) {
      double pl = 0.0;
      for (std::size_t j = 0; j < out.pair_probs.size(); ++j)
        pl -= std::log(std::max(
            out.pair_probs[j].values()[static_cast<std::size_t>(out.pair_targets[j])], 1e-12));
      st->pair = pl / static_cast<double>(out.pair_probs.size());
    }
    st->loss = loss.item();
  }
  return loss;
}

Tensor dele_label_matrix(const Model& m, const Binding& P,
                         const std::vector<std::vector<double>>* cached_desc) {
  if (cached_desc)
    return encode_labels_cached(P, m.dele, *cached_desc, m.cfg.d_p);
  return encode_labels(P, m.dele, m.enc, m.enc_cfg, m.desc_seqs);
}

Tensor dele_batch_forward(const Model& m, const Binding& P, const Batch& batch,
                          const std::vector<std::vector<double>>* cached_desc,
                          BatchStats* st) {
  Tensor E = dele_label_matrix(m, P, cached_desc);
  const int n = batch.size();
  const bool guided = m.cfg.mutual_interaction;
  const bool need_cl = m.cfg.delta > 0.0;
  std::vector<Tensor> he, hs, zs, ze, probs;
  he.reserve(static_cast<std::size_t>(n));
  hs.reserve(static_cast<std::size_t>(n));
  probs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    EncodeOut e = encode_text(P, m.enc, m.enc_cfg, batch.tokens[static_cast<std::size_t>(i)]);
    he.push_back(s2l_attention(P, m.dele, E, e.v_g, guided).context);
    hs.push_back(l2s_attention(P, m.dele, e.H, e.real_len, E, guided).context);
    if (need_cl) {
      zs.push_back(project(P, m.dele, hs.back()));
      ze.push_back(project(P, m.dele, he.back()));
    }
    probs.push_back(dele_predict(P, m.dele,
                                 m.cfg.classifier_input == ClassifierInput::kLabelSupervised
                                     ? hs.back()
                                     : he.back()));
  }
  Tape* tape = E.tape();
  Tensor l3 = cross_entropy_mean(probs, batch.labels);
  Tensor l1 = need_cl && n >= 2 ? nt_xent(zs, ze, m.cfg.tau, m.cfg.ntxent_extra_negatives)
                                : tape->constant(0.0);
  Tensor l2 = tape->constant(0.0);
  if (m.cfg.mu > 0.0 && !batch.pairs.empty()) {
    std::vector<Tensor> pp;
    std::vector<int> pt;
    for (const auto& pr : batch.pairs) {
      pp.push_back(dele_r2_predict(P, m.dele, he[static_cast<std::size_t>(pr.a)],
                                   he[static_cast<std::size_t>(pr.b)]));
      pt.push_back(pr.target);
    }
    l2 = cross_entropy_mean(pp, pt);
  }
  Tensor loss = dele_loss(l1, l2, l3, {m.cfg.delta, m.cfg.mu, m.cfg.tau});
  if (st) {
    st->count = n;
    st->correct = count_correct(probs, batch.labels);
    st->cls = l3.item();
    st->pair = l2.item();
    st->aux = l1.item();
    st->loss = loss.item();
  }
  return loss;
}

// Mean CLS vector per label description set under the current parameters,
// computed without gradients (freeze/caching mode).
std::vector<std::vector<double>> cache_description_means(const Model& m) {
  std::vector<std::vector<double>> out;
  Tape tape;
  Binding P = bind_all(tape, m.params, false);
  for (const auto& seqs : m.desc_seqs) {
    if (seqs.empty()) {
      out.emplace_back();
      continue;
    }
    std::vector<double> acc(static_cast<std::size_t>(m.cfg.d_p), 0.0);
    for (const auto& seq : seqs) {
      const auto& v = encode_text(P, m.enc, m.enc_cfg, seq).v_g.values();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
    }
    for (auto& x : acc) x /= static_cast<double>(seqs.size());
    out.push_back(std::move(acc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct AdamState {
  std::vector<std::vector<double>> m, v;
  long t = 0;
};

void adam_init(AdamState& st, const ParamStore& params) {
  st.m.resize(params.size());
  st.v.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i].assign(params.at(static_cast<int>(i)).value.size(), 0.0);
    st.v[i].assign(params.at(static_cast<int>(i)).value.size(), 0.0);
  }
}

void adam_step(ParamStore& params, const Binding& P, const GradientMap& grads, AdamState& st,
               const TrainConfig& cfg, double lr_mult) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  ++st.t;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = params.at(static_cast<int>(i));
    const auto& g = grads.at(P[i].id());
    const bool enc = p.group == ParamGroup::kEncoder;
    const double lr = (enc ? cfg.lr1 : cfg.lr2) * lr_mult;
    auto& mi = st.m[i];
    auto& vi = st.v[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      mi[j] = kBeta1 * mi[j] + (1.0 - kBeta1) * g[j];
      vi[j] = kBeta2 * vi[j] + (1.0 - kBeta2) * g[j] * g[j];
      double step = (mi[j] / bc1) / (std::sqrt(vi[j] / bc2) + kEps);
      if (enc) step += cfg.weight_decay * p.value[j];  // decoupled decay, encoder group only
      p.value[j] -= lr * step;
    }
  }
}

std::vector<std::vector<double>> snapshot_params(const ParamStore& params) {
  std::vector<std::vector<double>> snap;
  snap.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    snap.push_back(params.at(static_cast<int>(i)).value);
  return snap;
}

void restore_params(ParamStore& params, const std::vector<std::vector<double>>& snap) {
  for (std::size_t i = 0; i < snap.size(); ++i) params.at(static_cast<int>(i)).value = snap[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

struct EvalOutputs {
  std::vector<int> pred;
  std::vector<std::vector<double>> rep_pair;    // input to the pair head
  std::vector<std::vector<double>> rep_export;  // exported embedding
};

EvalOutputs eval_forward(const Model& m, const Dataset& ds) {
  constexpr int kChunk = 64;
  const int n = static_cast<int>(ds.examples.size());
  EvalOutputs out;
  out.pred.reserve(static_cast<std::size_t>(n));
  for (int start = 0; start < n; start += kChunk) {
    const int end = std::min(n, start + kChunk);
    Tape tape;
    Binding P = bind_all(tape, m.params, false);
    Tensor E;
    if (m.cfg.model == ModelKind::kDele) E = dele_label_matrix(m, P, nullptr);
    for (int i = start; i < end; ++i) {
      const Example& ex = ds.examples[static_cast<std::size_t>(i)];
      TokenSequence seq = ex.is_pair ? tokenize_pair(ex.text, ex.text2, m.vocab, m.cfg.n_max)
                                     : tokenize(ex.text, m.vocab, m.cfg.n_max);
      EncodeOut e = encode_text(P, m.enc, m.enc_cfg, seq);
      if (m.cfg.model == ModelKind::kDele) {
        const bool guided = m.cfg.mutual_interaction;
        Tensor he = s2l_attention(P, m.dele, E, e.v_g, guided).context;
        Tensor hs = l2s_attention(P, m.dele, e.H, e.real_len, E, guided).context;
        Tensor probs = dele_predict(
            P, m.dele,
            m.cfg.classifier_input == ClassifierInput::kLabelSupervised ? hs : he);
        out.pred.push_back(argmax(probs.values()));
        out.rep_pair.push_back(he.values());
        out.rep_export.push_back(hs.values());
      } else {
        Tensor v_l = local_encode(P, m.enc, m.enc_cfg, e.H, e.real_len);
        Tensor v = fuse(e.v_g, v_l);
        Tensor probs = predict_label(P, m.r2, v);
        out.pred.push_back(argmax(probs.values()));
        out.rep_pair.push_back(v.values());
        out.rep_export.push_back(v.values());
      }
    }
  }
  return out;
}

}  // namespace

Metrics evaluate(const Model& model, const Dataset& data, std::uint64_t pair_seed) {
  if (data.examples.empty()) throw std::invalid_argument("evaluate: empty dataset");
  const int m = model.labels.size();
  for (const auto& ex : data.examples)
    if (ex.label < 0 || ex.label >= m)
      throw std::invalid_argument("evaluate: example label " + std::to_string(ex.label) +
                                  " outside the model's label set");

  EvalOutputs eo = eval_forward(model, data);
  Metrics metrics;
  metrics.count = static_cast<int>(data.examples.size());
  metrics.per_class.assign(static_cast<std::size_t>(m), 0.0);
  std::vector<int> class_total(static_cast<std::size_t>(m), 0);
  int correct = 0;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const int y = data.examples[i].label;
    ++class_total[static_cast<std::size_t>(y)];
    if (eo.pred[i] == y) {
      ++correct;
      metrics.per_class[static_cast<std::size_t>(y)] += 1.0;
    }
  }
  metrics.accuracy = static_cast<double>(correct) / static_cast<double>(metrics.count);
  for (int c = 0; c < m; ++c)
    if (class_total[static_cast<std::size_t>(c)] > 0)
      metrics.per_class[static_cast<std::size_t>(c)] /= class_total[static_cast<std::size_t>(c)];

  // pair-relation accuracy over a seeded pairing of the evaluation set
  const int n = metrics.count;
  if (n >= 2) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 rng(pair_seed);
    shuffle_indices(order, rng);
    int pair_correct = 0, pair_total = 0;
    constexpr int kChunk = 128;
    for (int start = 0; start + 1 < n; start += 2 * kChunk) {
      Tape tape;
      Binding P = bind_all(tape, model.params, false);
      for (int j = start; j + 1 < std::min(n, start + 2 * kChunk); j += 2) {
        const int a = order[static_cast<std::size_t>(j)];
        const int b = order[static_cast<std::size_t>(j + 1)];
        Tensor va = tape.leaf({static_cast<int>(eo.rep_pair[static_cast<std::size_t>(a)].size())},
                              eo.rep_pair[static_cast<std::size_t>(a)]);
        Tensor vb = tape.leaf({static_cast<int>(eo.rep_pair[static_cast<std::size_t>(b)].size())},
                              eo.rep_pair[static_cast<std::size_t>(b)]);
        Tensor probs = model.cfg.model == ModelKind::kDele
                           ? dele_r2_predict(P, model.dele, va, vb)
                           : r2_predict(P, model.r2, va, vb);
        const int want = data.examples[static_cast<std::size_t>(a)].label ==
                                 data.examples[static_cast<std::size_t>(b)].label
                             ? 1
                             : 0;
        if (argmax(probs.values()) == want) ++pair_correct;
        ++pair_total;
      }
    }
    metrics.r2_accuracy =
        pair_total > 0 ? static_cast<double>(pair_correct) / pair_total : 0.0;
  }
  return metrics;
}

Dataset load_dataset_for(const Model& model, const std::string& path) {
  Dataset raw = load_dataset(path);
  Dataset out;
  out.labels = model.labels;
  out.examples.reserve(raw.examples.size());
  for (auto& ex : raw.examples) {
    const std::string& name = raw.labels.names[static_cast<std::size_t>(ex.label)];
    const int mapped = model.labels.index_of(name);
    if (mapped < 0)
      throw std::runtime_error("dataset " + path + ": label \"" + name +
                               "\" is not part of the model's label set");
    ex.label = mapped;
    out.examples.push_back(std::move(ex));
  }
  return out;
}

void export_embeddings(const Model& model, const Dataset& data, const std::string& path) {
  if (data.examples.empty()) throw std::invalid_argument("export_embeddings: empty dataset");
  EvalOutputs eo = eval_forward(model, data);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_embeddings: cannot write " + path);
  os.precision(17);
  const std::size_t width = eo.rep_export.front().size();
  os << "example_id,label";
  for (std::size_t j = 0; j < width; ++j) os << ",h" << j;
  os << "\n";
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const Example& ex = data.examples[i];
    os << ex.id << "," << data.labels.names[static_cast<std::size_t>(ex.label)];
    for (double v : eo.rep_export[i]) os << "," << v;
    os << "\n";
  }
  if (!os) throw std::runtime_error("export_embeddings: write failure on " + path);
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

TrainResult train(const TrainConfig& cfg, Model* out_model,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
  cfg.validate();
  if (cfg.train_data.empty()) throw std::runtime_error("train: train_data path is required");

  LabelSet desc_labels;
  const bool have_desc = !cfg.label_desc.empty();
  if (have_desc) desc_labels = load_label_descriptions(cfg.label_desc);
  Dataset train_ds =
      have_desc ? load_dataset(cfg.train_data, desc_labels) : load_dataset(cfg.train_data);

  std::vector<std::string> corpus;
  corpus.reserve(train_ds.examples.size());
  for (const auto& ex : train_ds.examples)
    corpus.push_back(ex.is_pair ? ex.text + " " + ex.text2 : ex.text);
  Vocab vocab = build_vocab(corpus, cfg.min_freq);

  Model model = build_model(cfg, std::move(vocab), train_ds.labels);

  Dataset dev_ds;
  const bool have_dev = !cfg.dev_data.empty();
  if (have_dev) dev_ds = load_dataset_for(model, cfg.dev_data);

  TrainResult res;
  const int n_train = static_cast<int>(train_ds.examples.size());
  const int per_epoch = n_train / cfg.batch_size;  // trailing partial batch is dropped
  if (cfg.epochs > 0 && per_epoch == 0)
    throw std::runtime_error("train: dataset of " + std::to_string(n_train) +
                             " examples is smaller than one batch of " +
                             std::to_string(cfg.batch_size));
  const double total_batches =
      std::max(1.0, static_cast<double>(per_epoch) * static_cast<double>(cfg.epochs));

  AdamState opt;
  adam_init(opt, model.params);

  double best_dev = -1.0;
  double best_pair = -1.0;
  int best_epoch = -1;
  int since_best = 0;
  std::vector<std::vector<double>> best_snapshot;

  int global_batch = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng = epoch_rng(cfg.seed, epoch);
    std::vector<int> perm(static_cast<std::size_t>(n_train));
    for (int i = 0; i < n_train; ++i) perm[static_cast<std::size_t>(i)] = i;
    shuffle_indices(perm, rng);

    std::vector<std::vector<double>> cached_desc;
    const bool use_cache = cfg.model == ModelKind::kDele && cfg.freeze_descriptions;
    if (use_cache) cached_desc = cache_description_means(model);

    BatchStats epoch_stats;
    double loss_cls = 0.0, loss_pair = 0.0, loss_aux = 0.0, loss_total = 0.0;
    for (int b = 0; b < per_epoch; ++b) {
      std::vector<int> idx(perm.begin() + static_cast<std::ptrdiff_t>(b) * cfg.batch_size,
                           perm.begin() + static_cast<std::ptrdiff_t>(b + 1) * cfg.batch_size);
      Batch batch = make_batch(train_ds.examples, idx, model.vocab, cfg.n_max, rng);

      const double factor = lr_factor(static_cast<double>(global_batch), total_batches,
                                      cfg.warmup_frac);
      const double lr_mult = factor * (cfg.lr_max - cfg.lr_min) + cfg.lr_min;

      Tape tape;
      Binding P = bind_all(tape, model.params, true);
      Tensor loss;
      BatchStats st;
      try {
        loss = cfg.model == ModelKind::kDele
                   ? dele_batch_forward(model, P, batch, use_cache ? &cached_desc : nullptr, &st)
                   : r2net_batch_forward(model, P, batch, &st);
      } catch (const std::domain_error& e) {
        throw std::runtime_error("train: diverged at epoch " + std::to_string(epoch) +
                                 " batch " + std::to_string(b) + ": " + e.what());
      }
      if (!std::isfinite(st.loss))
        throw std::runtime_error("train: loss is not finite at epoch " + std::to_string(epoch) +
                                 " batch " + std::to_string(b));
      GradientMap grads = tape.backward(loss);
      adam_step(model.params, P, grads, opt, cfg, lr_mult);

      epoch_stats.correct += st.correct;
      epoch_stats.count += st.count;
      loss_cls += st.cls;
      loss_pair += st.pair;
      loss_aux += st.aux;
      loss_total += st.loss;
      ++global_batch;
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss_total / per_epoch;
    em.loss_cls = loss_cls / per_epoch;
    em.loss_pair = loss_pair / per_epoch;
    em.loss_aux = loss_aux / per_epoch;
    em.train_acc = epoch_stats.count > 0
                       ? static_cast<double>(epoch_stats.correct) / epoch_stats.count
                       : 0.0;
    if (have_dev) {
      Metrics dev = evaluate(model, dev_ds, cfg.eval_pair_seed);
      em.dev_acc = dev.accuracy;
      em.dev_r2_acc = dev.r2_accuracy;
      // accuracy decides; ties go to the better pair-relation head
      const bool improved = dev.accuracy > best_dev ||
                            (dev.accuracy == best_dev && dev.r2_accuracy > best_pair);
      if (improved) {
        best_dev = dev.accuracy;
        best_pair = dev.r2_accuracy;
        best_epoch = epoch;
        best_snapshot = snapshot_params(model.params);
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.history.push_back(em);
    if (on_epoch) on_epoch(em);

    if (have_dev && since_best >= cfg.patience) break;  // early stop on dev accuracy
  }

  if (!best_snapshot.empty()) restore_params(model.params, best_snapshot);
  res.best_epoch = best_epoch;

  if (have_dev)
    res.final_dev = evaluate(model, dev_ds, cfg.eval_pair_seed);
  else if (cfg.epochs == 0)
    res.final_dev = evaluate(model, train_ds, cfg.eval_pair_seed);

  if (!cfg.checkpoint_dir.empty()) {
    std::filesystem::create_directories(cfg.checkpoint_dir);
    res.checkpoint_path = cfg.checkpoint_dir + "/best.ckpt";
    save_checkpoint(model, res.checkpoint_path);
  }
  if (out_model) *out_model = std::move(model);
  return res;
}

std::string metrics_to_jsonl(const std::vector<EpochMetrics>& history, bool include_timing) {
  std::string out;
  for (const auto& em : history) {
    nlohmann::json obj;
    obj["epoch"] = em.epoch;
    obj["train_loss"] = em.train_loss;
    obj["loss_cls"] = em.loss_cls;
    obj["loss_pair"] = em.loss_pair;
    obj["loss_aux"] = em.loss_aux;
    obj["train_acc"] = em.train_acc;
    obj["dev_acc"] = em.dev_acc;
    obj["dev_r2_acc"] = em.dev_r2_acc;
    if (include_timing) obj["seconds"] = em.seconds;
    out += obj.dump();
    out += "\n";
  }
  return out;
}

}  // namespace labelnet
