#pragma once

#include <functional>
#include <string>
#include <vector>

#include "labelnet/config.hpp"
#include "labelnet/data.hpp"
#include "labelnet/dele.hpp"
#include "labelnet/encoder.hpp"
#include "labelnet/params.hpp"
#include "labelnet/r2net.hpp"

namespace labelnet {

// A configured architecture plus everything needed to run it: parameter
// store, vocabulary and label set from training time.
struct Model {
  TrainConfig cfg;
  EncoderConfig enc_cfg;
  ParamStore params;
  EncoderIds enc;
  R2NetIds r2{};
  DeleIds dele{};
  Vocab vocab;
  LabelSet labels;
  std::vector<std::vector<TokenSequence>> desc_seqs;  // tokenized label descriptions
};

Model build_model(const TrainConfig& cfg, Vocab vocab, LabelSet labels);

// Piecewise cosine learning-rate factor in [0,1]: rises to a crest at
// warmup_frac * total, then decays as a squared cosine to 0 at i = total.
// Valid for 0 <= i <= total.
double lr_factor(double i, double total_batches, double warmup_frac);

struct Metrics {
  double accuracy = 0.0;
  std::vector<double> per_class;
  double r2_accuracy = 0.0;
  int count = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double loss_cls = 0.0;   // L_s / L3
  double loss_pair = 0.0;  // L_R2 / L2
  double loss_aux = 0.0;   // triplet / L1
  double train_acc = 0.0;
  double dev_acc = -1.0;  // -1 when no dev split was given
  double dev_r2_acc = -1.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  Metrics final_dev;
  int best_epoch = -1;
  std::string checkpoint_path;
};

// Full optimization loop: epoch shuffling, batch construction, schedule,
// Adam/AdamW split by parameter group, early stopping on dev accuracy.
// Aborts with the offending batch index if the loss stops being finite.
// on_epoch, when set, is invoked after every epoch's evaluation.
TrainResult train(const TrainConfig& cfg, Model* out_model = nullptr,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

// Accuracy, per-class accuracy, and pair-relation accuracy over seeded
// pairs of the evaluation set.
Metrics evaluate(const Model& model, const Dataset& data, std::uint64_t pair_seed);

// Loads an evaluation dataset and remaps its labels onto the model's
// label indices; unknown label names are an error.
Dataset load_dataset_for(const Model& model, const std::string& path);

// CSV with header example_id,label,h0..h{d-1}: h_s rows for DELE,
// fused sentence vectors for R2-Net.
void export_embeddings(const Model& model, const Dataset& data, const std::string& path);

// Signed percent change in error rate relative to the backbone.
double error_rate_reduction(double acc_backbone, double acc_model);

// One JSON object per epoch. Wall-clock is the only non-deterministic
// field; exclude it when comparing streams across runs.
std::string metrics_to_jsonl(const std::vector<EpochMetrics>& history, bool include_timing);

}  // namespace labelnet
