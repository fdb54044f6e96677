#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace labelnet {

enum class ModelKind { kR2Net, kDele };
enum class DistanceLoss { kTriplet, kNtXent };
enum class ClassifierInput { kLabelSupervised, kTextSupervised };  // h_s vs h_e

struct TrainConfig {
  ModelKind model = ModelKind::kDele;

  // dimensions
  int d_p = 64;
  int d_m = 300;
  int d_a = 100;
  int d_2 = 300;
  int d_3 = 200;
  int layers = 2;
  int heads = 2;
  int n_max = 64;
  int ff_mult = 2;
  std::vector<int> kernels = {1, 2, 3};
  bool use_positions = true;
  bool alpha_softmax = true;
  int mix_layers = 0;  // 0 = all layers join the weighted sum

  // loss weights
  double eta = 0.5;
  double delta = 0.1;
  double mu = 0.1;
  double tau = 0.1;
  double margin = 0.2;
  DistanceLoss r2_distance_loss = DistanceLoss::kTriplet;
  bool ntxent_extra_negatives = false;

  // DELE variants
  bool freeze_descriptions = false;
  ClassifierInput classifier_input = ClassifierInput::kLabelSupervised;
  bool mutual_interaction = true;

  // optimization
  double lr1 = 1e-3;  // encoder group, decoupled weight decay
  double lr2 = 1e-3;  // head group
  double weight_decay = 0.01;
  double lr_max = 1.0;
  double lr_min = 1e-6;
  double warmup_frac = 0.1;
  int epochs = 20;
  int batch_size = 24;
  int patience = 5;
  int min_freq = 1;
  std::uint64_t seed = 1;
  std::uint64_t eval_pair_seed = 9;

  // paths
  std::string train_data;
  std::string dev_data;
  std::string label_desc;
  std::string checkpoint_dir;

  void validate() const;
};

// Flat key=value config text; unknown keys are errors.
TrainConfig parse_config_text(const std::string& text);
TrainConfig load_config(const std::string& path);
std::string config_to_text(const TrainConfig& cfg);

}  // namespace labelnet
