#include "labelnet/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace labelnet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config: key \"" + key + "\" expects true/false, got \"" + v + "\"");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (...) {
      throw std::runtime_error("config: key \"" + key + "\" has non-integer entry \"" + item +
                               "\"");
    }
  }
  if (out.empty()) throw std::runtime_error("config: key \"" + key + "\" is empty");
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 6 || batch_size % 6 != 0)
    throw std::runtime_error("config: batch_size must be a positive multiple of 6 so N/2 "
                             "pairs and N/3 triplets are integral");
  if (eta < 0.0 || eta > 1.0) throw std::runtime_error("config: eta must lie in [0,1]");
  if (delta < 0.0 || mu < 0.0)
    throw std::runtime_error("config: delta and mu must be nonnegative");
  if (tau <= 0.0) throw std::runtime_error("config: tau must be positive");
  if (margin <= 0.0) throw std::runtime_error("config: margin must be positive");
  if (warmup_frac < 0.0 || warmup_frac > 1.0)
    throw std::runtime_error("config: warmup_frac must lie in [0,1]");
  if (lr_max <= lr_min) throw std::runtime_error("config: lr_max must exceed lr_min");
  if (lr1 <= 0.0 || lr2 <= 0.0) throw std::runtime_error("config: learning rates must be positive");
  if (epochs < 0) throw std::runtime_error("config: epochs must be >= 0");
  if (patience < 1) throw std::runtime_error("config: patience must be >= 1");
  if (d_p < 1 || d_m < 1 || d_a < 1 || d_2 < 1 || d_3 < 1 || layers < 1 || heads < 1 ||
      n_max < 3 || ff_mult < 1)
    throw std::runtime_error("config: dimensions must be positive (n_max >= 3)");
  if (d_p % heads != 0) throw std::runtime_error("config: d_p must be divisible by heads");
  if (mix_layers < 0 || mix_layers > layers)
    throw std::runtime_error("config: mix_layers must lie in [0, layers]");
  if (kernels.empty()) throw std::runtime_error("config: kernels must be non-empty");
  for (int k : kernels)
    if (k < 1) throw std::runtime_error("config: kernel widths must be >= 1");
  if (min_freq < 1) throw std::runtime_error("config: min_freq must be >= 1");
}

TrainConfig parse_config_text(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) + " is not key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "model") {
        if (val == "r2net")
          cfg.model = ModelKind::kR2Net;
        else if (val == "dele")
          cfg.model = ModelKind::kDele;
        else
          throw std::runtime_error("config: model must be r2net or dele, got \"" + val + "\"");
      } else if (key == "d_p")
        cfg.d_p = std::stoi(val);
      else if (key == "d_m")
        cfg.d_m = std::stoi(val);
      else if (key == "d_a")
        cfg.d_a = std::stoi(val);
      else if (key == "d_2")
        cfg.d_2 = std::stoi(val);
      else if (key == "d_3")
        cfg.d_3 = std::stoi(val);
      else if (key == "layers")
        cfg.layers = std::stoi(val);
      else if (key == "heads")
        cfg.heads = std::stoi(val);
      else if (key == "n_max")
        cfg.n_max = std::stoi(val);
      else if (key == "ff_mult")
        cfg.ff_mult = std::stoi(val);
      else if (key == "kernels")
        cfg.kernels = parse_int_list(key, val);
      else if (key == "use_positions")
        cfg.use_positions = parse_bool(key, val);
      else if (key == "alpha_softmax")
        cfg.alpha_softmax = parse_bool(key, val);
      else if (key == "mix_layers")
        cfg.mix_layers = std::stoi(val);
      else if (key == "eta")
        cfg.eta = std::stod(val);
      else if (key == "delta")
        cfg.delta = std::stod(val);
      else if (key == "mu")
        cfg.mu = std::stod(val);
      else if (key == "tau")
        cfg.tau = std::stod(val);
      else if (key == "margin")
        cfg.margin = std::stod(val);
      else if (key == "r2_distance_loss") {
        if (val == "triplet")
          cfg.r2_distance_loss = DistanceLoss::kTriplet;
        else if (val == "ntxent")
          cfg.r2_distance_loss = DistanceLoss::kNtXent;
        else
          throw std::runtime_error("config: r2_distance_loss must be triplet or ntxent");
      } else if (key == "ntxent_extra_negatives")
        cfg.ntxent_extra_negatives = parse_bool(key, val);
      else if (key == "freeze_descriptions")
        cfg.freeze_descriptions = parse_bool(key, val);
      else if (key == "classifier_input") {
        if (val == "hs")
          cfg.classifier_input = ClassifierInput::kLabelSupervised;
        else if (val == "he")
          cfg.classifier_input = ClassifierInput::kTextSupervised;
        else
          throw std::runtime_error("config: classifier_input must be hs or he");
      } else if (key == "mutual_interaction")
        cfg.mutual_interaction = parse_bool(key, val);
      else if (key == "lr1")
        cfg.lr1 = std::stod(val);
      else if (key == "lr2")
        cfg.lr2 = std::stod(val);
      else if (key == "weight_decay")
        cfg.weight_decay = std::stod(val);
      else if (key == "lr_max")
        cfg.lr_max = std::stod(val);
      else if (key == "lr_min")
        cfg.lr_min = std::stod(val);
      else if (key == "warmup_frac")
        cfg.warmup_frac = std::stod(val);
      else if (key == "epochs")
        cfg.epochs = std::stoi(val);
      else if (key == "batch_size")
        cfg.batch_size = std::stoi(val);
      else if (key == "patience")
        cfg.patience = std::stoi(val);
      else if (key == "min_freq")
        cfg.min_freq = std::stoi(val);
      else if (key == "seed")
        cfg.seed = std::stoull(val);
      else if (key == "eval_pair_seed")
        cfg.eval_pair_seed = std::stoull(val);
      else if (key == "train_data")
        cfg.train_data = val;
      else if (key == "dev_data")
        cfg.dev_data = val;
      else if (key == "label_desc")
        cfg.label_desc = val;
      else if (key == "checkpoint_dir")
        cfg.checkpoint_dir = val;
      else
        throw std::runtime_error("config: unknown key \"" + key + "\" (line " +
                                 std::to_string(lineno) + ")");
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("config: bad value for \"" + key + "\" (line " +
                               std::to_string(lineno) + ")");
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_text(const TrainConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "model = " << (cfg.model == ModelKind::kR2Net ? "r2net" : "dele") << "\n";
  os << "d_p = " << cfg.d_p << "\n";
  os << "d_m = " << cfg.d_m << "\n";
  os << "d_a = " << cfg.d_a << "\n";
  os << "d_2 = " << cfg.d_2 << "\n";
  os << "d_3 = " << cfg.d_3 << "\n";
  os << "layers = " << cfg.layers << "\n";
  os << "heads = " << cfg.heads << "\n";
  os << "n_max = " << cfg.n_max << "\n";
  os << "ff_mult = " << cfg.ff_mult << "\n";
  os << "kernels = ";
  for (std::size_t i = 0; i < cfg.kernels.size(); ++i) os << (i ? "," : "") << cfg.kernels[i];
  os << "\n";
  os << "use_positions = " << (cfg.use_positions ? "true" : "false") << "\n";
  os << "alpha_softmax = " << (cfg.alpha_softmax ? "true" : "false") << "\n";
  os << "mix_layers = " << cfg.mix_layers << "\n";
  os << "eta = " << cfg.eta << "\n";
  os << "delta = " << cfg.delta << "\n";
  os << "mu = " << cfg.mu << "\n";
  os << "tau = " << cfg.tau << "\n";
  os << "margin = " << cfg.margin << "\n";
  os << "r2_distance_loss = "
     << (cfg.r2_distance_loss == DistanceLoss::kTriplet ? "triplet" : "ntxent") << "\n";
  os << "ntxent_extra_negatives = " << (cfg.ntxent_extra_negatives ? "true" : "false") << "\n";
  os << "freeze_descriptions = " << (cfg.freeze_descriptions ? "true" : "false") << "\n";
  os << "classifier_input = "
     << (cfg.classifier_input == ClassifierInput::kLabelSupervised ? "hs" : "he") << "\n";
  os << "mutual_interaction = " << (cfg.mutual_interaction ? "true" : "false") << "\n";
  os << "lr1 = " << cfg.lr1 << "\n";
  os << "lr2 = " << cfg.lr2 << "\n";
  os << "weight_decay = " << cfg.weight_decay << "\n";
  os << "lr_max = " << cfg.lr_max << "\n";
  os << "lr_min = " << cfg.lr_min << "\n";
  os << "warmup_frac = " << cfg.warmup_frac << "\n";
  os << "epochs = " << cfg.epochs << "\n";
  os << "batch_size = " << cfg.batch_size << "\n";
  os << "patience = " << cfg.patience << "\n";
  os << "min_freq = " << cfg.min_freq << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "eval_pair_seed = " << cfg.eval_pair_seed << "\n";
  os << "train_data = " << cfg.train_data << "\n";
  os << "dev_data = " << cfg.dev_data << "\n";
  os << "label_desc = " << cfg.label_desc << "\n";
  os << "checkpoint_dir = " << cfg.checkpoint_dir << "\n";
  return os.str();
}

}  // namespace labelnet
