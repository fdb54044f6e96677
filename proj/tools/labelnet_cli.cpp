#include <cmath>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "labelnet/checkpoint.hpp"
#include "labelnet/gradcheck.hpp"
#include "labelnet/train.hpp"

namespace {

using namespace labelnet;

int cmd_train(const std::string& config_path) {
  TrainConfig cfg = load_config(config_path);
  TrainResult res = train(cfg, nullptr, [](const EpochMetrics& em) {
    std::cout << metrics_to_jsonl({em}, /*include_timing=*/true);
    std::cout.flush();
  });
  if (res.final_dev.count > 0)
    std::cerr << "best epoch " << res.best_epoch << ", dev accuracy " << res.final_dev.accuracy
              << ", pair accuracy " << res.final_dev.r2_accuracy << "\n";
  if (!res.checkpoint_path.empty())
    std::cerr << "checkpoint written to " << res.checkpoint_path << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path) {
  Model model = load_checkpoint(ckpt_path);
  Dataset ds = load_dataset_for(model, data_path);
  Metrics m = evaluate(model, ds, model.cfg.eval_pair_seed);
  nlohmann::json obj;
  obj["accuracy"] = m.accuracy;
  obj["r2_accuracy"] = m.r2_accuracy;
  obj["count"] = m.count;
  nlohmann::json per = nlohmann::json::object();
  for (int c = 0; c < model.labels.size(); ++c)
    per[model.labels.names[static_cast<std::size_t>(c)]] =
        m.per_class[static_cast<std::size_t>(c)];
  obj["per_class"] = per;
  std::cout << obj.dump() << "\n";
  return 0;
}

int cmd_gradcheck(const std::string& module) {
  const auto results = run_gradcheck_suite(module);
  if (results.empty()) {
    std::cerr << "no gradient checks match module \"" << module << "\"\n";
    return 1;
  }
  bool all_ok = true;
  for (const auto& r : results) {
    std::printf("%-28s max_rel_err %.3e  (tol %.0e)  %s\n", r.name.c_str(), r.max_rel_error,
                r.threshold, r.pass() ? "ok" : "FAIL");
    all_ok = all_ok && r.pass();
  }
  if (!all_ok) std::cerr << "gradient check failures\n";
  return all_ok ? 0 : 1;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
  SynthSpec spec = parse_synth_spec(spec_path);
  gen_synthetic(spec, out_dir);
  std::cerr << "wrote train/dev/test splits and labels.json to " << out_dir << "\n";
  return 0;
}

int cmd_export(const std::string& ckpt_path, const std::string& data_path,
               const std::string& out_csv) {
  Model model = load_checkpoint(ckpt_path);
  Dataset ds = load_dataset_for(model, data_path);
  export_embeddings(model, ds, out_csv);
  std::cerr << "wrote " << ds.examples.size() << " embeddings to " << out_csv << "\n";
  return 0;
}

int cmd_err_reduction(double backbone, double model_acc) {
  const double r = error_rate_reduction(backbone, model_acc);
  std::printf("%+.2f%%\n", r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"label-exploiting text classifiers on a from-scratch autodiff core"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, data_path, out_path, module, spec_path;
  double backbone = 0.0, model_acc = 0.0;

  auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
  train_cmd->add_option("--config", config_path, "flat key=value config")->required();

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--data", data_path, "JSONL dataset")->required();

  auto* grad_cmd = app.add_subcommand("gradcheck", "run the gradient-check suite");
  grad_cmd->add_option("--module", module, "filter: tensor, encoder, r2net, dele");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--spec", spec_path, "key=value spec file")->required();
  synth_cmd->add_option("--out", out_path, "output directory")->required();

  auto* export_cmd = app.add_subcommand("export-embeddings", "dump sentence embeddings as CSV");
  export_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  export_cmd->add_option("--data", data_path, "JSONL dataset")->required();
  export_cmd->add_option("--out", out_path, "output CSV path")->required();

  auto* metric_cmd = app.add_subcommand("metric", "derived evaluation metrics");
  auto* err_cmd = metric_cmd->add_subcommand("err-reduction",
                                             "error-rate change relative to a backbone");
  err_cmd->add_option("--backbone", backbone, "backbone accuracy in (0,1)")->required();
  err_cmd->add_option("--model", model_acc, "model accuracy in (0,1)")->required();
  metric_cmd->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(config_path);
    if (*eval_cmd) return cmd_eval(ckpt_path, data_path);
    if (*grad_cmd) return cmd_gradcheck(module);
    if (*synth_cmd) return cmd_synth(spec_path, out_path);
    if (*export_cmd) return cmd_export(ckpt_path, data_path, out_path);
    if (*err_cmd) return cmd_err_reduction(backbone, model_acc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
