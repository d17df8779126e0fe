#include <CLI11.hpp>
#include <cstdint>
#include <string>

#include "xmexp/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"xmexp — unsupervised crossmodal association learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string checkpoint;
  std::string novel_manifest;
  std::uint64_t seed = 0;
  bool seed_given = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration file (key = value)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "override the run seed")
        ->each([&](const std::string&) { seed_given = true; });
  };

  CLI::App* train = app.add_subcommand("train", "train on the 70% split, write checkpoint + step CSV");
  add_common(train);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the held-out split");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint to evaluate");

  CLI::App* novel = app.add_subcommand("novel", "stream novel pairs through a pretrained checkpoint");
  add_common(novel);
  novel->add_option("--checkpoint", checkpoint, "pretrained checkpoint");
  novel->add_option("--novel", novel_manifest, "manifest of the novel pair stream")->required();

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic paired dataset on disk");
  add_common(synth);

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "verify analytic gradients by finite differences");
  add_common(gradcheck);

  CLI11_PARSE(app, argc, argv);

  return xmexp::run_command([&]() -> int {
    xmexp::RunConfig cfg = xmexp::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed_given) cfg.seed = seed;

    if (train->parsed()) return xmexp::cmd_train(cfg);
    if (eval->parsed()) {
      const std::string ckpt = checkpoint.empty() ? cfg.out_dir + "/model.ckpt" : checkpoint;
      return xmexp::cmd_eval(cfg, ckpt);
    }
    if (novel->parsed()) {
      const std::string ckpt = checkpoint.empty() ? cfg.out_dir + "/model.ckpt" : checkpoint;
      return xmexp::cmd_novel(cfg, ckpt, novel_manifest);
    }
    if (synth->parsed()) return xmexp::cmd_synth(cfg);
    return xmexp::cmd_gradcheck(cfg);
  });
}
