#pragma once

#include <functional>
#include <string>
#include <vector>

#include "xmexp/config.hpp"
#include "xmexp/gradcheck.hpp"

namespace xmexp {

// Exit codes shared by all commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIoError = 3;

// Gradient verification over every layer type plus shrunken end-to-end
// channels (8x8 image, 12x6 spectrogram, same layer counts).
struct GradSuiteResult {
  GradCheckReport report;
  double seconds = 0.0;
};
GradSuiteResult run_gradcheck_suite();

// Strategy-1 training phase: writes <out>/model.ckpt and <out>/train_steps.csv.
int cmd_train(const RunConfig& cfg);

// Held-out evaluation of a checkpoint: writes <out>/eval_report.csv.
int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path);

// Novel-association stream through a pretrained checkpoint: writes
// <out>/novel_curve.csv.
int cmd_novel(const RunConfig& cfg, const std::string& checkpoint_path,
              const std::string& novel_manifest);

// Synthetic dataset on disk: PPM + WAV files and manifest.csv under <out>.
int cmd_synth(const RunConfig& cfg);

int cmd_gradcheck(const RunConfig& cfg);

// Maps exceptions from a command body to the exit-code contract.
int run_command(const std::function<int()>& body);

// Loads the configured dataset (synthetic or manifest).
Dataset load_dataset(const RunConfig& cfg);

}  // namespace xmexp
