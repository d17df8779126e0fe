#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xmexp/channels.hpp"
#include "xmexp/dataset.hpp"
#include "xmexp/som.hpp"

namespace xmexp {

// Expectation loss between a perceived and an expected stimulus.
// `training` is the differentiable term (mean absolute error); `wasserstein`
// is the diagnostic 1-D W1 distance over the flattened, sorted values.
struct LossPair {
  double training = 0.0;
  double wasserstein = 0.0;
};

LossPair expectation_loss(const Tensor& perceived, const Tensor& expected);

// d(MAE)/d(expected), i.e. sign(expected - perceived) / n.
Tensor mae_gradient(const Tensor& perceived, const Tensor& expected);

struct StepReport {
  int step = 0;
  std::optional<double> visual_loss;     // expectation error of the visual channel
  std::optional<double> auditory_loss;
  int bmu_row = 0;
  int bmu_col = 0;
  double quant_error = 0.0;
};

struct EvalCondition {
  double accuracy = 0.0;
  double stddev = 0.0;
};

struct EvalReport {
  EvalCondition auditory;
  EvalCondition visual;
  EvalCondition crossmodal;
  int n_seeds = 0;
};

struct TrainerConfig {
  double learning_rate = 0.5;   // MAE sign-gradients are ~1/n per element
  int passes = 4;               // sweeps over the training split
  double split_fraction = 0.7;
};

struct ModelConfig {
  ChannelConfig visual = ChannelConfig::visual();
  ChannelConfig auditory = ChannelConfig::auditory();
  SomConfig som;
  std::size_t replay_capacity = 50;
  TrainerConfig trainer;
};

// The full architecture: two modality channels bridged by the SOM
// co-occurrence layer with replay memory.
class ExpectationModel {
 public:
  ExpectationModel(const ModelConfig& cfg, std::uint64_t seed);

  // Crossmodal step: encode both stimuli, push the concatenated latent to
  // replay, train the SOM over the whole memory, retrieve the BMU prototype,
  // decode both halves as expected stimuli, and update both channels with
  // expectation + autoencoding losses. The BMU latent enters the decoders as
  // a constant; only the autoencoding term reaches the encoders.
  StepReport train_step(const StimulusView& pair);

  // Unimodal step: masked BMU retrieval, expectation loss on the present
  // modality only. Replay is not pushed (no co-occurrence observed) and only
  // the present channel is updated.
  StepReport train_step_unimodal(const StimulusView& pair);

  Latent encode_visual(const Tensor& frame) { return visual_.encoder.forward(frame); }
  Latent encode_auditory(const Tensor& spec) { return auditory_.encoder.forward(spec); }
  Tensor decode_visual(const Latent& z) { return visual_.decoder.forward(z); }
  Tensor decode_auditory(const Latent& z) { return auditory_.decoder.forward(z); }

  ConcatLatent encode_query(const StimulusView& pair);

  Channel& visual() { return visual_; }
  Channel& auditory() { return auditory_; }
  SomGrid& som() { return som_; }
  const SomGrid& som() const { return som_; }
  ReplayMemory& replay() { return replay_; }
  const ModelConfig& config() const { return cfg_; }
  int steps_taken() const { return steps_; }

  std::vector<ParamBlockRef> param_blocks();

 private:
  ModelConfig cfg_;
  Rng rng_;
  Channel visual_;
  Channel auditory_;
  SomGrid som_;
  ReplayMemory replay_;
  int steps_ = 0;
};

// ---------------------------------------------------------------------------
// Experiments

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;
};

// Stratified per-identity split; every identity needs >= 4 samples.
SplitIndices stratified_split(const Dataset& data, double train_fraction, Rng& rng);

// Shuffled passes of crossmodal train_steps over the given samples.
std::vector<StepReport> train_passes(ExpectationModel& model, const Dataset& data,
                                     const std::vector<int>& indices, int passes, Rng& rng);

enum class Condition { auditory_only, visual_only, crossmodal };

// Post-hoc unit labelling: majority identity of the training samples mapped
// to each unit (-1 where no sample lands). Labels never feed back into
// training.
std::vector<int> label_units(ExpectationModel& model, const Dataset& data,
                             const std::vector<int>& train_indices);

// Masked BMU over labelled units; returns the winning unit's label.
int classify(ExpectationModel& model, const std::vector<int>& unit_labels,
             const StimulusPair& pair, Condition condition);

struct SplitAccuracies {
  double auditory = 0.0;
  double visual = 0.0;
  double crossmodal = 0.0;
};

// Label units from the training split, then classify the test split under
// the three conditions.
SplitAccuracies evaluate_split(ExpectationModel& model, const Dataset& data,
                               const SplitIndices& split);

// Strategy 1: per seed, train a fresh model on a stratified 70/30 split and
// measure identification accuracy; aggregate mean and std across seeds.
EvalReport run_strategy1(const Dataset& data, const ModelConfig& cfg, double split_fraction,
                         const std::vector<std::uint64_t>& seeds);

// Strategy 2: pre-train on the full pretraining set, then stream the novel
// pairs as sequential crossmodal steps, reporting per-step expectation
// losses. The novel identity must not appear in the pretraining set.
std::vector<StepReport> run_strategy2(const Dataset& pretrain,
                                      const std::vector<StimulusPair>& novel_stream,
                                      const ModelConfig& cfg, std::uint64_t seed);

// Streams novel pairs through an already-trained model (the CLI variant of
// strategy 2, where pretraining came from a checkpoint).
std::vector<StepReport> novel_stream_steps(ExpectationModel& model,
                                           const std::vector<StimulusPair>& novel_stream);

// ---------------------------------------------------------------------------
// Report files. Floats are printed with 9 significant digits.

std::string format_sig9(double value);

void write_step_csv(const std::filesystem::path& path, const std::vector<StepReport>& steps);
std::vector<StepReport> read_step_csv(const std::filesystem::path& path);
void write_eval_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace xmexp
