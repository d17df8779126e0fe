#include "xmexp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "xmexp/errors.hpp"

namespace xmexp {

LossPair expectation_loss(const Tensor& perceived, const Tensor& expected) {
  if (!perceived.same_shape(expected)) {
    throw UsageError("expectation_loss shape mismatch: " + perceived.shape_str() + " vs " +
                     expected.shape_str());
  }
  const std::size_t n = perceived.numel();
  LossPair loss;
  for (std::size_t i = 0; i < n; ++i) {
    loss.training += std::fabs(perceived.data[i] - expected.data[i]);
  }
  loss.training /= static_cast<double>(n);

  std::vector<double> a = perceived.data;
  std::vector<double> b = expected.data;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) loss.wasserstein += std::fabs(a[i] - b[i]);
  loss.wasserstein /= static_cast<double>(n);
  return loss;
}

Tensor mae_gradient(const Tensor& perceived, const Tensor& expected) {
  Tensor grad(expected.shape);
  const double scale = 1.0 / static_cast<double>(expected.numel());
  for (std::size_t i = 0; i < grad.numel(); ++i) {
    const double d = expected.data[i] - perceived.data[i];
    grad.data[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
  }
  return grad;
}

// ---------------------------------------------------------------------------

ExpectationModel::ExpectationModel(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      rng_(seed),
      visual_(cfg.visual, Modality::visual, rng_),
      auditory_(cfg.auditory, Modality::auditory, rng_),
      som_(cfg.som, 2 * cfg.visual.latent_dim, rng_.next_u64()),
      replay_(cfg.replay_capacity) {
  if (cfg.visual.latent_dim != cfg.auditory.latent_dim) {
    throw ConfigError("visual and auditory latent dims must match for concatenation");
  }
}

ConcatLatent ExpectationModel::encode_query(const StimulusView& pair) {
  if (!pair.image && !pair.spectrogram) {
    throw UsageError("stimulus has no modality present");
  }
  const int half = cfg_.visual.latent_dim;
  ConcatLatent query;
  query.values.assign(static_cast<std::size_t>(2 * half), 0.0);
  query.visual_present = pair.image != nullptr;
  query.auditory_present = pair.spectrogram != nullptr;
  if (pair.image) {
    const Latent z = visual_.encoder.forward(*pair.image);
    std::copy(z.values.data.begin(), z.values.data.end(), query.values.begin());
  }
  if (pair.spectrogram) {
    const Latent z = auditory_.encoder.forward(*pair.spectrogram);
    std::copy(z.values.data.begin(), z.values.data.end(), query.values.begin() + half);
  }
  return query;
}

namespace {

// Expectation term: loss(perceived, decode(bmu_half)) with the BMU latent as
// a constant target generator — gradient reaches the decoder only.
// Autoencoding term: loss(perceived, decode(encode(perceived))) — gradient
// reaches both columns. Returns the expectation term's losses.
LossPair update_channel(Channel& channel, const Tensor& perceived, const Latent& bmu_half,
                        double learning_rate) {
  const Tensor expected = channel.decoder.forward(bmu_half);
  const LossPair loss = expectation_loss(perceived, expected);
  channel.decoder.backward(mae_gradient(perceived, expected));

  const Latent z = channel.encoder.forward(perceived);
  const Tensor recon = channel.decoder.forward(z);
  const Tensor grad_latent = channel.decoder.backward(mae_gradient(perceived, recon));
  channel.encoder.backward(grad_latent);

  sgd_step(channel.params(), learning_rate);
  return loss;
}

}  // namespace

StepReport ExpectationModel::train_step(const StimulusView& pair) {
  if (!pair.image || !pair.spectrogram) {
    throw UsageError("train_step needs both modalities; use train_step_unimodal");
  }

  ConcatLatent observed = encode_query(pair);
  replay_.push(observed);
  som_.train(replay_);

  const auto [unit, dist] = som_.bmu(observed);
  auto [proto_visual, proto_auditory] = som_.split_prototype(unit);

  StepReport report;
  report.step = ++steps_;
  report.bmu_row = unit.row;
  report.bmu_col = unit.col;
  report.visual_loss =
      update_channel(visual_, *pair.image, proto_visual, cfg_.trainer.learning_rate).training;
  report.auditory_loss =
      update_channel(auditory_, *pair.spectrogram, proto_auditory, cfg_.trainer.learning_rate)
          .training;
  report.quant_error = som_.quantization_error(replay_);
  return report;
}

StepReport ExpectationModel::train_step_unimodal(const StimulusView& pair) {
  const bool has_image = pair.image != nullptr;
  const bool has_audio = pair.spectrogram != nullptr;
  if (has_image == has_audio) {
    throw UsageError(has_image ? "train_step_unimodal needs exactly one modality; "
                                 "use train_step for crossmodal pairs"
                               : "stimulus has no modality present");
  }

  ConcatLatent query = encode_query(pair);
  const auto [unit, dist] = som_.bmu(query);
  auto [proto_visual, proto_auditory] = som_.split_prototype(unit);

  StepReport report;
  report.step = ++steps_;
  report.bmu_row = unit.row;
  report.bmu_col = unit.col;

  Channel& channel = has_image ? visual_ : auditory_;
  const Tensor& perceived = has_image ? *pair.image : *pair.spectrogram;
  const Latent& proto = has_image ? proto_visual : proto_auditory;

  const Tensor expected = channel.decoder.forward(proto);
  const LossPair loss = expectation_loss(perceived, expected);
  channel.decoder.backward(mae_gradient(perceived, expected));
  sgd_step(channel.decoder.params(), cfg_.trainer.learning_rate);

  if (has_image) {
    report.visual_loss = loss.training;
  } else {
    report.auditory_loss = loss.training;
  }
  report.quant_error = replay_.size() > 0 ? som_.quantization_error(replay_) : 0.0;
  return report;
}

std::vector<ParamBlockRef> ExpectationModel::param_blocks() {
  std::vector<ParamBlockRef> out = visual_.blocks("visual");
  for (auto& b : auditory_.blocks("auditory")) out.push_back(b);
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

SplitIndices stratified_split(const Dataset& data, double train_fraction, Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("split fraction must be in (0, 1)");
  }
  SplitIndices split;
  for (const auto& group : data.indices_by_identity()) {
    if (group.size() < 4) {
      throw ConfigError("identity '" + data.samples[group.front()].identity_name +
                        "' has fewer than 4 samples");
    }
    std::vector<int> order = group;
    rng.shuffle(order);
    const int n = static_cast<int>(order.size());
    int n_train = static_cast<int>(std::lround(train_fraction * n));
    n_train = std::clamp(n_train, 1, n - 1);
    split.train.insert(split.train.end(), order.begin(), order.begin() + n_train);
    split.test.insert(split.test.end(), order.begin() + n_train, order.end());
  }
  return split;
}

std::vector<StepReport> train_passes(ExpectationModel& model, const Dataset& data,
                                     const std::vector<int>& indices, int passes, Rng& rng) {
  std::vector<StepReport> reports;
  std::vector<int> order = indices;
  for (int p = 0; p < passes; ++p) {
    rng.shuffle(order);
    for (int idx : order) {
      reports.push_back(model.train_step(training_view(data.samples[idx])));
    }
  }
  return reports;
}

std::vector<int> label_units(ExpectationModel& model, const Dataset& data,
                             const std::vector<int>& train_indices) {
  const SomGrid& grid = model.som();
  const int n_units = grid.rows() * grid.cols();
  std::vector<std::map<int, int>> votes(n_units);
  for (int idx : train_indices) {
    const ConcatLatent query = model.encode_query(training_view(data.samples[idx]));
    const auto [unit, dist] = grid.bmu(query);
    votes[unit.row * grid.cols() + unit.col][data.samples[idx].identity] += 1;
  }
  std::vector<int> labels(n_units, -1);
  for (int u = 0; u < n_units; ++u) {
    int best_count = 0;
    for (const auto& [identity, count] : votes[u]) {
      if (count > best_count) {    // ties break to the smaller identity index
        best_count = count;
        labels[u] = identity;
      }
    }
  }
  return labels;
}

int classify(ExpectationModel& model, const std::vector<int>& unit_labels,
             const StimulusPair& pair, Condition condition) {
  StimulusView view = training_view(pair);
  if (condition == Condition::auditory_only) view.image = nullptr;
  if (condition == Condition::visual_only) view.spectrogram = nullptr;
  if (!view.image && !view.spectrogram) {
    throw UsageError("classify: sample lacks the modality the condition requires");
  }
  const ConcatLatent query = model.encode_query(view);

  const SomGrid& grid = model.som();
  int best_label = -1;
  double best = 0.0;
  bool first = true;
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const int label = unit_labels[r * grid.cols() + c];
      if (label < 0) continue;
      const double d = grid.masked_distance({r, c}, query);
      if (first || d < best) {
        best = d;
        best_label = label;
        first = false;
      }
    }
  }
  if (best_label < 0) throw StateError("classify: no labelled units (model untrained?)");
  return best_label;
}

SplitAccuracies evaluate_split(ExpectationModel& model, const Dataset& data,
                               const SplitIndices& split) {
  const std::vector<int> labels = label_units(model, data, split.train);
  SplitAccuracies acc;
  int n = 0;
  for (int idx : split.test) {
    const StimulusPair& pair = data.samples[idx];
    acc.auditory += classify(model, labels, pair, Condition::auditory_only) == pair.identity;
    acc.visual += classify(model, labels, pair, Condition::visual_only) == pair.identity;
    acc.crossmodal += classify(model, labels, pair, Condition::crossmodal) == pair.identity;
    ++n;
  }
  if (n == 0) throw ConfigError("evaluate_split: empty test split");
  acc.auditory /= n;
  acc.visual /= n;
  acc.crossmodal /= n;
  return acc;
}

namespace {

EvalCondition aggregate(const std::vector<double>& values) {
  EvalCondition out;
  const double n = static_cast<double>(values.size());
  out.accuracy = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.accuracy) * (v - out.accuracy);
    out.stddev = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

}  // namespace

EvalReport run_strategy1(const Dataset& data, const ModelConfig& cfg, double split_fraction,
                         const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("run_strategy1 needs at least one seed");
  std::vector<double> auditory, visual, crossmodal;
  for (std::uint64_t seed : seeds) {
    Rng rng(seed);
    Rng split_rng = rng.fork();
    Rng order_rng = rng.fork();
    const SplitIndices split = stratified_split(data, split_fraction, split_rng);

    ExpectationModel model(cfg, rng.next_u64());
    train_passes(model, data, split.train, cfg.trainer.passes, order_rng);

    const SplitAccuracies acc = evaluate_split(model, data, split);
    auditory.push_back(acc.auditory);
    visual.push_back(acc.visual);
    crossmodal.push_back(acc.crossmodal);
  }
  EvalReport report;
  report.auditory = aggregate(auditory);
  report.visual = aggregate(visual);
  report.crossmodal = aggregate(crossmodal);
  report.n_seeds = static_cast<int>(seeds.size());
  return report;
}

std::vector<StepReport> novel_stream_steps(ExpectationModel& model,
                                           const std::vector<StimulusPair>& novel_stream) {
  std::vector<StepReport> reports;
  reports.reserve(novel_stream.size());
  for (const StimulusPair& pair : novel_stream) {
    reports.push_back(model.train_step(training_view(pair)));
  }
  // Renumber relative to the stream so the curve starts at step 1.
  for (std::size_t i = 0; i < reports.size(); ++i) {
    reports[i].step = static_cast<int>(i) + 1;
  }
  return reports;
}

std::vector<StepReport> run_strategy2(const Dataset& pretrain,
                                      const std::vector<StimulusPair>& novel_stream,
                                      const ModelConfig& cfg, std::uint64_t seed) {
  if (novel_stream.empty()) throw ConfigError("run_strategy2 needs a non-empty novel stream");
  for (const StimulusPair& pair : novel_stream) {
    for (const auto& name : pretrain.identities) {
      if (name == pair.identity_name) {
        throw ConfigError("novel identity '" + pair.identity_name +
                          "' is present in the pretraining set");
      }
    }
  }

  Rng rng(seed);
  Rng order_rng = rng.fork();
  ExpectationModel model(cfg, rng.next_u64());
  std::vector<int> all(pretrain.samples.size());
  std::iota(all.begin(), all.end(), 0);
  train_passes(model, pretrain, all, cfg.trainer.passes, order_rng);

  return novel_stream_steps(model, novel_stream);
}

// ---------------------------------------------------------------------------
// Report files

std::string format_sig9(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

void write_step_csv(const std::filesystem::path& path, const std::vector<StepReport>& steps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,visual_loss,auditory_loss,bmu_row,bmu_col,quant_error\n";
  for (const auto& s : steps) {
    out << s.step << ',';
    if (s.visual_loss) out << format_sig9(*s.visual_loss);
    out << ',';
    if (s.auditory_loss) out << format_sig9(*s.auditory_loss);
    out << ',' << s.bmu_row << ',' << s.bmu_col << ',' << format_sig9(s.quant_error) << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<StepReport> read_step_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "step,visual_loss,auditory_loss,bmu_row,bmu_col,quant_error") {
    throw InputError("bad step CSV header in " + path.string());
  }
  std::vector<StepReport> steps;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 6) {
      throw InputError("step CSV " + path.string() + " line " + std::to_string(line_no) +
                       ": expected 6 fields");
    }
    StepReport s;
    s.step = std::stoi(fields[0]);
    if (!fields[1].empty()) s.visual_loss = std::stod(fields[1]);
    if (!fields[2].empty()) s.auditory_loss = std::stod(fields[2]);
    s.bmu_row = std::stoi(fields[3]);
    s.bmu_col = std::stoi(fields[4]);
    s.quant_error = std::stod(fields[5]);
    steps.push_back(s);
  }
  return steps;
}

void write_eval_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "condition,accuracy,stddev,n_seeds\n";
  const auto row = [&](const char* name, const EvalCondition& c) {
    out << name << ',' << format_sig9(c.accuracy) << ',' << format_sig9(c.stddev) << ','
        << report.n_seeds << '\n';
  };
  row("auditory", report.auditory);
  row("visual", report.visual);
  row("crossmodal", report.crossmodal);
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace xmexp
