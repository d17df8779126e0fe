// Acceptance suite: runs every acceptance criterion end to end and prints one
// pass/fail line per criterion. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "xmexp/audio.hpp"
#include "xmexp/checkpoint.hpp"
#include "xmexp/commands.hpp"
#include "xmexp/config.hpp"
#include "xmexp/trainer.hpp"

using namespace xmexp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Criterion {
  const char* name;
  std::function<std::string()> run;   // empty string = pass
};

std::string failf(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<unreadable>";
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

Dataset filter_identities(const Dataset& full, int keep_below) {
  Dataset out;
  for (const auto& s : full.samples) {
    if (s.identity >= keep_below) continue;
    StimulusPair copy = s;
    while (static_cast<int>(out.identities.size()) <= s.identity) {
      out.identities.push_back(full.identities[out.identities.size()]);
    }
    out.samples.push_back(std::move(copy));
  }
  return out;
}

// --------------------------------------------------------------------------

std::string check_gradient_integrity() {
  const GradSuiteResult suite = run_gradcheck_suite();
  for (const auto& b : suite.report.blocks) {
    if (b.max_rel_err >= 1e-4) {
      return failf("block %s rel err %.3e >= 1e-4", b.name.c_str(), b.max_rel_err);
    }
  }
  if (suite.seconds >= 60.0) return failf("took %.1fs >= 60s", suite.seconds);
  return {};
}

std::string check_audio_frontend() {
  const auto start = Clock::now();
  Rng rng(2025);
  for (int rate : {8000, 16000, 44100}) {
    AudioClip clip;
    clip.sample_rate = rate;
    clip.samples.resize(rate);
    for (int i = 0; i < rate; ++i) {
      clip.samples[i] = 0.6 * std::sin(2.0 * std::numbers::pi * 523.25 * i / rate) +
                        rng.uniform(-0.2, 0.2);
    }
    const Tensor spec = log_mel_spectrogram(clip);
    if (spec.shape != std::vector<int>{1, 100, 40}) {
      return failf("rate %d: shape %s != 1x100x40", rate, spec.shape_str().c_str());
    }
    for (double v : spec.data) {
      if (!(v >= 0.0 && v <= 1.0)) return failf("rate %d: value %g outside [0,1]", rate, v);
    }
  }

  for (int trial = 0; trial < 4; ++trial) {
    std::vector<double> frame(512);
    for (double& v : frame) v = rng.uniform(-1.0, 1.0);
    const auto fast = dft_magnitude(frame);
    const auto naive = oracles::naive_dft_magnitude(frame, 512);
    for (std::size_t i = 0; i < fast.size(); ++i) {
      if (std::fabs(fast[i] - naive[i]) >= 1e-9) {
        return failf("fft vs naive: bin %zu differs by %.3e", i, std::fabs(fast[i] - naive[i]));
      }
    }
  }

  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (secs >= 5.0) return failf("took %.1fs >= 5s", secs);
  return {};
}

std::string check_som_correctness() {
  Rng rng(31337);

  // 1,000 random (grid, query, mask) trials against the exhaustive oracle.
  for (int trial = 0; trial < 1000; ++trial) {
    SomConfig cfg;
    cfg.rows = 2 + static_cast<int>(rng.below(6));
    cfg.cols = 2 + static_cast<int>(rng.below(6));
    SomGrid grid(cfg, 2 * (1 + static_cast<int>(rng.below(10))), rng.next_u64());
    grid.randomize(-1.0, 1.0);

    ConcatLatent query;
    query.values.resize(grid.dim());
    for (double& v : query.values) v = rng.uniform(-1.0, 1.0);
    const int mask = static_cast<int>(rng.below(3));
    query.visual_present = mask != 1;
    query.auditory_present = mask != 0;

    const auto [unit, dist] = grid.bmu(query);
    const auto expect = oracles::brute_force_bmu(grid, query);
    if (unit.row != expect.row || unit.col != expect.col) {
      return failf("trial %d: bmu (%d,%d) != oracle (%d,%d)", trial, unit.row, unit.col,
                   expect.row, expect.col);
    }
    if (std::fabs(dist - expect.distance) > 1e-12) {
      return failf("trial %d: distance %.17g != oracle %.17g", trial, dist, expect.distance);
    }
  }

  // Single-vector convergence in one default (100-epoch) train call.
  {
    SomGrid grid(SomConfig{}, 256, 99);
    ReplayMemory memory;
    ConcatLatent x;
    x.values.resize(256);
    for (double& v : x.values) v = rng.uniform(0.0, 1.0);
    memory.push(x);
    grid.train(memory);
    const double qe = grid.quantization_error(memory);
    if (!(qe < 1e-6)) return failf("single-vector quantization error %.3e >= 1e-6", qe);
  }

  // FIFO capacity-50 eviction and outlier forgetting.
  {
    ReplayMemory memory;
    ConcatLatent outlier;
    outlier.values = {-77.0, -77.0};
    memory.push(outlier);
    for (int i = 0; i < 50; ++i) {
      ConcatLatent congruent;
      congruent.values = {1.0, static_cast<double>(i)};
      memory.push(congruent);
    }
    if (memory.size() != 50) return failf("memory size %zu != 50", memory.size());
    for (const auto& item : memory.contents()) {
      if (item.values[0] == -77.0) return failf("outlier still present after 50 pushes");
    }
    if (memory.contents().front().values[1] != 0.0 ||
        memory.contents().back().values[1] != 49.0) {
      return failf("eviction order is not FIFO");
    }
  }
  return {};
}

std::string check_expectation_trend() {
  const auto start = Clock::now();
  RunConfig rc;
  rc.synth.identities = 1;
  rc.synth.samples_per_identity = 1;

  for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
    Rng rng(seed);
    const auto samples = synthesize(rc.synth, rc.image_size, rc.audio, rng.next_u64());
    const Dataset ds = to_dataset(samples, rc.audio);
    ExpectationModel model(rc.model_config(), rng.next_u64());
    const StimulusView view = training_view(ds.samples[0]);

    double v1 = 0.0, a1 = 0.0, v_final = 0.0, a_final = 0.0;
    for (int i = 0; i < 200; ++i) {
      const StepReport r = model.train_step(view);
      if (i == 0) {
        v1 = *r.visual_loss;
        a1 = *r.auditory_loss;
      }
      v_final = *r.visual_loss;
      a_final = *r.auditory_loss;
    }
    if (!(v_final < v1)) return failf("seed %llu: visual %.6f !< %.6f", (unsigned long long)seed, v_final, v1);
    if (!(a_final < a1)) return failf("seed %llu: auditory %.6f !< %.6f", (unsigned long long)seed, a_final, a1);
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (secs >= 600.0) return failf("took %.0fs >= 600s", secs);
  return {};
}

std::string check_identification_ordering() {
  const auto start = Clock::now();
  RunConfig rc;   // defaults: 4 identities x 10 samples, separable by construction
  Rng rng(42);
  const auto samples = synthesize(rc.synth, rc.image_size, rc.audio, rng.next_u64());
  const Dataset ds = to_dataset(samples, rc.audio);

  const std::vector<std::uint64_t> seeds = {101, 102, 103, 104, 105};
  const EvalReport report = run_strategy1(ds, rc.model_config(), 0.7, seeds);

  if (report.auditory.accuracy < 0.9) return failf("auditory %.3f < 0.9", report.auditory.accuracy);
  if (report.visual.accuracy < 0.9) return failf("visual %.3f < 0.9", report.visual.accuracy);
  if (report.crossmodal.accuracy < 0.9) {
    return failf("crossmodal %.3f < 0.9", report.crossmodal.accuracy);
  }
  const double best_unimodal = std::max(report.visual.accuracy, report.auditory.accuracy);
  if (report.crossmodal.accuracy < best_unimodal - 0.02) {
    return failf("crossmodal %.3f < max(unimodal) %.3f - 0.02", report.crossmodal.accuracy,
                 best_unimodal);
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (secs >= 1800.0) return failf("took %.0fs >= 1800s", secs);
  return {};
}

std::string check_novel_association() {
  const auto start = Clock::now();
  RunConfig rc;
  rc.synth.identities = 5;
  Rng rng(33);
  const auto samples = synthesize(rc.synth, rc.image_size, rc.audio, rng.next_u64());
  const Dataset full = to_dataset(samples, rc.audio);

  const Dataset pretrain = filter_identities(full, 4);
  std::vector<StimulusPair> novel;
  for (const auto& s : full.samples) {
    if (s.identity_name == "id4" && novel.size() < 6) novel.push_back(s);
  }
  if (novel.size() != 6) return failf("expected 6 novel pairs, built %zu", novel.size());

  const auto curve = run_strategy2(pretrain, novel, rc.model_config(), 9);

  const fs::path csv = fs::temp_directory_path() / "xmexp_acceptance_novel.csv";
  write_step_csv(csv, curve);
  const auto loaded = read_step_csv(csv);
  fs::remove(csv);
  if (loaded.size() != 6) return failf("curve CSV has %zu rows != 6", loaded.size());
  for (const auto& r : loaded) {
    if (!r.visual_loss || !r.auditory_loss) return failf("step %d missing a loss", r.step);
  }
  if (!(*loaded.back().visual_loss < *loaded.front().visual_loss)) {
    return failf("final visual %.6f !< initial %.6f", *loaded.back().visual_loss,
                 *loaded.front().visual_loss);
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (secs >= 900.0) return failf("took %.0fs >= 900s", secs);
  return {};
}

std::string check_determinism() {
  const fs::path out1 = fs::temp_directory_path() / "xmexp_acceptance_det1";
  const fs::path out2 = fs::temp_directory_path() / "xmexp_acceptance_det2";
  fs::remove_all(out1);
  fs::remove_all(out2);

  RunConfig cfg;
  cfg.seed = 4711;
  cfg.synth.identities = 2;
  cfg.synth.samples_per_identity = 4;
  cfg.trainer.passes = 1;

  // Keep cmd_train's progress lines out of the one-line-per-criterion log.
  std::ostringstream sink;
  auto* cout_buf = std::cout.rdbuf(sink.rdbuf());
  cfg.out_dir = out1.string();
  const int first = cmd_train(cfg);
  cfg.out_dir = out2.string();
  const int second = cmd_train(cfg);
  std::cout.rdbuf(cout_buf);
  if (first != kExitOk) return failf("first train run failed");
  if (second != kExitOk) return failf("second train run failed");

  const bool ckpt_equal = read_bytes(out1 / "model.ckpt") == read_bytes(out2 / "model.ckpt");
  const bool csv_equal =
      read_bytes(out1 / "train_steps.csv") == read_bytes(out2 / "train_steps.csv");
  fs::remove_all(out1);
  fs::remove_all(out2);
  if (!ckpt_equal) return failf("checkpoints differ between same-seed runs");
  if (!csv_equal) return failf("step CSVs differ between same-seed runs");
  return {};
}

std::string check_loss_axioms() {
  const Tensor a({2}, {0.0, 1.0});
  const Tensor b({2}, {1.0, 0.0});
  const LossPair perm = expectation_loss(a, b);
  if (perm.wasserstein != 0.0) return failf("W1([0,1],[1,0]) = %g != 0", perm.wasserstein);
  if (perm.training != 1.0) return failf("training([0,1],[1,0]) = %g != 1", perm.training);

  const LossPair same = expectation_loss(a, a);
  if (same.training != 0.0 || same.wasserstein != 0.0) return failf("loss(x,x) != 0");

  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor x({9}), y({9});
    for (double& v : x.data) v = rng.uniform(-3.0, 3.0);
    for (double& v : y.data) v = rng.uniform(-3.0, 3.0);
    const LossPair xy = expectation_loss(x, y);
    const LossPair yx = expectation_loss(y, x);
    if (xy.training < 0.0 || xy.wasserstein < 0.0) return failf("negative loss");
    if (std::fabs(xy.training - yx.training) > 1e-15 ||
        std::fabs(xy.wasserstein - yx.wasserstein) > 1e-15) {
      return failf("loss is not symmetric");
    }
    Tensor y_perm = y;
    rng.shuffle(y_perm.data);
    if (std::fabs(expectation_loss(x, y_perm).wasserstein - xy.wasserstein) > 1e-12) {
      return failf("W1 not permutation-invariant");
    }
    bool identical = true;
    for (int i = 0; i < 9; ++i) identical = identical && x.data[i] == y.data[i];
    if (!identical && xy.training == 0.0) return failf("training term zero on distinct inputs");
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  const std::vector<Criterion> criteria = {
      {"gradient-integrity", check_gradient_integrity},
      {"audio-frontend-contract", check_audio_frontend},
      {"som-correctness", check_som_correctness},
      {"expectation-learning-trend", check_expectation_trend},
      {"identification-ordering", check_identification_ordering},
      {"novel-association", check_novel_association},
      {"determinism", check_determinism},
      {"loss-axioms", check_loss_axioms},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (!only.empty() && only != criterion.name) continue;
    const auto start = Clock::now();
    const std::string detail = criterion.run();
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (detail.empty()) {
      std::printf("[PASS] %-28s (%.1fs)\n", criterion.name, secs);
    } else {
      std::printf("[FAIL] %-28s (%.1fs) %s\n", criterion.name, secs, detail.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  return failures;
}
