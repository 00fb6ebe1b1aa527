// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_TRAIN_H_
#define ENVTTS_TRAIN_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "envtts/corpus.h"
#include "envtts/system.h"

namespace envtts {

struct LossBreakdown {
  double l_se = 0;
  double l_recon_env = 0;
  double l_recon_raw = 0;
  double l_kl = 0;
  double l_dur = 0;
  double l_adv_g = 0;
  double l_adv_d = 0;
  double l_fm = 0;
  double total_g = 0;
  double total_d = 0;

  bool finite() const;
  std::string to_json(int64_t step, double lr) const;
};

// lr(epoch) = lr0 * decay^epoch.
double lr_schedule(int64_t epoch, const OptimizerConfig& config);

// One (utterance, environment) training pair, fully loaded.
struct TrainItem {
  std::string utt_id, speaker_id, env_id;
  torch::Tensor raw_wav, env_wav;  // equal length
  torch::Tensor phoneme_ids;       // (N) int64
};

// Preloaded train-split pairs (holdout environments excluded). Items shorter
// than the decode window are dropped.
class TrainingSet {
 public:
  TrainingSet(const corpus::Manifest& manifest, int min_frames);
  const std::vector<TrainItem>& items() const { return items_; }
  // Deterministic batch for a step index.
  std::vector<const TrainItem*> batch(uint64_t seed, int64_t step, int batch_size) const;
  int64_t steps_per_epoch(int batch_size) const;

 private:
  std::vector<TrainItem> items_;
};

class Trainer {
 public:
  // The system must have been built by init_system (or restored by
  // load_system + restore_optimizers).
  Trainer(TtsSystem& system, const corpus::Manifest& manifest);

  // Runs the forward/backward cycle for the system's current step counter.
  // Bit-reproducible given identical parameters, optimizer state and step.
  LossBreakdown train_step();

  // Steps until system.step == until_step, logging one JSON line per step to
  // loss_log_path (empty disables). on_step, when set, observes every step.
  void run(int64_t until_step, const std::string& loss_log_path = "",
           const std::function<void(int64_t, const LossBreakdown&)>& on_step = nullptr);

  void restore_optimizers(const std::vector<ckpt::NamedTensor>& opt_g_state,
                          const std::vector<ckpt::NamedTensor>& opt_d_state);

  void save(const std::string& path) const;

  double current_lr() const;
  torch::optim::AdamW& opt_g() { return *opt_g_; }
  torch::optim::AdamW& opt_d() { return *opt_d_; }

 private:
  void set_lr(double lr);

  TtsSystem& system_;
  TrainingSet data_;
  std::vector<torch::Tensor> gen_params_, disc_params_;
  std::unique_ptr<torch::optim::AdamW> opt_g_, opt_d_;
};

}  // namespace envtts

#endif  // ENVTTS_TRAIN_H_
