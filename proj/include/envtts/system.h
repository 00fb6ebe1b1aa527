// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_SYSTEM_H_
#define ENVTTS_SYSTEM_H_

#include <memory>
#include <string>

#include "envtts/backbone.h"
#include "envtts/config.h"
#include "envtts/embedders.h"
#include "envtts/estimator.h"
#include "envtts/checkpoint.h"

namespace envtts {

// The full synthesis system: mask estimator, environment encoder, frozen
// speaker encoder, and the CVAE backbone. Discriminators ride along for
// training and resume.
struct TtsSystem {
  SystemConfig config;
  EnvironmentEstimator estimator{nullptr};
  EcapaEncoder env_encoder{nullptr};
  SpeakerEncoderHandle spk_encoder;
  TextEncoder text_encoder{nullptr};
  PosteriorEncoder posterior{nullptr};
  ResidualCouplingFlow flow{nullptr};
  DurationModel duration{nullptr};
  Decoder decoder{nullptr};
  MultiDiscriminator discriminator{nullptr};
  int64_t step = 0;
  int64_t epoch = 0;

  // Generator-side trainables; the frozen speaker encoder is excluded.
  std::vector<torch::Tensor> generator_parameters() const;
  std::vector<torch::Tensor> discriminator_parameters() const;

  void set_train(bool train);
  void to_eval() { set_train(false); }
};

// Deterministic construction of all trainable modules given a seed. The
// speaker encoder handle is plugged in as-is (it is pretrained separately).
TtsSystem init_system(const SystemConfig& config, uint64_t seed,
                      SpeakerEncoderHandle spk_encoder);

// Full-system checkpoint, optionally with optimizer state for exact resume.
void save_system(const std::string& path, const TtsSystem& system,
                 const torch::optim::AdamW* opt_g = nullptr,
                 const torch::optim::AdamW* opt_d = nullptr);

struct LoadedSystem {
  TtsSystem system;
  bool has_optimizer_state = false;
  std::vector<ckpt::NamedTensor> opt_g_state;
  std::vector<ckpt::NamedTensor> opt_d_state;
};

LoadedSystem load_system(const std::string& path);

}  // namespace envtts

#endif  // ENVTTS_SYSTEM_H_
