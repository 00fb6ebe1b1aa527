// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_CONFIG_H_
#define ENVTTS_CONFIG_H_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace envtts {

// Transformer mask predictor.
struct EstimatorConfig {
  int n_layers = 4;
  int model_dim = 192;
  int n_heads = 4;
  int ff_dim = 768;
  int conv_kernel = 3;
  double dropout = 0.1;
  // The PReLU at the output can emit negative mask values; by default they
  // are clamped at zero so magnitudes stay non-negative.
  bool allow_negative_mask = false;

  void validate() const;
};

// ECAPA-style embedding encoder (shared by environment and speaker paths).
struct EcapaConfig {
  int in_dim = 513;
  int channels = 128;
  int emb_dim = 192;
  int attn_dim = 64;
  int res2_scale = 4;

  void validate() const;
};

struct BackboneConfig {
  int hidden = 192;  // text-encoder width
  int c_lat = 192;   // latent channels (even, for coupling splits)
  int text_layers = 6;
  int text_heads = 2;
  int text_ff = 768;
  int text_kernel = 3;
  int rel_window = 4;
  double dropout = 0.1;

  int posterior_layers = 16;
  int posterior_hidden = 96;
  int posterior_kernel = 5;
  bool condition_posterior_on_speaker = true;

  int flow_couplings = 4;
  int flow_layers = 3;
  int flow_hidden = 96;
  int flow_kernel = 5;

  bool use_stochastic_duration = true;
  int dur_flow_steps = 4;
  int dur_filter = 128;

  int dec_channels = 128;
  std::vector<int> upsample_rates{8, 8, 2, 2};
  std::vector<int> upsample_kernels{16, 16, 4, 4};
  std::vector<int> res_kernels{3, 7};
  std::vector<int> res_dilations{1, 3};

  int spk_dim = 192;
  int env_dim = 192;

  int upsample_factor() const;
  void validate() const;
};

struct DiscriminatorConfig {
  std::vector<int> periods{2, 3, 5, 7, 11};
  std::vector<int> mpd_channels{16, 32, 64, 64};
  int msd_scales = 3;
  std::vector<int> msd_channels{16, 32, 64, 64};

  int num_branches() const { return int(periods.size()) + msd_scales; }
};

struct LossWeights {
  double mel = 45.0;
  double kl = 1.0;
  double duration = 1.0;
  double feature_matching = 2.0;
  double adversarial = 1.0;
  double se = 1.0;
};

struct OptimizerConfig {
  double lr0 = 2.0e-4;
  double beta1 = 0.8;
  double beta2 = 0.99;
  double weight_decay = 0.01;
  double decay_per_epoch = std::pow(0.999, 1.0 / 8.0);

  void validate() const;
};

struct TrainConfig {
  int batch_size = 8;
  int segment_frames = 32;  // decoded z window per step
  int total_steps = 20000;
  uint64_t seed = 1234;
  int log_every = 25;
  int checkpoint_every = 1000;
  LossWeights weights;
  OptimizerConfig optimizer;
};

struct SpeakerTrainConfig {
  int steps = 800;
  int batch_size = 16;
  int segment_frames = 64;
  double lr = 1.0e-3;
  double aam_margin = 0.2;
  double aam_scale = 30.0;
  uint64_t seed = 77;
};

struct InferenceDefaults {
  double noise_scale_prior = 0.667;
  double noise_scale_sdp = 0.8;
  double conversion_temperature = 0.6;
};

struct SystemConfig {
  EstimatorConfig estimator;
  EcapaConfig env_encoder{.in_dim = 513};
  EcapaConfig spk_encoder{.in_dim = 80};
  BackboneConfig backbone;
  DiscriminatorConfig discriminator;
  TrainConfig train;
  SpeakerTrainConfig spk_train;
  InferenceDefaults inference;

  void validate() const;
};

// JSON round trip. Missing keys keep their defaults, so partial config
// files stay valid as new knobs appear.
SystemConfig load_system_config(const std::string& path);
void save_system_config(const std::string& path, const SystemConfig& config);
std::string system_config_to_json(const SystemConfig& config);
SystemConfig system_config_from_json(const std::string& json_text);

}  // namespace envtts

#endif  // ENVTTS_CONFIG_H_
