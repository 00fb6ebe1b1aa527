// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_BACKBONE_H_
#define ENVTTS_BACKBONE_H_

#include <optional>
#include <utility>
#include <vector>

#include "envtts/config.h"
#include "envtts/nn.h"

namespace envtts {

// Phoneme hidden states with the projected prior distribution.
struct TextEncoding {
  torch::Tensor hidden;  // (B, H, N)
  torch::Tensor mean;    // (B, C_lat, N)
  torch::Tensor logstd;  // (B, C_lat, N)
};

class TextEncoderImpl : public torch::nn::Module {
 public:
  TextEncoderImpl(const BackboneConfig& config, int vocab_size);
  // ids: (B, N) int64 over the inventory.
  TextEncoding forward(const torch::Tensor& ids);

 private:
  BackboneConfig config_;
  int vocab_;
  torch::nn::Embedding emb_{nullptr};
  torch::nn::ModuleList blocks_;
  torch::nn::Conv1d proj_{nullptr};
};
TORCH_MODULE(TextEncoder);

// Dilated gated convolution stack over the enhanced spectrogram with global
// speaker conditioning; emits the latent sample and its statistics.
struct PosteriorEncoding {
  torch::Tensor z;       // (B, C_lat, T)
  torch::Tensor mean;    // (B, C_lat, T)
  torch::Tensor logstd;  // (B, C_lat, T)
};

class PosteriorEncoderImpl : public torch::nn::Module {
 public:
  explicit PosteriorEncoderImpl(const BackboneConfig& config);
  // spec: (B, 513, T); spk: (B, spk_dim) or undefined when the speaker
  // conditioning flag is off. temperature scales the sampled noise.
  PosteriorEncoding forward(const torch::Tensor& spec, const torch::Tensor& spk, uint64_t seed,
                            double temperature = 1.0);

 private:
  BackboneConfig config_;
  torch::nn::Conv1d pre_{nullptr}, proj_{nullptr};
  nn::WaveNetStack wn_{nullptr};
};
TORCH_MODULE(PosteriorEncoder);

// Stack of speaker-conditioned affine coupling layers interleaved with
// channel flips. forward() maps posterior latents z to the prior-side z_p
// and returns the per-sample log-determinant; inverse() undoes it.
class ResidualCouplingFlowImpl : public torch::nn::Module {
 public:
  explicit ResidualCouplingFlowImpl(const BackboneConfig& config);
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& z,
                                                  const torch::Tensor& spk);
  torch::Tensor inverse(const torch::Tensor& z_p, const torch::Tensor& spk);

 private:
  class CouplingImpl;
  BackboneConfig config_;
  torch::nn::ModuleList couplings_;
};
TORCH_MODULE(ResidualCouplingFlow);

// Duration model over per-phoneme log-durations: a conditional scalar flow
// (affine + monotone tanh steps) trained on dequantized targets, or a
// deterministic L2 regressor behind the config flag.
class DurationModelImpl : public torch::nn::Module {
 public:
  explicit DurationModelImpl(const BackboneConfig& config);

  // h_text: (B, H, N) (detached internally); durations: (B, N) positive
  // integers from MAS; spk: (B, spk_dim). Returns the scalar loss.
  torch::Tensor loss(const torch::Tensor& h_text, const torch::Tensor& durations,
                     const torch::Tensor& spk, uint64_t seed);

  // Integer durations >= 1, shape (B, N).
  torch::Tensor sample(const torch::Tensor& h_text, const torch::Tensor& spk,
                       double noise_scale, uint64_t seed);

  bool stochastic() const { return config_.use_stochastic_duration; }

 private:
  torch::Tensor condition(const torch::Tensor& h_text, const torch::Tensor& spk);
  // Flow parameters per step: (log_a, b, softplus pre-activation for c).
  std::vector<std::array<torch::Tensor, 3>> step_params(const torch::Tensor& cond);

  BackboneConfig config_;
  torch::nn::Conv1d cond_in_{nullptr}, cond_mid_{nullptr}, cond_out_{nullptr},
      spk_proj_{nullptr};
  torch::nn::Conv1d flow_head_{nullptr}, det_head_{nullptr};
};
TORCH_MODULE(DurationModel);

// Repeats each phoneme's statistics along frames: (C, N) + durations -> (C, T).
std::pair<torch::Tensor, torch::Tensor> expand_prior(const torch::Tensor& mean,
                                                     const torch::Tensor& logstd,
                                                     const torch::Tensor& durations);

// Upsampling GAN generator, total factor 256 (one hop per latent frame).
// Global condition = concat(speaker, environment) projected and added to the
// input features. Output is tanh-bounded, (B, 1, 256 * T).
class DecoderImpl : public torch::nn::Module {
 public:
  explicit DecoderImpl(const BackboneConfig& config);
  torch::Tensor forward(const torch::Tensor& z, const torch::Tensor& spk,
                        const torch::Tensor& env);

 private:
  class ResBlockImpl;
  BackboneConfig config_;
  torch::nn::Conv1d pre_{nullptr}, post_{nullptr};
  torch::nn::Linear cond_{nullptr};
  torch::nn::ModuleList ups_, mrfs_;
};
TORCH_MODULE(Decoder);

// Multi-period + multi-scale waveform discriminators.
struct DiscriminatorOutput {
  std::vector<torch::Tensor> logits;                   // one per branch
  std::vector<std::vector<torch::Tensor>> features;    // per branch, per layer
};

class MultiDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit MultiDiscriminatorImpl(const DiscriminatorConfig& config);
  DiscriminatorOutput forward(const torch::Tensor& wav);  // (B, 1, L)

  int num_branches() const { return config_.num_branches(); }

 private:
  class PeriodBranchImpl;
  class ScaleBranchImpl;
  DiscriminatorConfig config_;
  torch::nn::ModuleList branches_;
};
TORCH_MODULE(MultiDiscriminator);

}  // namespace envtts

#endif  // ENVTTS_BACKBONE_H_
