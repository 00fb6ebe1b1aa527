// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_EMBEDDERS_H_
#define ENVTTS_EMBEDDERS_H_

#include <string>

#include "envtts/config.h"
#include "envtts/corpus.h"
#include "envtts/dsp.h"
#include "envtts/nn.h"

namespace envtts {

// Fixed-length global conditioning vectors. Non-zero embeddings are
// unit-norm, so cosine similarity is a plain inner product.
struct EnvironmentEmbedding {
  torch::Tensor vector;  // (D)
  bool is_zero() const { return vector.abs().sum().item<double>() == 0.0; }
};

struct SpeakerEmbedding {
  torch::Tensor vector;  // (D)
};

// All-zero conditioning vector selecting the raw-speech decoder branch.
EnvironmentEmbedding zero_environment_embedding(int dim);

// ECAPA-style encoder: conv stem, dilated Res2 blocks, multi-layer feature
// aggregation, attentive statistics pooling, linear projection.
class EcapaEncoderImpl : public torch::nn::Module {
 public:
  explicit EcapaEncoderImpl(const EcapaConfig& config);

  // features: (in_dim, T) or (B, in_dim, T), T >= 8. Returns (B, emb_dim)
  // un-normalized.
  torch::Tensor forward(const torch::Tensor& features);

  // L2-normalized embedding for a single feature matrix, shape (emb_dim).
  torch::Tensor embed(const torch::Tensor& features);

  const EcapaConfig& config() const { return config_; }

 private:
  class Res2BlockImpl;
  EcapaConfig config_;
  torch::nn::Conv1d stem_{nullptr}, mfa_{nullptr};
  torch::nn::BatchNorm1d stem_bn_{nullptr};
  torch::nn::ModuleList blocks_;
  torch::nn::Conv1d attn_pre_{nullptr}, attn_out_{nullptr};
  torch::nn::Linear proj_{nullptr};
};
TORCH_MODULE(EcapaEncoder);

EcapaEncoder init_ecapa(const EcapaConfig& config, uint64_t seed);

// Frozen, pluggable speaker encoder operating on mel features of a
// waveform. Outputs are bit-stable across calls while frozen.
struct SpeakerEncoderHandle {
  EcapaEncoder net{nullptr};
  EcapaConfig config;
  std::string impl_id = "ecapa-mel-aam-v1";
  bool frozen = true;

  // wav must be at least 1 s long.
  SpeakerEmbedding embed(const dsp::Waveform& wav) const;
  torch::Tensor embed_mel(const torch::Tensor& mel) const;
};

// Environment embedding from an environment mask, unit-norm, T >= 8.
EnvironmentEmbedding environment_encode(const torch::Tensor& mask, EcapaEncoder& encoder);

// Additive-angular-margin speaker classification on mel features of raw and
// environment-rendered audio. Returns the frozen handle; optionally reports
// per-step losses.
SpeakerEncoderHandle pretrain_speaker_encoder(const corpus::Manifest& manifest,
                                              const EcapaConfig& config,
                                              const SpeakerTrainConfig& train_config,
                                              std::vector<double>* loss_log = nullptr);

void save_speaker_encoder(const std::string& path, const SpeakerEncoderHandle& handle);
SpeakerEncoderHandle load_speaker_encoder(const std::string& path);

}  // namespace envtts

#endif  // ENVTTS_EMBEDDERS_H_
