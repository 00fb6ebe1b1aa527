// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_ESTIMATOR_H_
#define ENVTTS_ESTIMATOR_H_

#include <utility>

#include "envtts/config.h"
#include "envtts/nn.h"

namespace envtts {

// Multiplicative masking in the power-compressed magnitude domain:
// enhanced = decompress(clamp(mask, 0) * compress(env)). Shared by the
// estimator and by tests that force a mask directly.
std::pair<torch::Tensor, torch::Tensor> apply_environment_mask(const torch::Tensor& env_lin,
                                                               const torch::Tensor& mask);

// Transformer mask predictor over compressed magnitudes. Input and output
// shapes are (513, T) or (B, 513, T).
class EnvironmentEstimatorImpl : public torch::nn::Module {
 public:
  explicit EnvironmentEstimatorImpl(const EstimatorConfig& config);

  // Network only: compressed spectrogram -> mask (compressed domain).
  torch::Tensor predict_mask(const torch::Tensor& compressed);

  // Full pipeline: environmental magnitudes -> (mask, enhanced magnitudes).
  std::pair<torch::Tensor, torch::Tensor> estimate(const torch::Tensor& env_lin);

  const EstimatorConfig& config() const { return config_; }

 private:
  EstimatorConfig config_;
  torch::nn::Conv1d in_conv_{nullptr}, out_conv_{nullptr};
  torch::nn::ModuleList blocks_;
  torch::nn::PReLU prelu_{nullptr};
};
TORCH_MODULE(EnvironmentEstimator);

// Deterministic construction; the output convolution starts near the
// identity mask (pre-clamp values around 1).
EnvironmentEstimator init_estimator(const EstimatorConfig& config, uint64_t seed);

}  // namespace envtts

#endif  // ENVTTS_ESTIMATOR_H_
