// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/estimator.h"

#include "envtts/dsp.h"

namespace envtts {

std::pair<torch::Tensor, torch::Tensor> apply_environment_mask(const torch::Tensor& env_lin,
                                                               const torch::Tensor& mask) {
  check_input(env_lin.sizes() == mask.sizes(), "apply_environment_mask: shape mismatch");
  auto compressed = dsp::power_compress(env_lin);
  auto enhanced_compressed = torch::clamp_min(mask, 0.0) * compressed;
  auto enhanced = dsp::power_decompress(enhanced_compressed);
  return {mask, enhanced};
}

EnvironmentEstimatorImpl::EnvironmentEstimatorImpl(const EstimatorConfig& config)
    : config_(config) {
  config_.validate();
  in_conv_ = register_module(
      "in_conv", torch::nn::Conv1d(torch::nn::Conv1dOptions(dsp::kNumBins, config_.model_dim,
                                                            config_.conv_kernel)
                                       .padding(config_.conv_kernel / 2)));
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int i = 0; i < config_.n_layers; ++i)
    blocks_->push_back(nn::TransformerBlock(config_.model_dim, config_.n_heads, config_.ff_dim,
                                            /*ff_kernel=*/1, /*rel_window=*/-1,
                                            config_.dropout));
  out_conv_ = register_module(
      "out_conv", torch::nn::Conv1d(torch::nn::Conv1dOptions(config_.model_dim, dsp::kNumBins,
                                                             config_.conv_kernel)
                                        .padding(config_.conv_kernel / 2)));
  prelu_ = register_module("prelu", torch::nn::PReLU());
}

torch::Tensor EnvironmentEstimatorImpl::predict_mask(const torch::Tensor& compressed) {
  const bool batched = compressed.dim() == 3;
  auto x = batched ? compressed : compressed.unsqueeze(0);
  check_input(x.size(1) == dsp::kNumBins, "predict_mask: expected 513 frequency bins");

  auto h = in_conv_->forward(x);
  h = h + nn::sinusoidal_positions(h.size(2), h.size(1), h.options()).unsqueeze(0);
  for (const auto& block : *blocks_)
    h = std::dynamic_pointer_cast<nn::TransformerBlockImpl>(block)->forward(h);
  auto mask = prelu_->forward(out_conv_->forward(h));
  if (!config_.allow_negative_mask) mask = torch::clamp_min(mask, 0.0);
  return batched ? mask : mask.squeeze(0);
}

std::pair<torch::Tensor, torch::Tensor> EnvironmentEstimatorImpl::estimate(
    const torch::Tensor& env_lin) {
  check_finite(env_lin, "estimate");
  check_input((env_lin >= 0).all().item<bool>(), "estimate: negative magnitudes");
  auto compressed = dsp::power_compress(env_lin);
  auto mask = predict_mask(compressed);
  auto enhanced_compressed = torch::clamp_min(mask, 0.0) * compressed;
  auto enhanced = dsp::power_decompress(enhanced_compressed);
  return {mask, enhanced};
}

EnvironmentEstimator init_estimator(const EstimatorConfig& config, uint64_t seed) {
  torch::manual_seed(seed);
  EnvironmentEstimator estimator(config);
  // Start near the identity mask: small output weights, bias at one.
  torch::NoGradGuard no_grad;
  for (auto& p : estimator->named_parameters()) {
    if (p.key() == "out_conv.weight") p.value().mul_(0.05);
    if (p.key() == "out_conv.bias") p.value().fill_(1.0);
  }
  return estimator;
}

}  // namespace envtts
