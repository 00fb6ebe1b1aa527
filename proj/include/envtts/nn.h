// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_NN_H_
#define ENVTTS_NN_H_

#include <torch/torch.h>

namespace envtts {
namespace nn {

// LayerNorm across the channel axis of (B, C, T) tensors.
class ChannelLayerNormImpl : public torch::nn::Module {
 public:
  explicit ChannelLayerNormImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::Tensor gamma_, beta_;
};
TORCH_MODULE(ChannelLayerNorm);

// Multi-head self-attention over (B, C, T) with optional windowed relative
// position terms on the keys. window < 0 disables the relative part.
class SelfAttentionImpl : public torch::nn::Module {
 public:
  SelfAttentionImpl(int channels, int n_heads, int rel_window, double dropout);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  int heads_, head_dim_, window_;
  torch::nn::Conv1d qkv_{nullptr}, out_{nullptr};
  torch::nn::Dropout drop_{nullptr};
  torch::Tensor rel_k_;  // (2*window+1, head_dim) when window >= 0
};
TORCH_MODULE(SelfAttention);

// Conv feed-forward block (kernel 1 or 3 typical).
class FeedForwardImpl : public torch::nn::Module {
 public:
  FeedForwardImpl(int channels, int ff_dim, int kernel, double dropout);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv1d conv1_{nullptr}, conv2_{nullptr};
  torch::nn::Dropout drop_{nullptr};
};
TORCH_MODULE(FeedForward);

// Pre-norm transformer encoder block.
class TransformerBlockImpl : public torch::nn::Module {
 public:
  TransformerBlockImpl(int channels, int n_heads, int ff_dim, int ff_kernel, int rel_window,
                       double dropout);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ChannelLayerNorm norm1_{nullptr}, norm2_{nullptr};
  SelfAttention attn_{nullptr};
  FeedForward ff_{nullptr};
};
TORCH_MODULE(TransformerBlock);

// (dim, T) sinusoidal position table.
torch::Tensor sinusoidal_positions(int64_t length, int64_t dim,
                                   torch::TensorOptions options = {});

// Gated dilated convolution stack with global conditioning and skip
// aggregation.
class WaveNetStackImpl : public torch::nn::Module {
 public:
  WaveNetStackImpl(int hidden, int kernel, int n_layers, int gin_channels,
                   double dropout = 0.0);
  // x: (B, hidden, T); g: (B, gin, 1) or undefined.
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& g = {});

  int hidden() const { return hidden_; }

 private:
  int hidden_, n_layers_, gin_;
  torch::nn::ModuleList in_layers_, res_skip_layers_;
  torch::nn::Conv1d cond_layer_{nullptr};
  torch::nn::Dropout drop_{nullptr};
};
TORCH_MODULE(WaveNetStack);

}  // namespace nn
}  // namespace envtts

#endif  // ENVTTS_NN_H_
