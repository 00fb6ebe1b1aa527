// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/nn.h"

#include <cmath>

namespace envtts {
namespace nn {

ChannelLayerNormImpl::ChannelLayerNormImpl(int channels) {
  gamma_ = register_parameter("gamma", torch::ones({channels, 1}));
  beta_ = register_parameter("beta", torch::zeros({channels, 1}));
}

torch::Tensor ChannelLayerNormImpl::forward(const torch::Tensor& x) {
  auto mean = x.mean(1, /*keepdim=*/true);
  auto var = (x - mean).pow(2).mean(1, /*keepdim=*/true);
  return (x - mean) / torch::sqrt(var + 1e-5) * gamma_ + beta_;
}

SelfAttentionImpl::SelfAttentionImpl(int channels, int n_heads, int rel_window, double dropout)
    : heads_(n_heads), head_dim_(channels / n_heads), window_(rel_window) {
  qkv_ = register_module(
      "qkv", torch::nn::Conv1d(torch::nn::Conv1dOptions(channels, channels * 3, 1)));
  out_ = register_module("out",
                         torch::nn::Conv1d(torch::nn::Conv1dOptions(channels, channels, 1)));
  drop_ = register_module("drop", torch::nn::Dropout(dropout));
  if (window_ >= 0) {
    rel_k_ = register_parameter(
        "rel_k", torch::randn({2 * window_ + 1, head_dim_}) / std::sqrt(double(head_dim_)));
  }
}

torch::Tensor SelfAttentionImpl::forward(const torch::Tensor& x) {
  const auto B = x.size(0), T = x.size(2);
  auto qkv = qkv_->forward(x).view({B, 3, heads_, head_dim_, T});
  auto q = qkv.select(1, 0).permute({0, 1, 3, 2});  // (B, H, T, d)
  auto k = qkv.select(1, 1).permute({0, 1, 3, 2});
  auto v = qkv.select(1, 2).permute({0, 1, 3, 2});

  auto logits = torch::matmul(q, k.transpose(-2, -1)) / std::sqrt(double(head_dim_));
  if (window_ >= 0) {
    // Windowed relative-position term on the keys: contribution is zero
    // outside |j - i| <= window.
    auto rel_scores = torch::matmul(q, rel_k_.transpose(0, 1)) /
                      std::sqrt(double(head_dim_));  // (B, H, T, 2w+1)
    auto offsets = torch::arange(T, torch::kLong).unsqueeze(0) -
                   torch::arange(T, torch::kLong).unsqueeze(1);  // (T, T) = j - i
    auto valid = (offsets.abs() <= window_);
    auto idx = (offsets + window_).clamp(0, 2 * window_);  // (T, T)
    auto gathered = torch::gather(
        rel_scores, 3, idx.view({1, 1, T, T}).expand({B, heads_, T, T}));
    logits = logits + gathered * valid.view({1, 1, T, T}).to(logits.dtype());
  }
  auto attn = torch::softmax(logits, -1);
  attn = drop_->forward(attn);
  auto ctx = torch::matmul(attn, v);  // (B, H, T, d)
  auto merged = ctx.permute({0, 1, 3, 2}).reshape({B, heads_ * head_dim_, T});
  return out_->forward(merged);
}

FeedForwardImpl::FeedForwardImpl(int channels, int ff_dim, int kernel, double dropout) {
  conv1_ = register_module("conv1", torch::nn::Conv1d(torch::nn::Conv1dOptions(channels, ff_dim, kernel)
                                                          .padding(kernel / 2)));
  conv2_ = register_module("conv2", torch::nn::Conv1d(torch::nn::Conv1dOptions(ff_dim, channels, kernel)
                                                          .padding(kernel / 2)));
  drop_ = register_module("drop", torch::nn::Dropout(dropout));
}

torch::Tensor FeedForwardImpl::forward(const torch::Tensor& x) {
  return conv2_->forward(drop_->forward(torch::relu(conv1_->forward(x))));
}

TransformerBlockImpl::TransformerBlockImpl(int channels, int n_heads, int ff_dim, int ff_kernel,
                                           int rel_window, double dropout) {
  norm1_ = register_module("norm1", ChannelLayerNorm(channels));
  norm2_ = register_module("norm2", ChannelLayerNorm(channels));
  attn_ = register_module("attn", SelfAttention(channels, n_heads, rel_window, dropout));
  ff_ = register_module("ff", FeedForward(channels, ff_dim, ff_kernel, dropout));
}

torch::Tensor TransformerBlockImpl::forward(const torch::Tensor& x) {
  auto h = x + attn_->forward(norm1_->forward(x));
  return h + ff_->forward(norm2_->forward(h));
}

torch::Tensor sinusoidal_positions(int64_t length, int64_t dim, torch::TensorOptions options) {
  auto pos = torch::arange(length, options.dtype(torch::kFloat32)).unsqueeze(0);  // (1, T)
  auto i = torch::arange(dim / 2, options.dtype(torch::kFloat32)).unsqueeze(1);   // (d/2, 1)
  auto angle = pos * torch::exp(-i * (std::log(10000.0) / std::max<int64_t>(1, dim / 2 - 1)));
  auto table = torch::zeros({dim, length}, options.dtype(torch::kFloat32));
  table.index_put_({torch::indexing::Slice(0, torch::indexing::None, 2)}, torch::sin(angle));
  table.index_put_({torch::indexing::Slice(1, torch::indexing::None, 2)}, torch::cos(angle));
  return table;
}

WaveNetStackImpl::WaveNetStackImpl(int hidden, int kernel, int n_layers, int gin_channels,
                                   double dropout)
    : hidden_(hidden), n_layers_(n_layers), gin_(gin_channels) {
  in_layers_ = register_module("in_layers", torch::nn::ModuleList());
  res_skip_layers_ = register_module("res_skip_layers", torch::nn::ModuleList());
  drop_ = register_module("drop", torch::nn::Dropout(dropout));
  for (int i = 0; i < n_layers; ++i) {
    in_layers_->push_back(torch::nn::Conv1d(
        torch::nn::Conv1dOptions(hidden, 2 * hidden, kernel).padding(kernel / 2)));
    const int out_ch = (i < n_layers - 1) ? 2 * hidden : hidden;
    res_skip_layers_->push_back(
        torch::nn::Conv1d(torch::nn::Conv1dOptions(hidden, out_ch, 1)));
  }
  if (gin_ > 0)
    cond_layer_ = register_module(
        "cond", torch::nn::Conv1d(torch::nn::Conv1dOptions(gin_, 2 * hidden * n_layers, 1)));
}

torch::Tensor WaveNetStackImpl::forward(const torch::Tensor& x_in, const torch::Tensor& g) {
  auto x = x_in;
  torch::Tensor g_all;
  if (gin_ > 0 && g.defined()) g_all = cond_layer_->forward(g);
  torch::Tensor output = torch::zeros_like(x);
  for (int i = 0; i < n_layers_; ++i) {
    auto conv = std::dynamic_pointer_cast<torch::nn::Conv1dImpl>(in_layers_[size_t(i)]);
    auto x_conv = conv->forward(x);
    if (g_all.defined())
      x_conv = x_conv + g_all.narrow(1, int64_t(i) * 2 * hidden_, 2 * hidden_);
    auto a = x_conv.narrow(1, 0, hidden_);
    auto b = x_conv.narrow(1, hidden_, hidden_);
    auto acts = drop_->forward(torch::tanh(a) * torch::sigmoid(b));
    auto rs = std::dynamic_pointer_cast<torch::nn::Conv1dImpl>(res_skip_layers_[size_t(i)])
                  ->forward(acts);
    if (i < n_layers_ - 1) {
      x = x + rs.narrow(1, 0, hidden_);
      output = output + rs.narrow(1, hidden_, hidden_);
    } else {
      output = output + rs;
    }
  }
  return output;
}

}  // namespace nn
}  // namespace envtts
