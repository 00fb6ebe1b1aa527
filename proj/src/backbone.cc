// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/backbone.h"

#include <cmath>

#include "envtts/common.h"

namespace envtts {

// ---------------------------------------------------------------------------
// Text encoder
// ---------------------------------------------------------------------------

TextEncoderImpl::TextEncoderImpl(const BackboneConfig& config, int vocab_size)
    : config_(config), vocab_(vocab_size) {
  config_.validate();
  emb_ = register_module("emb", torch::nn::Embedding(vocab_size, config_.hidden));
  torch::NoGradGuard ng;
  emb_->weight.normal_(0.0, 1.0 / std::sqrt(double(config_.hidden)));
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int i = 0; i < config_.text_layers; ++i)
    blocks_->push_back(nn::TransformerBlock(config_.hidden, config_.text_heads, config_.text_ff,
                                            config_.text_kernel, config_.rel_window,
                                            config_.dropout));
  proj_ = register_module(
      "proj", torch::nn::Conv1d(torch::nn::Conv1dOptions(config_.hidden, 2 * config_.c_lat, 1)));
}

TextEncoding TextEncoderImpl::forward(const torch::Tensor& ids_in) {
  auto ids = ids_in.dim() == 1 ? ids_in.unsqueeze(0) : ids_in;
  check_input(ids.numel() > 0, "text_encode: empty id sequence");
  check_input((ids >= 0).all().item<bool>() && (ids < vocab_).all().item<bool>(),
              "text_encode: id outside the inventory");
  auto h = emb_->forward(ids) * std::sqrt(double(config_.hidden));  // (B, N, H)
  h = h.transpose(1, 2);                                            // (B, H, N)
  for (const auto& block : *blocks_)
    h = std::dynamic_pointer_cast<nn::TransformerBlockImpl>(block)->forward(h);
  auto stats = proj_->forward(h);
  TextEncoding out;
  out.hidden = h;
  out.mean = stats.narrow(1, 0, config_.c_lat);
  out.logstd = stats.narrow(1, config_.c_lat, config_.c_lat);
  return out;
}

// ---------------------------------------------------------------------------
// Posterior encoder
// ---------------------------------------------------------------------------

PosteriorEncoderImpl::PosteriorEncoderImpl(const BackboneConfig& config) : config_(config) {
  pre_ = register_module("pre", torch::nn::Conv1d(torch::nn::Conv1dOptions(
                                    513, config_.posterior_hidden, 1)));
  wn_ = register_module(
      "wn", nn::WaveNetStack(config_.posterior_hidden, config_.posterior_kernel,
                             config_.posterior_layers,
                             config_.condition_posterior_on_speaker ? config_.spk_dim : 0));
  proj_ = register_module(
      "proj", torch::nn::Conv1d(torch::nn::Conv1dOptions(config_.posterior_hidden,
                                                         2 * config_.c_lat, 1)));
}

PosteriorEncoding PosteriorEncoderImpl::forward(const torch::Tensor& spec,
                                                const torch::Tensor& spk, uint64_t seed,
                                                double temperature) {
  check_finite(spec, "posterior_encode");
  auto x = spec.dim() == 2 ? spec.unsqueeze(0) : spec;
  torch::Tensor g;
  if (config_.condition_posterior_on_speaker && spk.defined())
    g = (spk.dim() == 1 ? spk.unsqueeze(0) : spk).unsqueeze(-1);  // (B, spk, 1)
  auto h = wn_->forward(pre_->forward(x), g);
  auto stats = proj_->forward(h);
  PosteriorEncoding out;
  out.mean = stats.narrow(1, 0, config_.c_lat);
  out.logstd = stats.narrow(1, config_.c_lat, config_.c_lat);
  auto gen = make_generator(seed);
  auto eps = torch::randn(out.mean.sizes(), gen, out.mean.options());
  out.z = out.mean + eps * torch::exp(out.logstd) * temperature;
  return out;
}

// ---------------------------------------------------------------------------
// Normalizing flow
// ---------------------------------------------------------------------------

class ResidualCouplingFlowImpl::CouplingImpl : public torch::nn::Module {
 public:
  explicit CouplingImpl(const BackboneConfig& config) : half_(config.c_lat / 2) {
    pre_ = register_module(
        "pre", torch::nn::Conv1d(torch::nn::Conv1dOptions(half_, config.flow_hidden, 1)));
    wn_ = register_module("wn", nn::WaveNetStack(config.flow_hidden, config.flow_kernel,
                                                 config.flow_layers, config.spk_dim));
    post_ = register_module(
        "post", torch::nn::Conv1d(torch::nn::Conv1dOptions(config.flow_hidden, half_ * 2, 1)));
    // Identity start: scale 1, shift 0.
    torch::NoGradGuard ng;
    post_->weight.zero_();
    post_->bias.zero_();
  }

  std::pair<torch::Tensor, torch::Tensor> stats(const torch::Tensor& za,
                                                const torch::Tensor& g) {
    auto h = wn_->forward(pre_->forward(za), g);
    auto ms = post_->forward(h);
    return {ms.narrow(1, 0, half_), ms.narrow(1, half_, half_)};  // (m, logs)
  }

  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& z,
                                                  const torch::Tensor& g) {
    auto za = z.narrow(1, 0, half_), zb = z.narrow(1, half_, half_);
    auto [m, logs] = stats(za, g);
    auto zb_out = zb * torch::exp(logs) + m;
    return {torch::cat({za, zb_out}, 1), logs.sum({1, 2})};
  }

  torch::Tensor inverse(const torch::Tensor& z, const torch::Tensor& g) {
    auto za = z.narrow(1, 0, half_), zb = z.narrow(1, half_, half_);
    auto [m, logs] = stats(za, g);
    auto zb_out = (zb - m) * torch::exp(-logs);
    return torch::cat({za, zb_out}, 1);
  }

 private:
  int half_;
  torch::nn::Conv1d pre_{nullptr}, post_{nullptr};
  nn::WaveNetStack wn_{nullptr};
};

ResidualCouplingFlowImpl::ResidualCouplingFlowImpl(const BackboneConfig& config)
    : config_(config) {
  if (config_.c_lat % 2 != 0) throw ConfigError("flow: c_lat must be even");
  couplings_ = register_module("couplings", torch::nn::ModuleList());
  for (int i = 0; i < config_.flow_couplings; ++i)
    couplings_->push_back(std::make_shared<CouplingImpl>(config_));
}

std::pair<torch::Tensor, torch::Tensor> ResidualCouplingFlowImpl::forward(
    const torch::Tensor& z_in, const torch::Tensor& spk) {
  auto z = z_in.dim() == 2 ? z_in.unsqueeze(0) : z_in;
  auto g = (spk.dim() == 1 ? spk.unsqueeze(0) : spk).unsqueeze(-1);
  auto logdet = torch::zeros({z.size(0)}, z.options());
  for (const auto& mod : *couplings_) {
    auto coupling = std::dynamic_pointer_cast<CouplingImpl>(mod);
    auto [z_next, ld] = coupling->forward(z, g);
    z = torch::flip(z_next, {1});
    logdet = logdet + ld;
  }
  return {z_in.dim() == 2 ? z.squeeze(0) : z, logdet};
}

torch::Tensor ResidualCouplingFlowImpl::inverse(const torch::Tensor& zp_in,
                                                const torch::Tensor& spk) {
  auto z = zp_in.dim() == 2 ? zp_in.unsqueeze(0) : zp_in;
  auto g = (spk.dim() == 1 ? spk.unsqueeze(0) : spk).unsqueeze(-1);
  for (int64_t i = int64_t(couplings_->size()) - 1; i >= 0; --i) {
    auto coupling = std::dynamic_pointer_cast<CouplingImpl>((*couplings_)[size_t(i)]);
    z = coupling->inverse(torch::flip(z, {1}), g);
  }
  return zp_in.dim() == 2 ? z.squeeze(0) : z;
}

// ---------------------------------------------------------------------------
// Duration model
// ---------------------------------------------------------------------------

DurationModelImpl::DurationModelImpl(const BackboneConfig& config) : config_(config) {
  const int f = config_.dur_filter;
  cond_in_ = register_module(
      "cond_in", torch::nn::Conv1d(torch::nn::Conv1dOptions(config_.hidden, f, 1)));
  cond_mid_ = register_module(
      "cond_mid", torch::nn::Conv1d(torch::nn::Conv1dOptions(f, f, 3).padding(1)));
  cond_out_ = register_module(
      "cond_out", torch::nn::Conv1d(torch::nn::Conv1dOptions(f, f, 3).padding(1)));
  spk_proj_ = register_module(
      "spk_proj", torch::nn::Conv1d(torch::nn::Conv1dOptions(config_.spk_dim, f, 1)));
  flow_head_ = register_module(
      "flow_head",
      torch::nn::Conv1d(torch::nn::Conv1dOptions(f, 3 * config_.dur_flow_steps, 1)));
  det_head_ = register_module("det_head",
                              torch::nn::Conv1d(torch::nn::Conv1dOptions(f, 1, 1)));
  torch::NoGradGuard ng;
  flow_head_->weight.zero_();
  flow_head_->bias.zero_();
}

torch::Tensor DurationModelImpl::condition(const torch::Tensor& h_text,
                                           const torch::Tensor& spk) {
  auto x = h_text.detach();
  if (x.dim() == 2) x = x.unsqueeze(0);
  auto g = (spk.dim() == 1 ? spk.unsqueeze(0) : spk).unsqueeze(-1);
  auto c = torch::relu(cond_in_->forward(x));
  c = torch::relu(cond_mid_->forward(c));
  return cond_out_->forward(c) + spk_proj_->forward(g);
}

std::vector<std::array<torch::Tensor, 3>> DurationModelImpl::step_params(
    const torch::Tensor& cond) {
  auto raw = flow_head_->forward(cond);  // (B, 3K, N)
  std::vector<std::array<torch::Tensor, 3>> out;
  for (int k = 0; k < config_.dur_flow_steps; ++k) {
    auto log_a = 3.0 * torch::tanh(raw.narrow(1, 3 * k, 1).squeeze(1) / 3.0);  // (B, N)
    auto b = raw.narrow(1, 3 * k + 1, 1).squeeze(1);
    auto c = torch::softplus(raw.narrow(1, 3 * k + 2, 1).squeeze(1));
    out.push_back({log_a, b, c});
  }
  return out;
}

torch::Tensor DurationModelImpl::loss(const torch::Tensor& h_text,
                                      const torch::Tensor& durations_in,
                                      const torch::Tensor& spk, uint64_t seed) {
  auto durations = durations_in.dim() == 1 ? durations_in.unsqueeze(0) : durations_in;
  // Zero-length targets are clamped to one frame.
  auto d = torch::clamp_min(durations.to(torch::kFloat32), 1.0);
  auto cond = condition(h_text, spk);

  if (!config_.use_stochastic_duration) {
    auto pred = det_head_->forward(cond).squeeze(1);  // (B, N)
    return torch::mse_loss(pred, torch::log(d));
  }

  auto gen = make_generator(seed);
  auto u = torch::rand(d.sizes(), gen, d.options());
  auto x = torch::log(d + u);
  auto params = step_params(cond);
  auto logdet = torch::zeros_like(x);
  for (const auto& [log_a, b, c] : params) {
    auto u1 = x * torch::exp(log_a) + b;
    logdet = logdet + log_a;
    auto th = torch::tanh(u1);
    x = u1 + c * th;
    logdet = logdet + torch::log1p(c * (1.0 - th.pow(2)));
  }
  auto nll = 0.5 * (x.pow(2) + std::log(2.0 * M_PI)) - logdet;
  return nll.mean();
}

torch::Tensor DurationModelImpl::sample(const torch::Tensor& h_text, const torch::Tensor& spk,
                                        double noise_scale, uint64_t seed) {
  check_input(noise_scale >= 0, "duration sample: noise_scale must be >= 0");
  torch::NoGradGuard no_grad;
  auto cond = condition(h_text, spk);

  torch::Tensor x;
  if (!config_.use_stochastic_duration) {
    x = det_head_->forward(cond).squeeze(1);
  } else {
    auto params = step_params(cond);
    auto gen = make_generator(seed);
    auto v = torch::randn(params[0][0].sizes(), gen, cond.options()) * noise_scale;
    for (int k = config_.dur_flow_steps - 1; k >= 0; --k) {
      const auto& [log_a, b, c] = params[size_t(k)];
      // Solve u + c*tanh(u) = v by bisection (monotone in u).
      auto lo = v - c - 1.0, hi = v + c + 1.0;
      for (int it = 0; it < 60; ++it) {
        auto mid = 0.5 * (lo + hi);
        auto too_big = (mid + c * torch::tanh(mid)) > v;
        lo = torch::where(too_big, lo, mid);
        hi = torch::where(too_big, mid, hi);
      }
      auto u1 = 0.5 * (lo + hi);
      x = (u1 - b) * torch::exp(-log_a);
      v = x;
    }
  }
  auto d = torch::ceil(torch::exp(torch::clamp_max(x, std::log(1e4))));
  return torch::clamp_min(d, 1.0).to(torch::kInt64);
}

std::pair<torch::Tensor, torch::Tensor> expand_prior(const torch::Tensor& mean,
                                                     const torch::Tensor& logstd,
                                                     const torch::Tensor& durations) {
  check_input(mean.dim() == 2 && logstd.sizes() == mean.sizes(),
              "expand_prior: expected (C, N) statistics");
  check_input(durations.dim() == 1 && durations.size(0) == mean.size(1),
              "expand_prior: durations must have one entry per phoneme");
  check_input((durations >= 0).all().item<bool>(), "expand_prior: negative duration");
  auto d = durations.to(torch::kInt64);
  return {torch::repeat_interleave(mean, d, /*dim=*/1),
          torch::repeat_interleave(logstd, d, /*dim=*/1)};
}

// ---------------------------------------------------------------------------
// Decoder
// ---------------------------------------------------------------------------

class DecoderImpl::ResBlockImpl : public torch::nn::Module {
 public:
  ResBlockImpl(int channels, int kernel, const std::vector<int>& dilations) {
    convs_ = register_module("convs", torch::nn::ModuleList());
    for (int d : dilations)
      convs_->push_back(torch::nn::Conv1d(torch::nn::Conv1dOptions(channels, channels, kernel)
                                              .dilation(d)
                                              .padding((kernel - 1) * d / 2)));
  }

  torch::Tensor forward(const torch::Tensor& x_in) {
    auto x = x_in;
    for (const auto& mod : *convs_) {
      auto conv = std::dynamic_pointer_cast<torch::nn::Conv1dImpl>(mod);
      x = x + conv->forward(torch::leaky_relu(x, 0.1));
    }
    return x;
  }

 private:
  torch::nn::ModuleList convs_;
};

DecoderImpl::DecoderImpl(const BackboneConfig& config) : config_(config) {
  config_.validate();
  pre_ = register_module("pre", torch::nn::Conv1d(torch::nn::Conv1dOptions(
                                    config_.c_lat, config_.dec_channels, 7).padding(3)));
  cond_ = register_module(
      "cond", torch::nn::Linear(config_.spk_dim + config_.env_dim, config_.dec_channels));
  ups_ = register_module("ups", torch::nn::ModuleList());
  mrfs_ = register_module("mrfs", torch::nn::ModuleList());
  int ch = config_.dec_channels;
  for (size_t i = 0; i < config_.upsample_rates.size(); ++i) {
    const int rate = config_.upsample_rates[i], kernel = config_.upsample_kernels[i];
    ups_->push_back(torch::nn::ConvTranspose1d(
        torch::nn::ConvTranspose1dOptions(ch, ch / 2, kernel)
            .stride(rate)
            .padding((kernel - rate) / 2)));
    ch /= 2;
    auto mrf = torch::nn::ModuleList();
    for (int k : config_.res_kernels)
      mrf->push_back(std::make_shared<ResBlockImpl>(ch, k, config_.res_dilations));
    mrfs_->push_back(mrf);
  }
  post_ = register_module(
      "post", torch::nn::Conv1d(torch::nn::Conv1dOptions(ch, 1, 7).padding(3)));
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& z_in, const torch::Tensor& spk_in,
                                   const torch::Tensor& env_in) {
  auto z = z_in.dim() == 2 ? z_in.unsqueeze(0) : z_in;
  auto spk = spk_in.dim() == 1 ? spk_in.unsqueeze(0) : spk_in;
  auto env = env_in.dim() == 1 ? env_in.unsqueeze(0) : env_in;
  if (spk.size(1) != config_.spk_dim || env.size(1) != config_.env_dim)
    throw ConfigError("decode: conditioning embedding dimension mismatch");
  check_finite(z, "decode");

  auto g = cond_->forward(torch::cat({spk, env}, 1)).unsqueeze(-1);  // (B, C0, 1)
  auto x = pre_->forward(z) + g;
  for (size_t i = 0; i < ups_->size(); ++i) {
    x = torch::leaky_relu(x, 0.1);
    x = std::dynamic_pointer_cast<torch::nn::ConvTranspose1dImpl>((*ups_)[i])->forward(x);
    auto mrf = std::dynamic_pointer_cast<torch::nn::ModuleListImpl>((*mrfs_)[i]);
    torch::Tensor acc;
    for (const auto& block : *mrf) {
      auto out = std::dynamic_pointer_cast<ResBlockImpl>(block)->forward(x);
      acc = acc.defined() ? acc + out : out;
    }
    x = acc / double(mrf->size());
  }
  x = torch::tanh(post_->forward(torch::leaky_relu(x, 0.1)));
  return z_in.dim() == 2 ? x.squeeze(0) : x;
}

// ---------------------------------------------------------------------------
// Discriminators
// ---------------------------------------------------------------------------

class MultiDiscriminatorImpl::PeriodBranchImpl : public torch::nn::Module {
 public:
  PeriodBranchImpl(int period, const std::vector<int>& channels) : period_(period) {
    convs_ = register_module("convs", torch::nn::ModuleList());
    int in_ch = 1;
    for (int ch : channels) {
      convs_->push_back(torch::nn::Conv2d(
          torch::nn::Conv2dOptions(in_ch, ch, {5, 1}).stride({3, 1}).padding({2, 0})));
      in_ch = ch;
    }
    final_ = register_module(
        "final", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_ch, 1, {3, 1}).padding({1, 0})));
  }

  std::pair<torch::Tensor, std::vector<torch::Tensor>> forward(const torch::Tensor& wav) {
    auto x = wav;
    const int64_t L = x.size(2);
    const int64_t rem = L % period_;
    if (rem != 0) x = torch::reflection_pad1d(x, {0, period_ - rem});
    x = x.view({x.size(0), 1, x.size(2) / period_, period_});
    std::vector<torch::Tensor> feats;
    for (const auto& mod : *convs_) {
      x = torch::leaky_relu(
          std::dynamic_pointer_cast<torch::nn::Conv2dImpl>(mod)->forward(x), 0.1);
      feats.push_back(x);
    }
    x = final_->forward(x);
    feats.push_back(x);
    return {x.flatten(1).mean(1), feats};
  }

 private:
  int period_;
  torch::nn::ModuleList convs_;
  torch::nn::Conv2d final_{nullptr};
};

class MultiDiscriminatorImpl::ScaleBranchImpl : public torch::nn::Module {
 public:
  explicit ScaleBranchImpl(const std::vector<int>& channels) {
    convs_ = register_module("convs", torch::nn::ModuleList());
    int in_ch = 1;
    const std::vector<int> kernels = {15, 41, 41, 5};
    const std::vector<int> strides = {1, 4, 4, 1};
    for (size_t i = 0; i < channels.size(); ++i) {
      const int k = kernels[std::min(i, kernels.size() - 1)];
      const int s = strides[std::min(i, strides.size() - 1)];
      convs_->push_back(torch::nn::Conv1d(
          torch::nn::Conv1dOptions(in_ch, channels[i], k).stride(s).padding(k / 2)));
      in_ch = channels[i];
    }
    final_ = register_module(
        "final", torch::nn::Conv1d(torch::nn::Conv1dOptions(in_ch, 1, 3).padding(1)));
  }

  std::pair<torch::Tensor, std::vector<torch::Tensor>> forward(const torch::Tensor& wav) {
    auto x = wav;
    std::vector<torch::Tensor> feats;
    for (const auto& mod : *convs_) {
      x = torch::leaky_relu(
          std::dynamic_pointer_cast<torch::nn::Conv1dImpl>(mod)->forward(x), 0.1);
      feats.push_back(x);
    }
    x = final_->forward(x);
    feats.push_back(x);
    return {x.flatten(1).mean(1), feats};
  }

 private:
  torch::nn::ModuleList convs_;
  torch::nn::Conv1d final_{nullptr};
};

MultiDiscriminatorImpl::MultiDiscriminatorImpl(const DiscriminatorConfig& config)
    : config_(config) {
  branches_ = register_module("branches", torch::nn::ModuleList());
  for (int period : config_.periods)
    branches_->push_back(std::make_shared<PeriodBranchImpl>(period, config_.mpd_channels));
  for (int s = 0; s < config_.msd_scales; ++s)
    branches_->push_back(std::make_shared<ScaleBranchImpl>(config_.msd_channels));
}

DiscriminatorOutput MultiDiscriminatorImpl::forward(const torch::Tensor& wav_in) {
  auto wav = wav_in.dim() == 2 ? wav_in.unsqueeze(1) : wav_in;  // (B, 1, L)
  check_finite(wav, "discriminate");
  DiscriminatorOutput out;
  const size_t n_periods = config_.periods.size();
  auto scaled = wav;
  for (size_t i = 0; i < branches_->size(); ++i) {
    if (i < n_periods) {
      auto branch = std::dynamic_pointer_cast<PeriodBranchImpl>((*branches_)[i]);
      auto [logit, feats] = branch->forward(wav);
      out.logits.push_back(logit);
      out.features.push_back(std::move(feats));
    } else {
      auto branch = std::dynamic_pointer_cast<ScaleBranchImpl>((*branches_)[i]);
      if (i > n_periods)
        scaled = torch::avg_pool1d(scaled, 4, 2, 2, /*ceil_mode=*/false,
                                   /*count_include_pad=*/false);
      auto [logit, feats] = branch->forward(scaled);
      out.logits.push_back(logit);
      out.features.push_back(std::move(feats));
    }
  }
  return out;
}

}  // namespace envtts
