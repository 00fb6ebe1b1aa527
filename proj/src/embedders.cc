// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/embedders.h"

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "envtts/audio_io.h"
#include "envtts/checkpoint.h"

namespace envtts {

EnvironmentEmbedding zero_environment_embedding(int dim) {
  check_input(dim > 0, "zero_environment_embedding: dim must be positive");
  return {torch::zeros({dim}, torch::kFloat32)};
}

// Hierarchical multi-scale residual unit: channels split into groups, each
// group convolved and fed into the next.
class EcapaEncoderImpl::Res2BlockImpl : public torch::nn::Module {
 public:
  Res2BlockImpl(int channels, int scale, int dilation) : scale_(scale) {
    const int width = channels / scale;
    pre_ = register_module("pre", torch::nn::Conv1d(torch::nn::Conv1dOptions(channels, channels, 1)));
    pre_bn_ = register_module("pre_bn", torch::nn::BatchNorm1d(channels));
    convs_ = register_module("convs", torch::nn::ModuleList());
    for (int i = 0; i < scale - 1; ++i)
      convs_->push_back(torch::nn::Conv1d(
          torch::nn::Conv1dOptions(width, width, 3).dilation(dilation).padding(dilation)));
    post_ = register_module("post", torch::nn::Conv1d(torch::nn::Conv1dOptions(channels, channels, 1)));
    post_bn_ = register_module("post_bn", torch::nn::BatchNorm1d(channels));
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto h = pre_bn_->forward(torch::relu(pre_->forward(x)));
    const int width = int(h.size(1)) / scale_;
    std::vector<torch::Tensor> outs;
    torch::Tensor carry;
    for (int i = 0; i < scale_; ++i) {
      auto part = h.narrow(1, int64_t(i) * width, width);
      if (i == 0) {
        carry = part;
      } else {
        auto conv = std::dynamic_pointer_cast<torch::nn::Conv1dImpl>(convs_[size_t(i) - 1]);
        carry = torch::relu(conv->forward(part + carry));
      }
      outs.push_back(carry);
    }
    auto merged = torch::cat(outs, 1);
    return x + post_bn_->forward(torch::relu(post_->forward(merged)));
  }

 private:
  int scale_;
  torch::nn::Conv1d pre_{nullptr}, post_{nullptr};
  torch::nn::BatchNorm1d pre_bn_{nullptr}, post_bn_{nullptr};
  torch::nn::ModuleList convs_;
};

EcapaEncoderImpl::EcapaEncoderImpl(const EcapaConfig& config) : config_(config) {
  config_.validate();
  const int C = config_.channels;
  stem_ = register_module(
      "stem", torch::nn::Conv1d(torch::nn::Conv1dOptions(config_.in_dim, C, 5).padding(2)));
  stem_bn_ = register_module("stem_bn", torch::nn::BatchNorm1d(C));
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int dilation : {2, 3, 4})
    blocks_->push_back(std::make_shared<Res2BlockImpl>(C, config_.res2_scale, dilation));
  const int mfa_dim = 2 * C;
  mfa_ = register_module("mfa", torch::nn::Conv1d(torch::nn::Conv1dOptions(3 * C, mfa_dim, 1)));
  attn_pre_ = register_module(
      "attn_pre", torch::nn::Conv1d(torch::nn::Conv1dOptions(mfa_dim, config_.attn_dim, 1)));
  attn_out_ = register_module(
      "attn_out", torch::nn::Conv1d(torch::nn::Conv1dOptions(config_.attn_dim, 1, 1)));
  proj_ = register_module("proj", torch::nn::Linear(2 * mfa_dim, config_.emb_dim));
}

torch::Tensor EcapaEncoderImpl::forward(const torch::Tensor& features) {
  const bool batched = features.dim() == 3;
  auto x = batched ? features : features.unsqueeze(0);
  check_input(x.size(1) == config_.in_dim,
              "ecapa: expected " + std::to_string(config_.in_dim) + " input rows");
  check_input(x.size(2) >= 8, "ecapa: need at least 8 frames for pooling statistics");
  check_finite(x, "ecapa input");

  auto h = stem_bn_->forward(torch::relu(stem_->forward(x)));
  std::vector<torch::Tensor> taps;
  for (const auto& block : *blocks_) {
    h = std::dynamic_pointer_cast<Res2BlockImpl>(block)->forward(h);
    taps.push_back(h);
  }
  auto mfa = torch::relu(mfa_->forward(torch::cat(taps, 1)));  // (B, 2C, T)

  // Attentive statistics pooling: frame weights from a small bottleneck.
  auto scores = attn_out_->forward(torch::tanh(attn_pre_->forward(mfa)));  // (B, 1, T)
  auto alpha = torch::softmax(scores, 2);
  auto mean = (mfa * alpha).sum(2);                                  // (B, 2C)
  auto sq = (mfa.pow(2) * alpha).sum(2);                             // (B, 2C)
  auto std = torch::sqrt(torch::clamp_min(sq - mean.pow(2), 1e-9));  // (B, 2C)
  auto emb = proj_->forward(torch::cat({mean, std}, 1));             // (B, emb)
  return emb;
}

torch::Tensor EcapaEncoderImpl::embed(const torch::Tensor& features) {
  auto e = forward(features.dim() == 3 ? features : features.unsqueeze(0)).squeeze(0);
  return e / torch::clamp_min(e.norm(), 1e-12);
}

EcapaEncoder init_ecapa(const EcapaConfig& config, uint64_t seed) {
  torch::manual_seed(seed);
  return EcapaEncoder(config);
}

EnvironmentEmbedding environment_encode(const torch::Tensor& mask, EcapaEncoder& encoder) {
  check_input(mask.dim() == 2 && mask.size(0) == dsp::kNumBins,
              "environment_encode: expected a (513, T) mask");
  check_input(mask.size(1) >= 8, "environment_encode: mask too short (T < 8)");
  return {encoder->embed(mask)};
}

SpeakerEmbedding SpeakerEncoderHandle::embed(const dsp::Waveform& wav) const {
  check_input(wav.duration() >= 1.0, "speaker_encode: reference must be at least 1 s");
  auto mel = dsp::linear_to_mel(dsp::stft_magnitude(wav));
  return {embed_mel(mel)};
}

torch::Tensor SpeakerEncoderHandle::embed_mel(const torch::Tensor& mel) const {
  torch::NoGradGuard no_grad;
  EcapaEncoder shared = net;  // holders share the underlying module
  shared->eval();
  return shared->embed(mel);
}

// ---------------------------------------------------------------------------
// Pretraining
// ---------------------------------------------------------------------------

namespace {

// Additive-angular-margin softmax head.
struct AamHead : torch::nn::Module {
  AamHead(int emb_dim, int n_classes, double margin, double scale)
      : margin_(margin), scale_(scale) {
    weight = register_parameter("weight", torch::randn({n_classes, emb_dim}) * 0.01);
  }

  torch::Tensor loss(const torch::Tensor& emb, const torch::Tensor& labels) {
    auto w = weight / torch::clamp_min(weight.norm(2, 1, true), 1e-12);
    auto e = emb / torch::clamp_min(emb.norm(2, 1, true), 1e-12);
    auto cos = torch::matmul(e, w.transpose(0, 1)).clamp(-1 + 1e-7, 1 - 1e-7);
    auto theta = torch::acos(cos);
    auto onehot = torch::one_hot(labels, weight.size(0)).to(cos.dtype());
    auto logits = scale_ * torch::cos(theta + margin_ * onehot);
    return torch::nn::functional::cross_entropy(logits, labels);
  }

  torch::Tensor weight;
  double margin_, scale_;
};

}  // namespace

SpeakerEncoderHandle pretrain_speaker_encoder(const corpus::Manifest& manifest,
                                              const EcapaConfig& config,
                                              const SpeakerTrainConfig& train_config,
                                              std::vector<double>* loss_log) {
  auto train_records = manifest.split(/*test=*/false);
  check_input(!train_records.empty(), "pretrain_speaker_encoder: empty train split");

  // Speaker label table.
  std::vector<std::string> speakers;
  for (const auto* rec : train_records)
    if (std::find(speakers.begin(), speakers.end(), rec->speaker_id) == speakers.end())
      speakers.push_back(rec->speaker_id);
  std::sort(speakers.begin(), speakers.end());
  check_input(speakers.size() >= 2,
              "pretrain_speaker_encoder: need at least 2 speakers for classification");

  // Precompute mel features for raw and every non-holdout environment
  // version. The desk corpus fits in memory.
  struct Item {
    int label;
    torch::Tensor mel;
  };
  std::vector<Item> items;
  for (const auto* rec : train_records) {
    const int label = int(std::find(speakers.begin(), speakers.end(), rec->speaker_id) -
                          speakers.begin());
    std::vector<std::string> paths{rec->raw_path};
    for (const auto& [env_id, path] : rec->env_paths)
      if (!manifest.is_holdout_env(env_id)) paths.push_back(path);
    for (const auto& path : paths) {
      auto wav = load_wav(path);
      items.push_back({label, dsp::linear_to_mel(dsp::stft_magnitude(wav))});
    }
  }

  torch::manual_seed(train_config.seed);
  auto encoder = EcapaEncoder(config);
  auto head = std::make_shared<AamHead>(config.emb_dim, int(speakers.size()),
                                        train_config.aam_margin, train_config.aam_scale);
  std::vector<torch::Tensor> params = encoder->parameters();
  auto head_params = head->parameters();
  params.insert(params.end(), head_params.begin(), head_params.end());
  torch::optim::Adam opt(params, torch::optim::AdamOptions(train_config.lr));

  std::mt19937_64 rng(train_config.seed);
  encoder->train();
  const int seg = train_config.segment_frames;
  for (int step = 0; step < train_config.steps; ++step) {
    std::vector<torch::Tensor> feats;
    std::vector<int64_t> labels;
    for (int b = 0; b < train_config.batch_size; ++b) {
      const auto& item = items[rng() % items.size()];
      const int64_t T = item.mel.size(1);
      torch::Tensor crop;
      if (T <= seg) {
        crop = torch::constant_pad_nd(item.mel, {0, seg - T}, std::log(1e-5));
      } else {
        const int64_t start = int64_t(rng() % uint64_t(T - seg + 1));
        crop = item.mel.narrow(1, start, seg);
      }
      feats.push_back(crop);
      labels.push_back(item.label);
    }
    auto batch = torch::stack(feats);
    auto y = torch::tensor(labels, torch::kLong);
    opt.zero_grad();
    auto emb = encoder->forward(batch);
    auto loss = head->loss(emb, y);
    loss.backward();
    opt.step();
    if (loss_log) loss_log->push_back(loss.item<double>());
  }

  encoder->eval();
  SpeakerEncoderHandle handle;
  handle.net = encoder;
  handle.config = config;
  handle.frozen = true;
  return handle;
}

void save_speaker_encoder(const std::string& path, const SpeakerEncoderHandle& handle) {
  ckpt::Container c;
  nlohmann::json meta = {{"impl_id", handle.impl_id},
                         {"in_dim", handle.config.in_dim},
                         {"channels", handle.config.channels},
                         {"emb_dim", handle.config.emb_dim},
                         {"attn_dim", handle.config.attn_dim},
                         {"res2_scale", handle.config.res2_scale}};
  c.json_sections["spk_encoder_meta"] = meta.dump();
  c.tensor_sections["spk_encoder"] = ckpt::dump_module(*handle.net);
  ckpt::write_container(path, c);
}

SpeakerEncoderHandle load_speaker_encoder(const std::string& path) {
  auto c = ckpt::read_container(path);
  auto meta = nlohmann::json::parse(c.json("spk_encoder_meta"));
  EcapaConfig config;
  config.in_dim = meta.at("in_dim").get<int>();
  config.channels = meta.at("channels").get<int>();
  config.emb_dim = meta.at("emb_dim").get<int>();
  config.attn_dim = meta.at("attn_dim").get<int>();
  config.res2_scale = meta.at("res2_scale").get<int>();

  SpeakerEncoderHandle handle;
  handle.net = EcapaEncoder(config);
  handle.config = config;
  handle.impl_id = meta.value("impl_id", handle.impl_id);
  ckpt::load_module(*handle.net, c.tensors("spk_encoder"), "spk_encoder");
  handle.net->eval();
  return handle;
}

}  // namespace envtts
