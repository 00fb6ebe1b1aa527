// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/losses.h"

#include "envtts/common.h"

namespace envtts {
namespace losses {

torch::Tensor se_loss(const torch::Tensor& lin_raw, const torch::Tensor& lin_enh,
                      const torch::Tensor& mel_raw, const torch::Tensor& mel_enh) {
  check_input(lin_raw.sizes() == lin_enh.sizes(), "se_loss: linear pair shape mismatch");
  check_input(mel_raw.sizes() == mel_enh.sizes(), "se_loss: mel pair shape mismatch");
  auto frob_sq = (lin_raw - lin_enh).pow(2).mean();
  auto l1 = (mel_raw - mel_enh).abs().mean();
  return frob_sq + l1;
}

torch::Tensor gaussian_kl_sum(const torch::Tensor& m_q, const torch::Tensor& logs_q,
                              const torch::Tensor& m_p, const torch::Tensor& logs_p) {
  check_input(m_q.sizes() == logs_q.sizes() && m_p.sizes() == logs_p.sizes() &&
                  m_q.sizes() == m_p.sizes(),
              "gaussian_kl: shape mismatch");
  auto kl = logs_p - logs_q - 0.5 +
            0.5 * (torch::exp(2.0 * logs_q) + (m_q - m_p).pow(2)) * torch::exp(-2.0 * logs_p);
  return kl.sum();
}

torch::Tensor kl_loss_sum(const torch::Tensor& z_p, const torch::Tensor& logs_q,
                          const torch::Tensor& m_p, const torch::Tensor& logs_p,
                          const torch::Tensor& logdet_sum) {
  check_input(z_p.sizes() == logs_q.sizes() && z_p.sizes() == m_p.sizes() &&
                  z_p.sizes() == logs_p.sizes(),
              "kl_loss: shape mismatch");
  auto kl = logs_p - logs_q - 0.5 + 0.5 * (z_p - m_p).pow(2) * torch::exp(-2.0 * logs_p);
  return kl.sum() - logdet_sum.sum();
}

torch::Tensor kl_loss(const torch::Tensor& z_p, const torch::Tensor& logs_q,
                      const torch::Tensor& m_p, const torch::Tensor& logs_p,
                      const torch::Tensor& logdet_sum) {
  return kl_loss_sum(z_p, logs_q, m_p, logs_p, logdet_sum) / double(z_p.numel());
}

torch::Tensor discriminator_loss(const std::vector<torch::Tensor>& real_logits,
                                 const std::vector<torch::Tensor>& fake_logits) {
  check_input(real_logits.size() == fake_logits.size(),
              "discriminator_loss: branch count mismatch");
  torch::Tensor loss;
  for (size_t i = 0; i < real_logits.size(); ++i) {
    auto term = (real_logits[i] - 1.0).pow(2).mean() + fake_logits[i].pow(2).mean();
    loss = loss.defined() ? loss + term : term;
  }
  return loss;
}

torch::Tensor generator_adversarial_loss(const std::vector<torch::Tensor>& fake_logits) {
  torch::Tensor loss;
  for (const auto& logit : fake_logits) {
    auto term = (logit - 1.0).pow(2).mean();
    loss = loss.defined() ? loss + term : term;
  }
  return loss;
}

torch::Tensor feature_matching_loss(
    const std::vector<std::vector<torch::Tensor>>& real_features,
    const std::vector<std::vector<torch::Tensor>>& fake_features) {
  check_input(real_features.size() == fake_features.size(),
              "feature_matching_loss: branch count mismatch");
  torch::Tensor loss;
  for (size_t b = 0; b < real_features.size(); ++b) {
    check_input(real_features[b].size() == fake_features[b].size(),
                "feature_matching_loss: layer count mismatch");
    for (size_t l = 0; l < real_features[b].size(); ++l) {
      auto term = (real_features[b][l].detach() - fake_features[b][l]).abs().mean();
      loss = loss.defined() ? loss + term : term;
    }
  }
  return loss;
}

}  // namespace losses
}  // namespace envtts
