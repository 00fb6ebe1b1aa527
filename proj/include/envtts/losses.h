// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_LOSSES_H_
#define ENVTTS_LOSSES_H_

#include <torch/torch.h>

#include <vector>

namespace envtts {
namespace losses {

// Spectrogram enhancement loss: squared Frobenius distance of the linear
// pair plus L1 distance of the mel pair, each mean-reduced over elements so
// the value is invariant to batch layout.
torch::Tensor se_loss(const torch::Tensor& lin_raw, const torch::Tensor& lin_enh,
                      const torch::Tensor& mel_raw, const torch::Tensor& mel_enh);

// Closed-form KL(N(m_q, s_q) || N(m_p, s_p)) for diagonal Gaussians, summed
// over elements. Exact reference for the identity-flow case.
torch::Tensor gaussian_kl_sum(const torch::Tensor& m_q, const torch::Tensor& logs_q,
                              const torch::Tensor& m_p, const torch::Tensor& logs_p);

// Single-sample KL estimator in the flow-transformed domain: Gaussian
// log-density of z_p under the expanded prior, closed-form posterior
// entropy, minus the flow log-determinant. Unreduced sum; equals
// gaussian_kl_sum in expectation when the flow is the identity.
torch::Tensor kl_loss_sum(const torch::Tensor& z_p, const torch::Tensor& logs_q,
                          const torch::Tensor& m_p, const torch::Tensor& logs_p,
                          const torch::Tensor& logdet_sum);

// kl_loss_sum mean-reduced over latent elements.
torch::Tensor kl_loss(const torch::Tensor& z_p, const torch::Tensor& logs_q,
                      const torch::Tensor& m_p, const torch::Tensor& logs_p,
                      const torch::Tensor& logdet_sum);

// Least-squares GAN objectives.
torch::Tensor discriminator_loss(const std::vector<torch::Tensor>& real_logits,
                                 const std::vector<torch::Tensor>& fake_logits);
torch::Tensor generator_adversarial_loss(const std::vector<torch::Tensor>& fake_logits);
torch::Tensor feature_matching_loss(
    const std::vector<std::vector<torch::Tensor>>& real_features,
    const std::vector<std::vector<torch::Tensor>>& fake_features);

}  // namespace losses
}  // namespace envtts

#endif  // ENVTTS_LOSSES_H_
