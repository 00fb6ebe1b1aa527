// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_MAS_H_
#define ENVTTS_MAS_H_

#include <torch/torch.h>

namespace envtts {

// Hard monotonic surjective alignment between N phoneme distributions and T
// frames: every frame is assigned to exactly one phoneme, phoneme order is
// preserved, and every phoneme covers at least one frame.
struct Alignment {
  torch::Tensor matrix;     // (N, T) float32 in {0, 1}
  torch::Tensor durations;  // (N) int64, sums to T
  double log_likelihood;    // sum over frames of the aligned Gaussian density
};

// Per-cell frame log-likelihoods L[n, t] = log N(z_p[:, t]; mean[:, n],
// exp(logstd[:, n])), computed in float64.
torch::Tensor mas_log_likelihood(const torch::Tensor& prior_mean,
                                 const torch::Tensor& prior_logstd, const torch::Tensor& z_p);

// Dynamic program maximizing the summed log-likelihood over all monotonic
// surjective alignments. No gradients flow through the search. Throws
// InvalidInput when T < N (infeasible).
Alignment mas_align(const torch::Tensor& prior_mean, const torch::Tensor& prior_logstd,
                    const torch::Tensor& z_p);

}  // namespace envtts

#endif  // ENVTTS_MAS_H_
