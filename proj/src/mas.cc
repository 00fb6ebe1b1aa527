// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/mas.h"

#include <cmath>
#include <limits>

#include "envtts/common.h"

namespace envtts {

torch::Tensor mas_log_likelihood(const torch::Tensor& prior_mean,
                                 const torch::Tensor& prior_logstd, const torch::Tensor& z_p) {
  torch::NoGradGuard no_grad;
  auto mu = prior_mean.detach().to(torch::kFloat64);      // (C, N)
  auto ls = prior_logstd.detach().to(torch::kFloat64);    // (C, N)
  auto z = z_p.detach().to(torch::kFloat64);               // (C, T)
  check_input(mu.dim() == 2 && ls.sizes() == mu.sizes() && z.dim() == 2 &&
                  z.size(0) == mu.size(0),
              "mas: shape mismatch between prior and latents");
  const auto C = mu.size(0);

  // log N(z; mu, s) summed over channels, arranged as (N, T).
  auto inv_var = torch::exp(-2.0 * ls);                          // (C, N)
  auto constant = -0.5 * double(C) * std::log(2.0 * M_PI) - ls.sum(0);  // (N)
  auto z_sq = torch::matmul(inv_var.transpose(0, 1), z.pow(2));  // (N, T)
  auto cross = torch::matmul((mu * inv_var).transpose(0, 1), z); // (N, T)
  auto mu_sq = (mu.pow(2) * inv_var).sum(0);                     // (N)
  return constant.unsqueeze(1) - 0.5 * (z_sq - 2.0 * cross + mu_sq.unsqueeze(1));
}

Alignment mas_align(const torch::Tensor& prior_mean, const torch::Tensor& prior_logstd,
                    const torch::Tensor& z_p) {
  torch::NoGradGuard no_grad;
  auto L = mas_log_likelihood(prior_mean, prior_logstd, z_p);
  const int64_t N = L.size(0), T = L.size(1);
  check_input(N >= 1, "mas: need at least one phoneme");
  check_input(T >= N, "mas: infeasible alignment, fewer frames than phonemes (T=" +
                          std::to_string(T) + ", N=" + std::to_string(N) + ")");

  const double neg_inf = -std::numeric_limits<double>::infinity();
  auto Q = torch::full({N, T}, neg_inf, torch::kFloat64);
  auto La = L.accessor<double, 2>();
  auto Qa = Q.accessor<double, 2>();

  Qa[0][0] = La[0][0];
  for (int64_t t = 1; t < T; ++t) {
    for (int64_t n = std::max<int64_t>(0, N - (T - t)); n <= std::min<int64_t>(t, N - 1); ++n) {
      const double stay = Qa[n][t - 1];
      const double advance = n > 0 ? Qa[n - 1][t - 1] : neg_inf;
      const double best = std::max(stay, advance);
      if (best == neg_inf && !(n == 0 && t == 0)) continue;
      Qa[n][t] = La[n][t] + best;
    }
  }
  // N == 1, T == 1 corner: loop above never runs.

  auto matrix = torch::zeros({N, T}, torch::kFloat32);
  auto durations = torch::zeros({N}, torch::kInt64);
  auto ma = matrix.accessor<float, 2>();
  auto da = durations.accessor<int64_t, 1>();
  int64_t n = N - 1;
  for (int64_t t = T - 1; t >= 0; --t) {
    ma[n][t] = 1.0f;
    da[n] += 1;
    if (t > 0 && n > 0 && Qa[n - 1][t - 1] >= Qa[n][t - 1]) n -= 1;
  }

  Alignment out;
  out.matrix = matrix;
  out.durations = durations;
  out.log_likelihood = Qa[N - 1][T - 1];
  return out;
}

}  // namespace envtts
