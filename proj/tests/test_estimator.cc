// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "testing.h"

#include "envtts/dsp.h"
#include "envtts/estimator.h"

using namespace envtts;

namespace {

EstimatorConfig tiny_config() {
  EstimatorConfig c;
  c.n_layers = 2;
  c.model_dim = 64;
  c.n_heads = 4;
  c.ff_dim = 128;
  return c;
}

}  // namespace

TEST_CASE("forced all-ones mask reproduces the input; zeros annihilate") {
  auto env = torch::rand({513, 20}) * 3.0 + 0.01;
  auto [mask1, enh1] = apply_environment_mask(env, torch::ones_like(env));
  CHECK(((enh1 - env).abs() / (env + 1e-9)).max().item<double>() < 1e-5);
  auto [mask0, enh0] = apply_environment_mask(env, torch::zeros_like(env));
  CHECK(enh0.abs().max().item<double>() == doctest::Approx(0.0));
}

TEST_CASE("scalar gain oracle: constant mask g^-0.3 recovers the raw signal") {
  // For env = g * raw, the compressed-domain oracle mask is the constant
  // g^-0.3: (g*raw)^0.3 * g^-0.3 = raw^0.3.
  const double g = 4.7;
  auto raw = torch::rand({513, 16}) * 2.0 + 0.05;
  auto env = raw * g;
  auto oracle_mask = torch::full_like(env, std::pow(g, -0.3));
  auto [mask, enhanced] = apply_environment_mask(env, oracle_mask);
  CHECK(((enhanced - raw).abs() / (raw + 1e-9)).max().item<double>() < 1e-5);
}

TEST_CASE("estimator outputs preserve shapes and non-negativity") {
  auto est = init_estimator(tiny_config(), 7);
  est->eval();
  torch::NoGradGuard ng;
  for (int64_t t : {1L, 5L, 33L}) {
    auto env = torch::rand({513, t}) * 2.0;
    auto [mask, enhanced] = est->estimate(env);
    CHECK(mask.sizes() == env.sizes());
    CHECK(enhanced.sizes() == env.sizes());
    CHECK((mask >= 0).all().item<bool>());
    CHECK((enhanced >= 0).all().item<bool>());
  }
}

TEST_CASE("fresh estimator starts near the identity mask") {
  auto est = init_estimator(tiny_config(), 7);
  est->eval();
  torch::NoGradGuard ng;
  auto env = torch::rand({513, 40}) * 2.0 + 0.01;
  auto [mask, enhanced] = est->estimate(env);
  auto in_range = ((mask >= 0.5) & (mask <= 2.0)).to(torch::kFloat32).mean().item<double>();
  CHECK(in_range >= 0.99);
}

TEST_CASE("estimator init is deterministic in the seed") {
  auto a = init_estimator(tiny_config(), 3);
  auto b = init_estimator(tiny_config(), 3);
  auto pa = a->parameters(), pb = b->parameters();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) CHECK(torch::equal(pa[i], pb[i]));

  auto c = init_estimator(tiny_config(), 4);
  bool all_same = true;
  auto pc = c->parameters();
  for (size_t i = 0; i < pa.size(); ++i) all_same = all_same && torch::equal(pa[i], pc[i]);
  CHECK(!all_same);
}

TEST_CASE("estimate is deterministic in eval mode") {
  auto est = init_estimator(tiny_config(), 11);
  est->eval();
  torch::NoGradGuard ng;
  auto env = torch::rand({513, 24});
  auto [m1, e1] = est->estimate(env);
  auto [m2, e2] = est->estimate(env);
  CHECK(torch::equal(m1, m2));
  CHECK(torch::equal(e1, e2));
}

TEST_CASE("invalid configs are rejected") {
  EstimatorConfig c = tiny_config();
  c.n_heads = 5;  // does not divide 64
  CHECK_THROWS_AS(EnvironmentEstimator{c}, ConfigError);
  CHECK_THROWS_AS(init_estimator(c, 1), ConfigError);
}

TEST_CASE("non-finite input is rejected") {
  auto est = init_estimator(tiny_config(), 7);
  est->eval();
  auto env = torch::rand({513, 10});
  env[0][0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(est->estimate(env), InvalidInput);
}

TEST_CASE("finite differences match the analytic estimator gradient") {
  // sum(enhanced) w.r.t. a slice of the input convolution weights, in
  // float64 on a 16-frame input.
  auto est = init_estimator(tiny_config(), 13);
  est->to(torch::kFloat64);
  est->eval();
  auto env = (torch::rand({513, 16}, torch::kFloat64) + 0.05) * 1.5;

  auto params = est->named_parameters();
  auto weight = params["in_conv.weight"];

  est->zero_grad();
  auto [mask, enhanced] = est->estimate(env);
  enhanced.sum().backward();
  auto analytic = weight.grad().clone();

  const double eps = 1e-5;
  torch::NoGradGuard ng;
  int checked = 0;
  double worst = 0.0;
  for (int i = 0; i < 6; ++i) {
    const int64_t a = (i * 37) % weight.size(0);
    const int64_t b = (i * 101) % weight.size(1);
    const int64_t c = i % weight.size(2);
    const double orig = weight[a][b][c].item<double>();
    weight[a][b][c] = orig + eps;
    const double plus = est->estimate(env).second.sum().item<double>();
    weight[a][b][c] = orig - eps;
    const double minus = est->estimate(env).second.sum().item<double>();
    weight[a][b][c] = orig;
    const double fd = (plus - minus) / (2 * eps);
    const double an = analytic[a][b][c].item<double>();
    if (std::abs(an) < 1e-7 && std::abs(fd) < 1e-7) continue;
    worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-9));
    ++checked;
  }
  CHECK(checked >= 3);
  CHECK(worst < 1e-3);
}
