// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_COMMON_H_
#define ENVTTS_COMMON_H_

#include <torch/torch.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace envtts {

// Invalid-input errors raised by the public operations. Callers that feed
// user data should catch this; everything else is a programming error.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& msg) : std::invalid_argument(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void check_input(bool ok, const std::string& msg) {
  if (!ok) throw InvalidInput(msg);
}

inline void check_finite(const torch::Tensor& t, const std::string& what) {
  if (!torch::isfinite(t).all().item<bool>())
    throw InvalidInput(what + ": non-finite values");
}

// CPU generator seeded independently of the global RNG. Every stochastic
// operation in the repo takes an explicit seed and builds one of these, so
// results never depend on call history.
inline at::Generator make_generator(uint64_t seed) {
  auto gen = at::detail::createCPUGenerator(seed);
  return gen;
}

// FNV-1a, used to derive per-item seeds from string keys.
inline uint64_t hash_seed(const std::string& key, uint64_t salt = 0) {
  uint64_t h = 14695981039346656037ull ^ salt;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace envtts

#endif  // ENVTTS_COMMON_H_
