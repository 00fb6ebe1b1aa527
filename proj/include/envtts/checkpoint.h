// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_CHECKPOINT_H_
#define ENVTTS_CHECKPOINT_H_

#include <torch/torch.h>

#include <map>
#include <string>
#include <vector>

namespace envtts {
namespace ckpt {

constexpr uint32_t kVersion = 1;

struct NamedTensor {
  std::string name;
  torch::Tensor tensor;
};

// Versioned on-disk container: JSON sections (metadata, config echoes) plus
// named-tensor sections (parameter blobs, optimizer state). Sections are
// written in sorted order so identical contents produce identical bytes.
struct Container {
  std::map<std::string, std::string> json_sections;
  std::map<std::string, std::vector<NamedTensor>> tensor_sections;

  bool has(const std::string& name) const;
  const std::vector<NamedTensor>& tensors(const std::string& name) const;
  const std::string& json(const std::string& name) const;
};

// Atomic write (temp file + rename).
void write_container(const std::string& path, const Container& container);

// Throws IoError naming the offending section on truncation or version
// mismatch.
Container read_container(const std::string& path);

// Parameters and buffers of a module, in registration order.
std::vector<NamedTensor> dump_module(const torch::nn::Module& module);

// Strict load by name and shape into an existing module.
void load_module(torch::nn::Module& module, const std::vector<NamedTensor>& tensors,
                 const std::string& context);

// AdamW state for the given parameter list (order defines the naming).
std::vector<NamedTensor> dump_adamw(const torch::optim::AdamW& opt,
                                    const std::vector<torch::Tensor>& params);
void load_adamw(torch::optim::AdamW& opt, const std::vector<torch::Tensor>& params,
                const std::vector<NamedTensor>& tensors);

}  // namespace ckpt
}  // namespace envtts

#endif  // ENVTTS_CHECKPOINT_H_
