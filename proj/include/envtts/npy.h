// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_NPY_H_
#define ENVTTS_NPY_H_

#include <torch/torch.h>

#include <string>

namespace envtts {

// Minimal NPY v1.0 float32 writer/reader for spectrogram debugging dumps.
// Layout: the standard NPY header (shape, row-major) followed by raw
// little-endian float32 data.
void save_npy(const std::string& path, const torch::Tensor& array);
torch::Tensor load_npy(const std::string& path);

}  // namespace envtts

#endif  // ENVTTS_NPY_H_
