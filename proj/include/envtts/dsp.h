// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_DSP_H_
#define ENVTTS_DSP_H_

#include <torch/torch.h>

#include "envtts/common.h"

namespace envtts {
namespace dsp {

constexpr int kSampleRate = 16000;
constexpr int kFftSize = 1024;
constexpr int kWinSize = 1024;
constexpr int kHopSize = 256;
constexpr int kNumBins = kFftSize / 2 + 1;  // 513
constexpr int kNumMels = 80;
constexpr double kMelFloor = 1e-5;
constexpr double kCompression = 0.3;

// Mono waveform at 16 kHz, samples in [-1, 1].
struct Waveform {
  torch::Tensor samples;  // float32, 1-D
  int sample_rate = kSampleRate;

  int64_t size() const { return samples.numel(); }
  double duration() const { return static_cast<double>(size()) / sample_rate; }
};

int64_t frame_count(int64_t num_samples);

// Magnitude STFT, shape (513, T). Hann window of 1024, hop 256, centered
// analysis so T = floor(len / 256) + 1.
torch::Tensor stft_magnitude(const Waveform& wav);
torch::Tensor stft_magnitude(const torch::Tensor& samples);

// 80-band triangular filter bank on [0, 8000] Hz (Slaney-style mel scale and
// area normalization), shape (80, 513).
torch::Tensor mel_filter_bank();

// ln(clamp(mel @ lin, 1e-5)), shape (80, T).
torch::Tensor linear_to_mel(const torch::Tensor& lin);

// Elementwise x^c / x^(1/c) on non-negative magnitudes.
torch::Tensor power_compress(const torch::Tensor& spec, double c = kCompression);
torch::Tensor power_decompress(const torch::Tensor& spec, double c = kCompression);

}  // namespace dsp
}  // namespace envtts

#endif  // ENVTTS_DSP_H_
