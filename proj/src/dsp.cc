// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/dsp.h"

#include <cmath>
#include <vector>

namespace envtts {
namespace dsp {

int64_t frame_count(int64_t num_samples) { return num_samples / kHopSize + 1; }

namespace {

// Slaney mel scale: linear below 1 kHz, logarithmic above.
double hz_to_mel(double hz) {
  const double f_sp = 200.0 / 3.0;
  const double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz >= min_log_hz) return min_log_mel + std::log(hz / min_log_hz) / logstep;
  return hz / f_sp;
}

double mel_to_hz(double mel) {
  const double f_sp = 200.0 / 3.0;
  const double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel >= min_log_mel) return min_log_hz * std::exp(logstep * (mel - min_log_mel));
  return mel * f_sp;
}

}  // namespace

torch::Tensor stft_magnitude(const torch::Tensor& samples) {
  check_input(samples.numel() > 0, "stft_magnitude: empty waveform");
  check_finite(samples, "stft_magnitude");
  check_input(samples.dim() <= 2, "stft_magnitude: expected 1-D samples or a (B, L) batch");
  const bool batched = samples.dim() == 2;
  auto x = samples.to(torch::kFloat32);
  if (!batched) x = x.unsqueeze(0);  // (B, L)

  // Center padding by n_fft/2 on both sides. Reflect padding needs
  // len > n_fft/2; fall back to zeros for very short inputs.
  const int64_t pad = kFftSize / 2;
  auto x3 = x.unsqueeze(1);  // (B, 1, L)
  torch::Tensor padded;
  if (x.size(1) > pad) {
    padded = torch::reflection_pad1d(x3, {pad, pad}).squeeze(1);
  } else {
    padded = torch::constant_pad_nd(x3, {pad, pad}, 0.0).squeeze(1);
  }

  auto window = torch::hann_window(kWinSize, x.options());
  auto spec = torch::stft(padded, kFftSize, kHopSize, kWinSize, window,
                          /*center=*/false, /*mode=*/"reflect",
                          /*normalized=*/false, /*onesided=*/true,
                          /*return_complex=*/true);
  auto mag = torch::abs(spec);
  return batched ? mag : mag.squeeze(0);
}

torch::Tensor stft_magnitude(const Waveform& wav) {
  check_input(wav.sample_rate == kSampleRate, "stft_magnitude: expected 16 kHz input");
  return stft_magnitude(wav.samples);
}

torch::Tensor mel_filter_bank() {
  const double fmin = 0.0, fmax = kSampleRate / 2.0;
  const int n_mels = kNumMels;
  std::vector<double> mel_pts(n_mels + 2);
  const double mel_lo = hz_to_mel(fmin), mel_hi = hz_to_mel(fmax);
  for (int i = 0; i < n_mels + 2; ++i)
    mel_pts[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));

  auto bank = torch::zeros({n_mels, kNumBins}, torch::kFloat32);
  auto acc = bank.accessor<float, 2>();
  for (int m = 0; m < n_mels; ++m) {
    const double lo = mel_pts[m], mid = mel_pts[m + 1], hi = mel_pts[m + 2];
    const double norm = 2.0 / (hi - lo);  // Slaney area normalization
    for (int k = 0; k < kNumBins; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / kFftSize;
      double w = 0.0;
      if (f > lo && f < hi) w = (f <= mid) ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      acc[m][k] = static_cast<float>(w * norm);
    }
  }
  return bank;
}

torch::Tensor linear_to_mel(const torch::Tensor& lin) {
  check_input((lin.dim() == 2 || lin.dim() == 3) && lin.size(lin.dim() - 2) == kNumBins,
              "linear_to_mel: expected (513, T) magnitudes or a (B, 513, T) batch");
  static const torch::Tensor bank = mel_filter_bank();
  auto mel = torch::matmul(bank.to(lin.dtype()), lin);
  return torch::log(torch::clamp_min(mel, kMelFloor));
}

torch::Tensor power_compress(const torch::Tensor& spec, double c) {
  check_input(c > 0.0 && c <= 1.0, "power_compress: compression factor must be in (0, 1]");
  check_finite(spec, "power_compress");
  check_input((spec >= 0).all().item<bool>(), "power_compress: negative magnitude");
  return spec.pow(c);
}

torch::Tensor power_decompress(const torch::Tensor& spec, double c) {
  check_input(c > 0.0 && c <= 1.0, "power_decompress: compression factor must be in (0, 1]");
  check_finite(spec, "power_decompress");
  check_input((spec >= 0).all().item<bool>(), "power_decompress: negative magnitude");
  return spec.pow(1.0 / c);
}

}  // namespace dsp
}  // namespace envtts
