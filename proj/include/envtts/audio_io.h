// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_AUDIO_IO_H_
#define ENVTTS_AUDIO_IO_H_

#include <string>

#include "envtts/dsp.h"

namespace envtts {

// Policy for multi-channel input files.
enum class StereoPolicy { kMixToMono, kReject };

// Reads a 16-bit PCM RIFF/WAVE file. Multi-channel audio is averaged to mono
// (or rejected, per policy); sources at other rates are resampled to 16 kHz.
dsp::Waveform load_wav(const std::string& path,
                       StereoPolicy policy = StereoPolicy::kMixToMono);

// Writes mono 16-bit PCM at 16 kHz. Samples are clipped to [-1, 1].
void save_wav(const std::string& path, const dsp::Waveform& wav);

// Windowed-sinc rational-ratio resampler. Output length is
// ceil(n_in * out_rate / in_rate) after ratio reduction.
torch::Tensor resample(const torch::Tensor& samples, int in_rate, int out_rate);

}  // namespace envtts

#endif  // ENVTTS_AUDIO_IO_H_
