// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_PIPELINES_H_
#define ENVTTS_PIPELINES_H_

#include <optional>
#include <string>

#include "envtts/system.h"

namespace envtts {

struct SynthesisRequest {
  std::string text;
  dsp::Waveform speaker_ref;                // >= 1.0 s
  std::optional<dsp::Waveform> env_ref;     // absent -> zero environment embedding
  double noise_scale_prior = 0.667;
  double noise_scale_sdp = 0.8;
  uint64_t seed = 0;
};

// Intermediate values exposed for tests and diagnostics.
struct SynthesisTrace {
  torch::Tensor durations;  // (N) int64
  torch::Tensor z_p;        // (C, T)
  torch::Tensor z;          // (C, T)
  torch::Tensor spk;        // (D)
  torch::Tensor env;        // (D)
};

// Environment-aware TTS when env_ref is set; environment-robust TTS (zero
// embedding) otherwise. Output length is 256 * sum(durations).
dsp::Waveform synthesize(const SynthesisRequest& request, TtsSystem& system,
                         SynthesisTrace* trace = nullptr);

struct ConversionRequest {
  dsp::Waveform source;                        // >= 0.5 s
  std::optional<dsp::Waveform> target_env_ref; // absent == CLEAN sentinel
  double temperature = 0.6;
  uint64_t seed = 0;
};

// Re-renders the source under the target environment (or clean, for the
// sentinel), keeping content and speaker. Output length is 256 * T_source.
dsp::Waveform convert_environment(const ConversionRequest& request, TtsSystem& system);

// Env-to-Clean alias of convert_environment.
dsp::Waveform enhance(const dsp::Waveform& source, TtsSystem& system, uint64_t seed = 0,
                      double temperature = 0.6);

}  // namespace envtts

#endif  // ENVTTS_PIPELINES_H_
