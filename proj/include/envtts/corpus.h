// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_CORPUS_H_
#define ENVTTS_CORPUS_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "envtts/dsp.h"

namespace envtts {
namespace corpus {

// Sentinel meaning "no additive noise".
constexpr double kNoNoiseSnr = std::numeric_limits<double>::infinity();

struct RirSpec {
  // "identity", "exp_decay" or "file".
  std::string type = "identity";
  double decay_s = 0.25;   // exp_decay: -60 dB decay time
  double length_s = 0.32;  // exp_decay: impulse response length
  uint64_t seed = 0;       // exp_decay: draw seed
  std::string path;        // file: 16 kHz mono wav
};

struct EnvironmentSpec {
  std::string env_id;
  RirSpec rir;
  std::string noise_source = "white";  // white | pink | hum | babble | none
  double snr_db = kNoNoiseSnr;
};

struct UtteranceRecord {
  std::string utt_id;
  std::string speaker_id;
  std::string text;
  std::vector<int> phonemes;
  std::string raw_path;
  std::map<std::string, std::string> env_paths;  // env_id -> path
};

struct Manifest {
  std::vector<UtteranceRecord> records;
  std::vector<std::string> env_ids;
  std::vector<std::string> holdout_speakers;
  std::vector<std::string> holdout_envs;

  bool is_test(const UtteranceRecord& rec) const;
  bool is_holdout_env(const std::string& env_id) const;
  std::vector<const UtteranceRecord*> split(bool test) const;
};

// Renders the impulse response described by `spec`.
torch::Tensor make_rir(const RirSpec& spec);

// Deterministic procedural noise pools ("white", "pink", "hum", "babble").
torch::Tensor make_noise(const std::string& pool_id, int64_t length, uint64_t seed);

// FFT convolution truncated to the length of `x`.
torch::Tensor fft_convolve_same(const torch::Tensor& x, const torch::Tensor& kernel);

// convolve(raw, rir), plus pool noise scaled so the reverberant-signal /
// noise power ratio matches snr_db; peak is scaled down to <= 0.99 if
// exceeded. Deterministic given `seed`.
dsp::Waveform simulate_environment(const dsp::Waveform& raw, const EnvironmentSpec& env,
                                   uint64_t seed);

// ---- procedural raw-speech generator (stands in for studio recordings) ----

struct VoiceProfile {
  double f0_hz;          // base pitch
  double formant_scale;  // vocal tract length proxy
  double brightness;     // spectral tilt adjustment
  double gain;
};

// Per-speaker voice derived deterministically from the speaker id.
VoiceProfile voice_for_speaker(const std::string& speaker_id);

// Renders normalized text as audible pseudo-speech: voiced harmonics with
// grapheme-dependent formants, fricative noise, stop bursts, silences.
dsp::Waveform synthesize_raw_utterance(const std::string& text, const VoiceProfile& voice,
                                       uint64_t seed);

// Seeded sentence generator over a fixed word bank.
std::string random_sentence(uint64_t seed, int min_words = 2, int max_words = 5);

// Writes <out_dir>/<speaker>/<utt>.wav + .txt for a synthetic multi-speaker
// raw corpus.
void generate_raw_corpus(const std::string& out_dir, int n_speakers, int utts_per_speaker,
                         uint64_t seed);

// ---- manifests ----

// Environment config file: JSON with "environments", "holdout_speakers",
// "holdout_envs".
struct EnvSetup {
  std::vector<EnvironmentSpec> environments;
  std::vector<std::string> holdout_speakers;
  std::vector<std::string> holdout_envs;
};

EnvSetup load_env_setup(const std::string& path);
void save_env_setup(const std::string& path, const EnvSetup& setup);

// Scans raw_dir/<speaker>/<utt>.wav+.txt, renders every environment version
// under <manifest dir>/env/<env_id>/, and writes the manifest. Deterministic:
// rebuilding from identical inputs yields identical bytes.
Manifest build_manifest(const std::string& raw_dir, const EnvSetup& setup,
                        const std::string& out_manifest_path);

void save_manifest(const std::string& path, const Manifest& m);
Manifest load_manifest(const std::string& path);

}  // namespace corpus
}  // namespace envtts

#endif  // ENVTTS_CORPUS_H_
