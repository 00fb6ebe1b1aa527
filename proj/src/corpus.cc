// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "envtts/audio_io.h"
#include "envtts/text.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace envtts {
namespace corpus {

bool Manifest::is_test(const UtteranceRecord& rec) const {
  return std::find(holdout_speakers.begin(), holdout_speakers.end(), rec.speaker_id) !=
         holdout_speakers.end();
}

bool Manifest::is_holdout_env(const std::string& env_id) const {
  return std::find(holdout_envs.begin(), holdout_envs.end(), env_id) != holdout_envs.end();
}

std::vector<const UtteranceRecord*> Manifest::split(bool test) const {
  std::vector<const UtteranceRecord*> out;
  for (const auto& rec : records)
    if (is_test(rec) == test) out.push_back(&rec);
  return out;
}

torch::Tensor make_rir(const RirSpec& spec) {
  if (spec.type == "identity") {
    auto rir = torch::zeros({1}, torch::kFloat32);
    rir[0] = 1.0f;
    return rir;
  }
  if (spec.type == "file") {
    auto wav = load_wav(spec.path);
    check_input(wav.size() > 0, "make_rir: empty impulse response " + spec.path);
    return wav.samples;
  }
  if (spec.type == "exp_decay") {
    const int64_t n = std::max<int64_t>(8, llround(spec.length_s * dsp::kSampleRate));
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto rir = torch::zeros({n}, torch::kFloat32);
    auto acc = rir.accessor<float, 1>();
    // -60 dB at decay_s: envelope exp(-6.908 t / decay_s).
    const double rate = 6.908 / std::max(1e-3, spec.decay_s) / dsp::kSampleRate;
    acc[0] = 1.0f;  // direct path
    for (int64_t i = 1; i < n; ++i)
      acc[i] = float(gauss(rng) * 0.35 * std::exp(-rate * double(i)));
    return rir;
  }
  throw InvalidInput("make_rir: unknown rir type '" + spec.type + "'");
}

namespace {

torch::Tensor white_noise(int64_t length, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto out = torch::zeros({length}, torch::kFloat32);
  auto acc = out.accessor<float, 1>();
  for (int64_t i = 0; i < length; ++i) acc[i] = float(gauss(rng));
  return out;
}

}  // namespace

torch::Tensor make_noise(const std::string& pool_id, int64_t length, uint64_t seed) {
  check_input(length > 0, "make_noise: non-positive length");
  std::mt19937_64 rng(seed ^ hash_seed(pool_id));
  if (pool_id == "none") return torch::zeros({length}, torch::kFloat32);
  if (pool_id == "white") return white_noise(length, rng);
  if (pool_id == "pink") {
    // Kellet's 3-pole pinking filter over white noise.
    auto w = white_noise(length, rng);
    auto wa = w.accessor<float, 1>();
    auto out = torch::zeros({length}, torch::kFloat32);
    auto oa = out.accessor<float, 1>();
    double b0 = 0, b1 = 0, b2 = 0;
    for (int64_t i = 0; i < length; ++i) {
      const double x = wa[i];
      b0 = 0.99765 * b0 + x * 0.0990460;
      b1 = 0.96300 * b1 + x * 0.2965164;
      b2 = 0.57000 * b2 + x * 1.0526913;
      oa[i] = float((b0 + b1 + b2 + x * 0.1848) * 0.2);
    }
    return out;
  }
  if (pool_id == "hum") {
    std::uniform_real_distribution<double> ph(0.0, 2.0 * M_PI);
    auto out = torch::zeros({length}, torch::kFloat32);
    auto oa = out.accessor<float, 1>();
    const double base = 50.0;
    double phases[3] = {ph(rng), ph(rng), ph(rng)};
    for (int64_t i = 0; i < length; ++i) {
      const double t = double(i) / dsp::kSampleRate;
      double v = 0.0;
      for (int h = 0; h < 3; ++h)
        v += std::sin(2.0 * M_PI * base * (h + 1) * t + phases[h]) / (h + 1.0);
      oa[i] = float(v * 0.5);
    }
    // A little broadband floor so the hum is not a pure line spectrum.
    return out + white_noise(length, rng) * 0.05;
  }
  if (pool_id == "babble") {
    // Sum of wandering band-limited tones, a crude crowd murmur.
    auto out = torch::zeros({length}, torch::kFloat32);
    auto oa = out.accessor<float, 1>();
    std::uniform_real_distribution<double> f0(120.0, 400.0), ph(0.0, 2.0 * M_PI),
        drift(-40.0, 40.0);
    for (int v = 0; v < 6; ++v) {
      double f = f0(rng), phase = ph(rng), df = drift(rng);
      for (int64_t i = 0; i < length; ++i) {
        const double t = double(i) / dsp::kSampleRate;
        const double ft = f + df * std::sin(2.0 * M_PI * 0.6 * t + phase);
        phase += 2.0 * M_PI * ft / dsp::kSampleRate;
        oa[i] += float(std::sin(phase) * 0.18);
      }
    }
    return out + white_noise(length, rng) * 0.08;
  }
  throw InvalidInput("make_noise: unknown noise pool '" + pool_id + "'");
}

torch::Tensor fft_convolve_same(const torch::Tensor& x, const torch::Tensor& kernel) {
  const int64_t n = x.numel(), m = kernel.numel();
  int64_t size = 1;
  while (size < n + m - 1) size <<= 1;
  auto X = torch::fft::rfft(x.to(torch::kFloat64), size);
  auto K = torch::fft::rfft(kernel.to(torch::kFloat64), size);
  auto y = torch::fft::irfft(X * K, size);
  return y.narrow(0, 0, n).to(torch::kFloat32);
}

dsp::Waveform simulate_environment(const dsp::Waveform& raw, const EnvironmentSpec& env,
                                   uint64_t seed) {
  check_input(raw.sample_rate == dsp::kSampleRate, "simulate_environment: expected 16 kHz");
  check_input(raw.size() > 0, "simulate_environment: empty waveform");

  auto rir = make_rir(env.rir);
  auto reverberant = fft_convolve_same(raw.samples, rir);

  torch::Tensor out = reverberant;
  if (std::isfinite(env.snr_db)) {
    auto noise = make_noise(env.noise_source, raw.size(), seed);
    const double p_sig = reverberant.pow(2).mean().item<double>();
    const double p_noise = noise.pow(2).mean().item<double>();
    if (p_noise <= 0.0)
      throw InvalidInput("simulate_environment: silent noise segment for env '" + env.env_id +
                         "'");
    const double target = p_sig / std::pow(10.0, env.snr_db / 10.0);
    out = reverberant + noise * std::sqrt(target / p_noise);
  }

  const double peak = out.abs().max().item<double>();
  if (peak > 0.99) out = out * (0.99 / peak);

  dsp::Waveform w;
  w.samples = out;
  w.sample_rate = dsp::kSampleRate;
  return w;
}

// ---------------------------------------------------------------------------
// Procedural voices
// ---------------------------------------------------------------------------

VoiceProfile voice_for_speaker(const std::string& speaker_id) {
  std::mt19937_64 rng(hash_seed(speaker_id, 0x5eed));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VoiceProfile v;
  v.f0_hz = 95.0 + 140.0 * u(rng);
  v.formant_scale = 0.85 + 0.35 * u(rng);
  v.brightness = 0.7 + 0.6 * u(rng);
  v.gain = 0.35 + 0.1 * u(rng);
  return v;
}

namespace {

struct Articulation {
  double f1 = 0, f2 = 0;   // formant centers (Hz)
  double voiced = 0;       // harmonic amplitude
  double noise = 0;        // fricative amplitude
  double noise_freq = 0;   // fricative resonance (Hz)
  double dur_ms = 90;
  bool burst = false;      // stop consonant: silence then click
};

Articulation articulation_for(char c) {
  switch (c) {
    case 'a': return {800, 1250, 1.0, 0.00, 0, 130};
    case 'e': return {520, 1900, 1.0, 0.00, 0, 120};
    case 'i': return {320, 2350, 1.0, 0.00, 0, 110};
    case 'o': return {500, 900, 1.0, 0.00, 0, 125};
    case 'u': return {350, 820, 1.0, 0.00, 0, 115};
    case 'y': return {360, 2100, 0.9, 0.00, 0, 100};
    case 'w': return {330, 750, 0.7, 0.00, 0, 80};
    case 'r': return {420, 1350, 0.7, 0.00, 0, 85};
    case 'l': return {380, 1500, 0.7, 0.00, 0, 80};
    case 'm': return {280, 1100, 0.65, 0.00, 0, 85};
    case 'n': return {300, 1450, 0.65, 0.00, 0, 85};
    case 's': return {0, 0, 0.0, 0.9, 6200, 105};
    case 'z': return {300, 1400, 0.35, 0.7, 6000, 100};
    case 'f': return {0, 0, 0.0, 0.7, 4300, 95};
    case 'v': return {300, 1100, 0.35, 0.5, 4200, 90};
    case 'h': return {0, 0, 0.0, 0.45, 1900, 70};
    case 'x': return {0, 0, 0.0, 0.8, 5200, 110};
    case 'j': return {300, 1700, 0.4, 0.55, 3200, 95};
    case 'c':
    case 'k':
    case 'q': return {0, 0, 0.0, 0.85, 3000, 70, true};
    case 'p':
    case 'b': return {0, 0, 0.0, 0.8, 1200, 65, true};
    case 't':
    case 'd': return {0, 0, 0.0, 0.85, 4500, 65, true};
    case 'g': return {0, 0, 0.0, 0.75, 2200, 70, true};
    case ' ': return {0, 0, 0.0, 0.0, 0, 90};
    default: return {0, 0, 0.0, 0.0, 0, 150};  // punctuation pause
  }
}

// Two-pole resonator for shaping fricative noise.
struct Resonator {
  double b1 = 0, b2 = 0, y1 = 0, y2 = 0, g = 1;
  Resonator(double freq, double bw) {
    const double r = std::exp(-M_PI * bw / dsp::kSampleRate);
    b1 = 2.0 * r * std::cos(2.0 * M_PI * freq / dsp::kSampleRate);
    b2 = -r * r;
    g = 1.0 - r;
  }
  double step(double x) {
    const double y = g * x + b1 * y1 + b2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

double formant_envelope(double freq, double f1, double f2, double brightness) {
  const double bw1 = 110.0, bw2 = 170.0;
  double amp = std::exp(-0.5 * std::pow((freq - f1) / bw1, 2)) +
               0.7 * std::exp(-0.5 * std::pow((freq - f2) / bw2, 2));
  amp += 0.08;                                        // glottal floor
  amp *= std::pow(500.0 / (500.0 + freq), 2.0 - brightness);  // tilt
  return amp;
}

}  // namespace

dsp::Waveform synthesize_raw_utterance(const std::string& raw_text, const VoiceProfile& voice,
                                       uint64_t seed) {
  const std::string norm = text::normalize(raw_text);
  check_input(!norm.empty(), "synthesize_raw_utterance: empty text");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::vector<float> out;
  out.reserve(norm.size() * 2200);
  double phase[40] = {0};
  for (auto& p : phase) p = u(rng) * 2.0 * M_PI;

  const double total_chars = double(norm.size());
  double char_index = 0;
  for (char c : norm) {
    Articulation art = articulation_for(c);
    art.f1 *= voice.formant_scale;
    art.f2 *= voice.formant_scale;
    const double jitter = 0.8 + 0.4 * u(rng);
    const int64_t n = llround(art.dur_ms * jitter * dsp::kSampleRate / 1000.0);
    const int64_t fade = std::min<int64_t>(n / 4, dsp::kSampleRate / 100);

    // Pitch declines gently over the utterance.
    const double f0 = voice.f0_hz * (1.06 - 0.12 * char_index / total_chars) *
                      (0.98 + 0.04 * u(rng));
    const int n_harm = std::min<int>(40, int(7600.0 / f0));

    double hamp[40] = {0};
    for (int h = 0; h < n_harm; ++h)
      hamp[h] = art.voiced > 0
                    ? art.voiced * formant_envelope((h + 1) * f0, art.f1, art.f2, voice.brightness)
                    : 0.0;

    Resonator res(std::max(200.0, art.noise_freq), 900.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int64_t burst_start = art.burst ? n / 2 : 0;
    const int64_t start = int64_t(out.size());
    out.resize(out.size() + size_t(n), 0.0f);
    for (int64_t i = 0; i < n; ++i) {
      double v = 0.0;
      if (art.voiced > 0) {
        for (int h = 0; h < n_harm; ++h) {
          phase[h] += 2.0 * M_PI * (h + 1) * f0 / dsp::kSampleRate;
          v += hamp[h] * std::sin(phase[h]);
        }
        v *= 0.28;
      }
      if (art.noise > 0 && i >= burst_start) {
        double nz = res.step(gauss(rng));
        if (art.burst) nz *= std::exp(-double(i - burst_start) / (0.012 * dsp::kSampleRate));
        v += art.noise * nz * 1.1;
      }
      double env = 1.0;
      if (i < fade) env = 0.5 - 0.5 * std::cos(M_PI * double(i) / fade);
      if (n - 1 - i < fade) env = std::min(env, 0.5 - 0.5 * std::cos(M_PI * double(n - 1 - i) / fade));
      out[size_t(start + i)] = float(v * env * voice.gain);
    }
    char_index += 1.0;
  }

  // Trailing pad so every utterance ends in silence.
  out.resize(out.size() + dsp::kSampleRate / 20, 0.0f);

  auto samples = torch::from_blob(out.data(), {int64_t(out.size())}, torch::kFloat32).clone();
  const double peak = samples.abs().max().item<double>();
  if (peak > 0.95) samples = samples * (0.95 / peak);

  dsp::Waveform w;
  w.samples = samples;
  w.sample_rate = dsp::kSampleRate;
  return w;
}

std::string random_sentence(uint64_t seed, int min_words, int max_words) {
  static const std::vector<std::string> bank = {
      "sun",   "river",  "stone",  "amber", "wind",   "echo",  "mellow", "tide",
      "noble", "sable",  "violet", "dawn",  "ember",  "lake",  "moss",   "iron",
      "quiet", "signal", "vapor",  "cedar", "north",  "plume", "onyx",   "fable",
      "reed",  "summit", "gleam",  "haven", "tundra", "sonar", "kindle", "orbit"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(min_words, max_words);
  std::uniform_int_distribution<size_t> pick(0, bank.size() - 1);
  const int n = count(rng);
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += bank[pick(rng)];
  }
  return s;
}

void generate_raw_corpus(const std::string& out_dir, int n_speakers, int utts_per_speaker,
                         uint64_t seed) {
  check_input(n_speakers >= 1 && utts_per_speaker >= 1, "generate_raw_corpus: bad counts");
  for (int s = 0; s < n_speakers; ++s) {
    const std::string speaker = "s" + std::to_string(s);
    const auto voice = voice_for_speaker(speaker);
    fs::create_directories(fs::path(out_dir) / speaker);
    for (int q = 0; q < utts_per_speaker; ++q) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "u%04d", q);
      const std::string utt = speaker + "_" + buf;
      const uint64_t utt_seed = hash_seed(utt, seed);
      const std::string sentence = random_sentence(utt_seed);
      const auto wav = synthesize_raw_utterance(sentence, voice, utt_seed ^ 0x9e3779b9);
      const fs::path base = fs::path(out_dir) / speaker / (utt + ".wav");
      save_wav(base.string(), wav);
      std::ofstream txt(fs::path(out_dir) / speaker / (utt + ".txt"));
      txt << sentence << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

EnvSetup load_env_setup(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_env_setup: cannot open " + path);
  json j = json::parse(in, nullptr, true, true);
  EnvSetup setup;
  for (const auto& e : j.at("environments")) {
    EnvironmentSpec env;
    env.env_id = e.at("env_id").get<std::string>();
    if (e.contains("rir")) {
      const auto& r = e["rir"];
      env.rir.type = r.value("type", "identity");
      env.rir.decay_s = r.value("decay_s", 0.25);
      env.rir.length_s = r.value("length_s", 0.32);
      env.rir.seed = r.value("seed", 0ull);
      env.rir.path = r.value("path", std::string());
    }
    env.noise_source = e.value("noise", "white");
    if (e.contains("snr_db") && !e["snr_db"].is_null())
      env.snr_db = e["snr_db"].get<double>();
    setup.environments.push_back(std::move(env));
  }
  setup.holdout_speakers = j.value("holdout_speakers", std::vector<std::string>{});
  setup.holdout_envs = j.value("holdout_envs", std::vector<std::string>{});
  return setup;
}

void save_env_setup(const std::string& path, const EnvSetup& setup) {
  json envs = json::array();
  for (const auto& e : setup.environments) {
    json r = {{"type", e.rir.type}};
    if (e.rir.type == "exp_decay") {
      r["decay_s"] = e.rir.decay_s;
      r["length_s"] = e.rir.length_s;
      r["seed"] = e.rir.seed;
    } else if (e.rir.type == "file") {
      r["path"] = e.rir.path;
    }
    json j = {{"env_id", e.env_id}, {"rir", r}, {"noise", e.noise_source}};
    if (std::isfinite(e.snr_db)) j["snr_db"] = e.snr_db;
    envs.push_back(j);
  }
  json top = {{"environments", envs},
              {"holdout_speakers", setup.holdout_speakers},
              {"holdout_envs", setup.holdout_envs}};
  std::ofstream out(path);
  if (!out) throw IoError("save_env_setup: cannot open " + path);
  out << top.dump(2) << "\n";
}

namespace {

std::string join_ids(const std::vector<int>& ids) {
  std::string s;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(ids[i]);
  }
  return s;
}

std::vector<int> parse_ids(const std::string& s) {
  std::vector<int> ids;
  std::stringstream ss(s);
  int v;
  while (ss >> v) ids.push_back(v);
  return ids;
}

}  // namespace

void save_manifest(const std::string& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_manifest: cannot open " + path);
  json header = {{"version", 1},
                 {"envs", m.env_ids},
                 {"holdout_speakers", m.holdout_speakers},
                 {"holdout_envs", m.holdout_envs}};
  out << "#envtts-manifest " << header.dump() << "\n";
  // Fields: utt_id|speaker_id|env-keyed paths|text|phoneme ids
  for (const auto& rec : m.records) {
    out << rec.utt_id << "|" << rec.speaker_id << "|raw=" << rec.raw_path;
    for (const auto& [env, p] : rec.env_paths) out << ";" << env << "=" << p;
    out << "|" << rec.text << "|" << join_ids(rec.phonemes) << "\n";
  }
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_manifest: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#envtts-manifest ", 0) != 0)
    throw IoError("load_manifest: missing header in " + path);
  json header = json::parse(line.substr(std::string("#envtts-manifest ").size()));
  Manifest m;
  m.env_ids = header.value("envs", std::vector<std::string>{});
  m.holdout_speakers = header.value("holdout_speakers", std::vector<std::string>{});
  m.holdout_envs = header.value("holdout_envs", std::vector<std::string>{});
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '|')) fields.push_back(f);
    if (fields.size() != 5) throw IoError("load_manifest: malformed record: " + line);
    UtteranceRecord rec;
    rec.utt_id = fields[0];
    rec.speaker_id = fields[1];
    std::stringstream ps(fields[2]);
    std::string kv;
    while (std::getline(ps, kv, ';')) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw IoError("load_manifest: malformed path field: " + kv);
      const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      if (key == "raw")
        rec.raw_path = val;
      else
        rec.env_paths[key] = val;
    }
    rec.text = fields[3];
    rec.phonemes = parse_ids(fields[4]);
    m.records.push_back(std::move(rec));
  }
  return m;
}

Manifest build_manifest(const std::string& raw_dir, const EnvSetup& setup,
                        const std::string& out_manifest_path) {
  check_input(!setup.environments.empty(), "build_manifest: no environments configured");
  const fs::path root = fs::path(out_manifest_path).parent_path();
  fs::create_directories(root.empty() ? "." : root);

  // Deterministic scan order.
  std::vector<std::string> speakers;
  for (const auto& entry : fs::directory_iterator(raw_dir))
    if (entry.is_directory()) speakers.push_back(entry.path().filename().string());
  std::sort(speakers.begin(), speakers.end());
  check_input(!speakers.empty(), "build_manifest: no speaker folders in " + raw_dir);

  Manifest m;
  for (const auto& e : setup.environments) m.env_ids.push_back(e.env_id);
  m.holdout_speakers = setup.holdout_speakers;
  m.holdout_envs = setup.holdout_envs;

  std::vector<std::string> missing;
  for (const auto& speaker : speakers) {
    std::vector<std::string> wavs;
    for (const auto& entry : fs::directory_iterator(fs::path(raw_dir) / speaker))
      if (entry.path().extension() == ".wav") wavs.push_back(entry.path().stem().string());
    std::sort(wavs.begin(), wavs.end());
    for (const auto& utt : wavs) {
      const fs::path wav_path = fs::path(raw_dir) / speaker / (utt + ".wav");
      const fs::path txt_path = fs::path(raw_dir) / speaker / (utt + ".txt");
      if (!fs::exists(txt_path)) {
        missing.push_back(utt);
        continue;
      }
      std::ifstream txt(txt_path);
      std::string sentence;
      std::getline(txt, sentence);

      UtteranceRecord rec;
      rec.utt_id = utt;
      rec.speaker_id = speaker;
      rec.text = text::normalize(sentence);
      rec.phonemes = text::text_to_phonemes(sentence);
      rec.raw_path = wav_path.string();

      const auto raw = load_wav(wav_path.string());
      for (const auto& env : setup.environments) {
        const fs::path env_dir = root / "env" / env.env_id / speaker;
        fs::create_directories(env_dir);
        const fs::path env_path = env_dir / (utt + ".wav");
        const auto sim = simulate_environment(raw, env, hash_seed(utt, hash_seed(env.env_id)));
        check_input(sim.size() == raw.size(), "build_manifest: env/raw length mismatch");
        save_wav(env_path.string(), sim);
        rec.env_paths[env.env_id] = env_path.string();
      }
      m.records.push_back(std::move(rec));
    }
  }
  if (!missing.empty()) {
    std::string msg = "build_manifest: missing transcripts for:";
    for (const auto& u : missing) msg += " " + u;
    throw InvalidInput(msg);
  }
  save_manifest(out_manifest_path, m);
  return m;
}

}  // namespace corpus
}  // namespace envtts
