// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/audio_io.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <vector>

namespace envtts {

namespace {

struct RiffChunk {
  char id[4];
  uint32_t size;
};

uint32_t read_u32(std::istream& in) {
  uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (uint32_t(b[3]) << 24);
}

uint16_t read_u16(std::istream& in) {
  uint8_t b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return b[0] | (b[1] << 8);
}

void write_u32(std::ostream& out, uint32_t v) {
  uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
  out.write(reinterpret_cast<char*>(b), 4);
}

void write_u16(std::ostream& out, uint16_t v) {
  uint8_t b[2] = {uint8_t(v), uint8_t(v >> 8)};
  out.write(reinterpret_cast<char*>(b), 2);
}

}  // namespace

torch::Tensor resample(const torch::Tensor& samples, int in_rate, int out_rate) {
  check_input(in_rate > 0 && out_rate > 0, "resample: rates must be positive");
  if (in_rate == out_rate) return samples.clone();
  const int g = std::gcd(in_rate, out_rate);
  const int64_t up = out_rate / g, down = in_rate / g;
  const int64_t n_in = samples.numel();
  const int64_t n_out = (n_in * up + down - 1) / down;

  // Polyphase windowed sinc, cutoff at the lower Nyquist.
  const double cutoff = 0.5 * std::min<double>(1.0, double(up) / down);
  const int half_width = 32;
  const int64_t taps = 2 * half_width * std::max<int64_t>(1, down / up) + 1;

  auto x = samples.to(torch::kFloat64);
  auto xa = x.accessor<double, 1>();
  auto out = torch::zeros({n_out}, torch::kFloat64);
  auto oa = out.accessor<double, 1>();
  for (int64_t m = 0; m < n_out; ++m) {
    // Output sample m sits at input position m * down / up.
    const double pos = double(m) * down / up;
    const int64_t center = llround(std::floor(pos));
    double acc = 0.0, wsum = 0.0;
    for (int64_t k = center - taps / 2; k <= center + taps / 2; ++k) {
      const double t = (double(k) - pos) * 2.0 * cutoff;
      double sinc = (std::abs(t) < 1e-12) ? 1.0 : std::sin(M_PI * t) / (M_PI * t);
      const double u = (double(k) - pos) / (taps / 2 + 1.0);
      if (std::abs(u) >= 1.0) continue;
      const double win = 0.5 * (1.0 + std::cos(M_PI * u));  // Hann
      const double w = sinc * win;
      wsum += w;
      if (k >= 0 && k < n_in) acc += xa[k] * w;
    }
    oa[m] = wsum > 0 ? acc * (2.0 * cutoff) / (wsum * 2.0 * cutoff) : 0.0;
  }
  return out.to(torch::kFloat32);
}

dsp::Waveform load_wav(const std::string& path, StereoPolicy policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_wav: cannot open " + path);

  char riff[4], wave[4];
  in.read(riff, 4);
  read_u32(in);
  in.read(wave, 4);
  if (!in || std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(wave, "WAVE", 4) != 0)
    throw IoError("load_wav: not a RIFF/WAVE file: " + path);

  uint16_t channels = 0, bits = 0, format = 0;
  uint32_t rate = 0;
  std::vector<int16_t> pcm;
  bool got_fmt = false, got_data = false;
  while (in && !(got_fmt && got_data)) {
    char id[4];
    in.read(id, 4);
    if (!in) break;
    uint32_t size = read_u32(in);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      if (size > 16) in.seekg(size - 16, std::ios::cur);
      got_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!got_fmt) throw IoError("load_wav: data chunk before fmt in " + path);
      pcm.resize(size / 2);
      in.read(reinterpret_cast<char*>(pcm.data()), size_t(size / 2) * 2);
      if (!in) throw IoError("load_wav: truncated data chunk in " + path);
      got_data = true;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (!got_fmt || !got_data) throw IoError("load_wav: missing fmt/data chunk in " + path);
  if (format != 1 || bits != 16)
    throw IoError("load_wav: only 16-bit PCM supported: " + path);
  if (channels == 0 || rate == 0) throw IoError("load_wav: garbled fmt chunk in " + path);
  if (channels > 1 && policy == StereoPolicy::kReject)
    throw IoError("load_wav: multi-channel input rejected: " + path);

  const int64_t n = int64_t(pcm.size()) / channels;
  auto samples = torch::zeros({n}, torch::kFloat32);
  auto acc = samples.accessor<float, 1>();
  for (int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int c = 0; c < channels; ++c) s += pcm[i * channels + c];
    acc[i] = float(s / channels / 32768.0);
  }

  dsp::Waveform wav;
  wav.sample_rate = dsp::kSampleRate;
  wav.samples = (int(rate) == dsp::kSampleRate)
                    ? samples
                    : resample(samples, int(rate), dsp::kSampleRate);
  return wav;
}

void save_wav(const std::string& path, const dsp::Waveform& wav) {
  check_input(wav.sample_rate == dsp::kSampleRate, "save_wav: expected 16 kHz waveform");
  check_finite(wav.samples, "save_wav");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_wav: cannot open " + path + " for writing");

  auto clipped = torch::clamp(wav.samples.to(torch::kFloat32), -1.0, 1.0);
  auto ints = torch::clamp((clipped * 32768.0).round(), -32768.0, 32767.0)
                  .to(torch::kInt16)
                  .contiguous();
  const uint32_t data_bytes = uint32_t(ints.numel()) * 2;

  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, dsp::kSampleRate);
  write_u32(out, dsp::kSampleRate * 2);
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);
  out.write(reinterpret_cast<const char*>(ints.data_ptr<int16_t>()), data_bytes);
  if (!out) throw IoError("save_wav: write failed for " + path);
}

}  // namespace envtts
