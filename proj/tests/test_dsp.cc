// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "testing.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "envtts/audio_io.h"
#include "envtts/dsp.h"
#include "envtts/npy.h"

using namespace envtts;

TEST_CASE("stft of zero signal is zero with the documented frame count") {
  dsp::Waveform wav;
  wav.samples = torch::zeros({4096});
  auto spec = dsp::stft_magnitude(wav);
  CHECK(spec.size(0) == 513);
  CHECK(spec.size(1) == 17);  // 4096/256 + 1
  CHECK(spec.abs().max().item<double>() == doctest::Approx(0.0));
}

TEST_CASE("stft frame count formula") {
  dsp::Waveform wav;
  wav.samples = torch::randn({16000}) * 0.1;
  auto spec = dsp::stft_magnitude(wav);
  CHECK(spec.size(1) == 63);
  CHECK(spec.size(1) == dsp::frame_count(16000));
  CHECK((spec >= 0).all().item<bool>());
}

TEST_CASE("stft sine locates the expected bin") {
  // 250 Hz = bin 16 at 16 kHz / 1024-point FFT.
  auto t = torch::arange(int64_t(8192), torch::kFloat32) / 16000.0;
  dsp::Waveform wav;
  wav.samples = torch::sin(2.0 * M_PI * 250.0 * t);
  auto spec = dsp::stft_magnitude(wav);
  auto argmax = spec.argmax(0);
  // Edge frames see mostly padding; interior frames must all peak at bin 16.
  for (int64_t f = 2; f < spec.size(1) - 2; ++f) CHECK(argmax[f].item<int64_t>() == 16);
}

TEST_CASE("stft rejects empty input") {
  dsp::Waveform wav;
  wav.samples = torch::zeros({0});
  CHECK_THROWS_AS(dsp::stft_magnitude(wav), InvalidInput);
}

TEST_CASE("mel projection: floor, all-ones oracle, shape") {
  auto zeros = torch::zeros({513, 10});
  auto mel = dsp::linear_to_mel(zeros);
  CHECK(mel.size(0) == 80);
  CHECK(mel.size(1) == 10);
  CHECK(mel.min().item<double>() == doctest::Approx(std::log(1e-5)));
  CHECK(mel.max().item<double>() == doctest::Approx(std::log(1e-5)));

  // Independent oracle: with all-ones input, row r must equal
  // ln(max(sum of filter r weights, floor)).
  auto ones = torch::ones({513, 42});
  auto mel1 = dsp::linear_to_mel(ones);
  CHECK(mel1.size(1) == 42);
  auto bank = dsp::mel_filter_bank();
  for (int r = 0; r < 80; ++r) {
    double wsum = 0.0;
    for (int k = 0; k < 513; ++k) wsum += bank[r][k].item<double>();
    const double expected = std::log(std::max(wsum, 1e-5));
    CHECK(mel1[r][0].item<double>() == doctest::Approx(expected).epsilon(1e-5));
    CHECK(std::isfinite(mel1[r][0].item<double>()));
  }

  CHECK_THROWS_AS(dsp::linear_to_mel(torch::ones({100, 4})), InvalidInput);
}

TEST_CASE("power compression oracle values and round trip") {
  auto one = torch::ones({1, 1});
  CHECK(dsp::power_compress(one, 0.3).item<double>() == doctest::Approx(1.0));
  CHECK(dsp::power_compress(torch::zeros({1, 1}), 0.3).item<double>() == doctest::Approx(0.0));
  // Direct evaluation oracle: 8^0.3.
  auto eight = torch::full({1, 1}, 8.0);
  CHECK(dsp::power_compress(eight, 0.3).item<double>() ==
        doctest::Approx(std::pow(8.0, 0.3)).epsilon(1e-6));
  CHECK(dsp::power_decompress(torch::full({1, 1}, std::pow(8.0, 0.3)), 0.3).item<double>() ==
        doctest::Approx(8.0).epsilon(1e-4));

  auto spec = torch::rand({513, 10}) * 4.0;
  auto rt = dsp::power_decompress(dsp::power_compress(spec, 0.3), 0.3);
  CHECK(rt.sizes() == spec.sizes());
  CHECK(((rt - spec).abs() / (spec + 1e-9)).max().item<double>() < 1e-4);
  auto rt2 = dsp::power_compress(dsp::power_decompress(spec, 0.3), 0.3);
  CHECK(((rt2 - spec).abs() / (spec + 1e-9)).max().item<double>() < 1e-4);

  CHECK_THROWS_AS(dsp::power_compress(torch::full({2, 2}, -0.5), 0.3), InvalidInput);
  CHECK_THROWS_AS(dsp::power_decompress(torch::full({2, 2}, -0.5), 0.3), InvalidInput);
}

TEST_CASE("power compression is strictly monotone") {
  auto x = torch::linspace(0.0, 5.0, 64);
  auto y = dsp::power_compress(x, 0.3);
  auto dy = y.slice(0, 1) - y.slice(0, 0, 63);
  CHECK((dy > 0).all().item<bool>());
}

TEST_CASE("wav round trip within 16-bit quantization") {
  auto tmp = std::filesystem::temp_directory_path() / "envtts_ramp.wav";
  dsp::Waveform wav;
  wav.samples = torch::linspace(-0.9, 0.9, 4000);
  save_wav(tmp.string(), wav);
  auto back = load_wav(tmp.string());
  CHECK(back.sample_rate == 16000);
  CHECK(back.size() == 4000);
  CHECK((back.samples - wav.samples).abs().max().item<double>() <= std::pow(2.0, -15.0));
  std::filesystem::remove(tmp);
}

TEST_CASE("wav loader rejects garbage and missing files") {
  auto tmp = std::filesystem::temp_directory_path() / "envtts_bad.wav";
  {
    std::FILE* f = std::fopen(tmp.string().c_str(), "wb");
    std::fputs("not a riff file at all", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_wav(tmp.string()), IoError);
  CHECK_THROWS_AS(load_wav("/nonexistent/definitely_missing.wav"), IoError);
  std::filesystem::remove(tmp);
}

TEST_CASE("resampler length law and tone preservation") {
  // 48 kHz -> 16 kHz: ceil(n * 1/3).
  auto t = torch::arange(int64_t(48000), torch::kFloat32) / 48000.0;
  auto tone = torch::sin(2.0 * M_PI * 440.0 * t) * 0.5;
  auto out = resample(tone, 48000, 16000);
  CHECK(out.numel() == 16000);

  // The 440 Hz tone must survive: correlate with the expected tone.
  auto t16 = torch::arange(int64_t(16000), torch::kFloat32) / 16000.0;
  auto ref = torch::sin(2.0 * M_PI * 440.0 * t16) * 0.5;
  auto mid = torch::indexing::Slice(2000, 14000);
  auto a = out.index({mid}), b = ref.index({mid});
  double corr = (a * b).sum().item<double>() /
                std::sqrt((a * a).sum().item<double>() * (b * b).sum().item<double>());
  CHECK(corr > 0.99);
}

TEST_CASE("npy round trip") {
  auto tmp = std::filesystem::temp_directory_path() / "envtts_arr.npy";
  auto arr = torch::randn({7, 13});
  save_npy(tmp.string(), arr);
  auto back = load_npy(tmp.string());
  CHECK(back.sizes() == arr.sizes());
  CHECK((back - arr).abs().max().item<double>() == doctest::Approx(0.0));
  std::filesystem::remove(tmp);
}
