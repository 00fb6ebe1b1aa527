// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "testing.h"

#include <filesystem>
#include <fstream>

#include "envtts/audio_io.h"
#include "envtts/checkpoint.h"
#include "envtts/embedders.h"

using namespace envtts;
namespace fs = std::filesystem;

namespace {

EcapaConfig tiny_env_encoder() {
  EcapaConfig c;
  c.in_dim = 513;
  c.channels = 64;
  c.emb_dim = 48;
  c.attn_dim = 32;
  return c;
}

}  // namespace

TEST_CASE("zero environment embedding is exactly zero") {
  auto z = zero_environment_embedding(192);
  CHECK(z.vector.numel() == 192);
  CHECK(z.vector.abs().max().item<double>() == 0.0);
  CHECK(z.vector.norm().item<double>() == 0.0);
  CHECK(z.is_zero());
  CHECK_THROWS_AS(zero_environment_embedding(0), InvalidInput);
}

TEST_CASE("environment embedding is unit norm for any length") {
  auto enc = init_ecapa(tiny_env_encoder(), 5);
  enc->eval();
  torch::NoGradGuard ng;
  for (int64_t t : {8L, 21L, 64L}) {
    auto mask = torch::rand({513, t});
    auto emb = environment_encode(mask, enc);
    CHECK(emb.vector.numel() == 48);
    CHECK(emb.vector.norm().item<double>() == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(environment_encode(torch::rand({513, 7}), enc), InvalidInput);
}

TEST_CASE("frame duplication barely moves the embedding") {
  // Statistics pooling sees near-identical frame statistics for [M | M].
  auto enc = init_ecapa(tiny_env_encoder(), 6);
  enc->eval();
  torch::NoGradGuard ng;
  auto mask = torch::rand({513, 32}) + 0.2;
  auto doubled = torch::cat({mask, mask}, 1);
  auto a = environment_encode(mask, enc).vector;
  auto b = environment_encode(doubled, enc).vector;
  CHECK((a * b).sum().item<double>() >= 0.999);
}

TEST_CASE("speaker handle determinism and minimum duration") {
  EcapaConfig cfg;
  cfg.in_dim = 80;
  cfg.channels = 64;
  cfg.emb_dim = 48;
  cfg.attn_dim = 32;
  SpeakerEncoderHandle handle;
  handle.net = init_ecapa(cfg, 9);
  handle.config = cfg;

  dsp::Waveform wav;
  wav.samples = torch::sin(torch::arange(int64_t(20000), torch::kFloat32) * 0.04) * 0.3;
  auto e1 = handle.embed(wav);
  auto e2 = handle.embed(wav);
  CHECK(torch::equal(e1.vector, e2.vector));
  CHECK(e1.vector.norm().item<double>() == doctest::Approx(1.0).epsilon(1e-6));

  dsp::Waveform shorty;
  shorty.samples = torch::zeros({8000});
  CHECK_THROWS_AS(handle.embed(shorty), InvalidInput);
}

TEST_CASE("speaker pretraining separates synthetic speakers") {
  auto raw_dir = fs::temp_directory_path() / "envtts_spk_raw";
  auto out_dir = fs::temp_directory_path() / "envtts_spk_manifest";
  fs::remove_all(raw_dir);
  fs::remove_all(out_dir);
  fs::create_directories(out_dir);
  corpus::generate_raw_corpus(raw_dir.string(), 3, 6, 21);

  corpus::EnvSetup setup;
  corpus::EnvironmentSpec env;
  env.env_id = "e0";
  env.rir.type = "exp_decay";
  env.rir.decay_s = 0.15;
  env.rir.seed = 31;
  env.noise_source = "white";
  env.snr_db = 18.0;
  setup.environments.push_back(env);
  auto manifest =
      corpus::build_manifest(raw_dir.string(), setup, (out_dir / "manifest.txt").string());

  EcapaConfig cfg;
  cfg.in_dim = 80;
  cfg.channels = 64;
  cfg.emb_dim = 48;
  cfg.attn_dim = 32;
  SpeakerTrainConfig tc;
  tc.steps = 260;
  tc.batch_size = 12;
  tc.segment_frames = 56;
  tc.seed = 3;

  std::vector<double> losses;
  auto handle = pretrain_speaker_encoder(manifest, cfg, tc, &losses);
  REQUIRE(int(losses.size()) == tc.steps);

  // Loss must drop substantially from its early moving average.
  auto avg = [&](int from, int to) {
    double s = 0;
    for (int i = from; i < to; ++i) s += losses[size_t(i)];
    return s / (to - from);
  };
  const double early = avg(0, 30), late = avg(tc.steps - 30, tc.steps);
  CHECK(late < 0.5 * early);

  // Same-speaker pairs (raw vs env) must out-score different-speaker pairs
  // by a clear margin.
  double same = 0, diff = 0;
  int n_same = 0, n_diff = 0;
  std::vector<torch::Tensor> embs;
  std::vector<std::string> spk;
  for (const auto& rec : manifest.records) {
    auto e_raw = handle.embed(load_wav(rec.raw_path)).vector;
    auto e_env = handle.embed(load_wav(rec.env_paths.at("e0"))).vector;
    same += (e_raw * e_env).sum().item<double>();
    ++n_same;
    embs.push_back(e_raw);
    spk.push_back(rec.speaker_id);
  }
  for (size_t i = 0; i < embs.size(); ++i)
    for (size_t j = i + 1; j < embs.size(); ++j)
      if (spk[i] != spk[j]) {
        diff += (embs[i] * embs[j]).sum().item<double>();
        ++n_diff;
      }
  CHECK(same / n_same > diff / n_diff + 0.1);

  // Reload reproduces embeddings bit-exactly.
  const auto ckpt_path = (out_dir / "spk.ckpt").string();
  save_speaker_encoder(ckpt_path, handle);
  auto reloaded = load_speaker_encoder(ckpt_path);
  auto wav = load_wav(manifest.records[0].raw_path);
  CHECK(torch::equal(handle.embed(wav).vector, reloaded.embed(wav).vector));

  // Single-speaker manifests cannot be classified.
  corpus::Manifest single;
  single.records = {manifest.records[0]};
  CHECK_THROWS_AS(pretrain_speaker_encoder(single, cfg, tc, nullptr), InvalidInput);

  fs::remove_all(raw_dir);
  fs::remove_all(out_dir);
}

TEST_CASE("checkpoint container: round trip, atomicity, truncation") {
  auto dir = fs::temp_directory_path() / "envtts_ckpt_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto path = (dir / "test.ckpt").string();

  ckpt::Container c;
  c.json_sections["meta"] = R"({"step": 3})";
  c.tensor_sections["mod"] = {{"w", torch::randn({4, 5})}, {"b", torch::randn({4})}};
  ckpt::write_container(path, c);

  auto back = ckpt::read_container(path);
  CHECK(back.json("meta") == c.json_sections["meta"]);
  CHECK(back.tensors("mod").size() == 2);
  CHECK(torch::equal(back.tensors("mod")[0].tensor, c.tensor_sections["mod"][0].tensor));

  // save -> load -> save produces identical bytes.
  const auto path2 = (dir / "test2.ckpt").string();
  ckpt::write_container(path2, back);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);

  // Truncated file names the section.
  std::ofstream trunc((dir / "trunc.ckpt").string(), std::ios::binary);
  trunc.write(b1.data(), std::streamsize(b1.size() / 2));
  trunc.close();
  try {
    ckpt::read_container((dir / "trunc.ckpt").string());
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }
  fs::remove_all(dir);
}
