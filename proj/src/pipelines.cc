// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/pipelines.h"

#include "envtts/mas.h"
#include "envtts/text.h"

namespace envtts {

namespace {

EnvironmentEmbedding environment_embedding_from_ref(const dsp::Waveform& env_ref,
                                                    TtsSystem& system) {
  check_input(env_ref.duration() >= 0.5, "environment reference must be at least 0.5 s");
  auto [mask, enhanced] = system.estimator->estimate(dsp::stft_magnitude(env_ref));
  return environment_encode(mask, system.env_encoder);
}

}  // namespace

dsp::Waveform synthesize(const SynthesisRequest& request, TtsSystem& system,
                         SynthesisTrace* trace) {
  check_input(request.noise_scale_prior >= 0 && request.noise_scale_sdp >= 0,
              "synthesize: noise scales must be >= 0");
  system.set_train(false);
  torch::NoGradGuard no_grad;

  auto spk = system.spk_encoder.embed(request.speaker_ref).vector;
  auto env = request.env_ref
                 ? environment_embedding_from_ref(*request.env_ref, system).vector
                 : zero_environment_embedding(system.config.backbone.env_dim).vector;

  auto ids = text::text_to_phonemes(request.text);
  auto id_tensor =
      torch::tensor(std::vector<int64_t>(ids.begin(), ids.end()), torch::kLong).unsqueeze(0);
  auto encoding = system.text_encoder->forward(id_tensor);

  auto durations = system.duration->sample(encoding.hidden, spk.unsqueeze(0),
                                           request.noise_scale_sdp,
                                           hash_seed("sdp", request.seed));
  auto [mean, logstd] = expand_prior(encoding.mean.squeeze(0), encoding.logstd.squeeze(0),
                                     durations.squeeze(0));

  auto gen = make_generator(hash_seed("prior", request.seed));
  auto eps = torch::randn(mean.sizes(), gen, mean.options());
  auto z_p = mean + eps * torch::exp(logstd) * request.noise_scale_prior;
  auto z = system.flow->inverse(z_p, spk);
  auto wav = system.decoder->forward(z, spk, env).squeeze(0);

  if (trace) {
    trace->durations = durations.squeeze(0);
    trace->z_p = z_p;
    trace->z = z;
    trace->spk = spk;
    trace->env = env;
  }

  dsp::Waveform out;
  out.samples = wav;
  out.sample_rate = dsp::kSampleRate;
  return out;
}

dsp::Waveform convert_environment(const ConversionRequest& request, TtsSystem& system) {
  check_input(request.source.duration() >= 0.5, "convert: source must be at least 0.5 s");
  check_input(request.temperature >= 0, "convert: temperature must be >= 0");
  system.set_train(false);
  torch::NoGradGuard no_grad;

  // The source utterance doubles as the speaker reference. Sources between
  // 0.5 s and the encoder's 1 s minimum are tiled for the embedding only.
  auto spk_ref = request.source;
  const int64_t min_len = dsp::kSampleRate;
  if (spk_ref.size() < min_len) {
    const int64_t reps = (min_len + spk_ref.size() - 1) / spk_ref.size();
    spk_ref.samples = spk_ref.samples.repeat({reps}).narrow(0, 0, min_len);
  }
  auto spk = system.spk_encoder.embed(spk_ref).vector;

  auto [mask_src, enhanced_src] = system.estimator->estimate(dsp::stft_magnitude(request.source));
  auto post = system.posterior->forward(enhanced_src.unsqueeze(0), spk.unsqueeze(0),
                                        hash_seed("posterior", request.seed),
                                        request.temperature);

  auto env = request.target_env_ref
                 ? environment_embedding_from_ref(*request.target_env_ref, system).vector
                 : zero_environment_embedding(system.config.backbone.env_dim).vector;

  auto wav = system.decoder->forward(post.z.squeeze(0), spk, env).squeeze(0);
  dsp::Waveform out;
  out.samples = wav;
  out.sample_rate = dsp::kSampleRate;
  return out;
}

dsp::Waveform enhance(const dsp::Waveform& source, TtsSystem& system, uint64_t seed,
                      double temperature) {
  ConversionRequest request;
  request.source = source;
  request.target_env_ref = std::nullopt;
  request.temperature = temperature;
  request.seed = seed;
  return convert_environment(request, system);
}

}  // namespace envtts
