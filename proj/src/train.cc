// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/train.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "envtts/audio_io.h"
#include "envtts/dsp.h"
#include "envtts/losses.h"
#include "envtts/mas.h"
#include "envtts/text.h"

namespace envtts {

bool LossBreakdown::finite() const {
  for (double v : {l_se, l_recon_env, l_recon_raw, l_kl, l_dur, l_adv_g, l_adv_d, l_fm,
                   total_g, total_d})
    if (!std::isfinite(v)) return false;
  return true;
}

std::string LossBreakdown::to_json(int64_t step, double lr) const {
  nlohmann::json j = {{"step", step},
                      {"l_se", l_se},
                      {"l_recon_env", l_recon_env},
                      {"l_recon_raw", l_recon_raw},
                      {"l_kl", l_kl},
                      {"l_dur", l_dur},
                      {"l_adv_g", l_adv_g},
                      {"l_adv_d", l_adv_d},
                      {"l_fm", l_fm},
                      {"total_g", total_g},
                      {"total_d", total_d},
                      {"lr", lr}};
  return j.dump();
}

double lr_schedule(int64_t epoch, const OptimizerConfig& config) {
  check_input(epoch >= 0, "lr_schedule: negative epoch");
  return config.lr0 * std::pow(config.decay_per_epoch, double(epoch));
}

TrainingSet::TrainingSet(const corpus::Manifest& manifest, int min_frames) {
  for (const auto* rec : manifest.split(/*test=*/false)) {
    auto raw = load_wav(rec->raw_path);
    if (dsp::frame_count(raw.size()) < min_frames) continue;
    auto phonemes = torch::tensor(std::vector<int64_t>(rec->phonemes.begin(),
                                                       rec->phonemes.end()),
                                  torch::kLong);
    for (const auto& [env_id, path] : rec->env_paths) {
      if (manifest.is_holdout_env(env_id)) continue;
      TrainItem item;
      item.utt_id = rec->utt_id;
      item.speaker_id = rec->speaker_id;
      item.env_id = env_id;
      item.raw_wav = raw.samples;
      item.env_wav = load_wav(path).samples;
      check_input(item.env_wav.numel() == item.raw_wav.numel(),
                  "training set: unaligned raw/env pair for " + rec->utt_id);
      item.phoneme_ids = phonemes;
      items_.push_back(std::move(item));
    }
  }
  check_input(!items_.empty(), "training set: no usable items (check min length / splits)");
}

std::vector<const TrainItem*> TrainingSet::batch(uint64_t seed, int64_t step,
                                                 int batch_size) const {
  std::mt19937_64 rng(hash_seed("batch", seed) ^ (uint64_t(step) * 0x9e3779b97f4a7c15ull));
  std::vector<const TrainItem*> out;
  out.reserve(size_t(batch_size));
  for (int i = 0; i < batch_size; ++i) out.push_back(&items_[rng() % items_.size()]);
  return out;
}

int64_t TrainingSet::steps_per_epoch(int batch_size) const {
  return std::max<int64_t>(1, int64_t(items_.size()) / batch_size);
}

Trainer::Trainer(TtsSystem& system, const corpus::Manifest& manifest)
    : system_(system), data_(manifest, system.config.train.segment_frames + 1) {
  const auto& oc = system_.config.train.optimizer;
  gen_params_ = system_.generator_parameters();
  disc_params_ = system_.discriminator_parameters();
  auto opts = [&](double lr) {
    return torch::optim::AdamWOptions(lr)
        .betas({oc.beta1, oc.beta2})
        .weight_decay(oc.weight_decay)
        .eps(1e-9);
  };
  const double lr = lr_schedule(system_.epoch, oc);
  opt_g_ = std::make_unique<torch::optim::AdamW>(gen_params_, opts(lr));
  opt_d_ = std::make_unique<torch::optim::AdamW>(disc_params_, opts(lr));
}

double Trainer::current_lr() const {
  return static_cast<const torch::optim::AdamWOptions&>(opt_g_->param_groups()[0].options())
      .lr();
}

void Trainer::set_lr(double lr) {
  for (auto* opt : {opt_g_.get(), opt_d_.get()})
    for (auto& group : opt->param_groups())
      static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);
}

void Trainer::restore_optimizers(const std::vector<ckpt::NamedTensor>& opt_g_state,
                                 const std::vector<ckpt::NamedTensor>& opt_d_state) {
  ckpt::load_adamw(*opt_g_, gen_params_, opt_g_state);
  ckpt::load_adamw(*opt_d_, disc_params_, opt_d_state);
}

void Trainer::save(const std::string& path) const {
  save_system(path, system_, opt_g_.get(), opt_d_.get());
}

LossBreakdown Trainer::train_step() {
  const auto& tc = system_.config.train;
  const auto& weights = tc.weights;
  const int64_t step = system_.step;
  const int W = tc.segment_frames;
  const int hop = dsp::kHopSize;
  const int64_t L = int64_t(W) * hop;

  system_.set_train(true);
  system_.epoch = step / data_.steps_per_epoch(tc.batch_size);
  set_lr(lr_schedule(system_.epoch, tc.optimizer));

  // All stochastic choices in this step derive from (seed, step).
  const uint64_t step_seed = hash_seed("step", tc.seed) ^ uint64_t(step) * 0x2545f4914f6cdd1dull;
  torch::manual_seed(step_seed);
  std::mt19937_64 window_rng(step_seed ^ 0xabcdef);

  auto batch = data_.batch(tc.seed, step, tc.batch_size);

  std::vector<torch::Tensor> se_terms, kl_terms, dur_terms;
  std::vector<torch::Tensor> z_windows, spk_embs, env_embs;
  std::vector<torch::Tensor> real_env_segs, real_raw_segs;
  auto zero_env = zero_environment_embedding(system_.config.backbone.env_dim).vector;

  for (size_t i = 0; i < batch.size(); ++i) {
    const auto& item = *batch[i];
    const uint64_t sample_seed = step_seed ^ hash_seed(item.utt_id + "/" + item.env_id, i);

    auto lin_env = dsp::stft_magnitude(item.env_wav);
    auto lin_raw = dsp::stft_magnitude(item.raw_wav);
    auto mel_raw = dsp::linear_to_mel(lin_raw);

    // Frozen speaker embedding from the environmental speech.
    auto spk = system_.spk_encoder.embed_mel(dsp::linear_to_mel(lin_env));

    auto [mask, enhanced] = system_.estimator->estimate(lin_env);
    auto env_emb = system_.env_encoder->embed(mask);

    se_terms.push_back(
        losses::se_loss(lin_raw, enhanced, mel_raw, dsp::linear_to_mel(enhanced)));

    auto post = system_.posterior->forward(enhanced.unsqueeze(0), spk.unsqueeze(0),
                                           sample_seed ^ 0x11);
    auto [z_p, logdet] = system_.flow->forward(post.z, spk.unsqueeze(0));

    auto encoding = system_.text_encoder->forward(item.phoneme_ids.unsqueeze(0));
    auto alignment = mas_align(encoding.mean.squeeze(0), encoding.logstd.squeeze(0),
                               z_p.squeeze(0));
    auto [m_p, logs_p] = expand_prior(encoding.mean.squeeze(0), encoding.logstd.squeeze(0),
                                      alignment.durations);
    kl_terms.push_back(
        losses::kl_loss(z_p.squeeze(0), post.logstd.squeeze(0), m_p, logs_p, logdet));
    dur_terms.push_back(system_.duration->loss(encoding.hidden,
                                               alignment.durations.unsqueeze(0),
                                               spk.unsqueeze(0), sample_seed ^ 0x22));

    // One shared z window per sample feeds both decoder branches.
    const int64_t T = post.z.size(2);
    const int64_t ws = int64_t(window_rng() % uint64_t(T - W));
    z_windows.push_back(post.z.squeeze(0).narrow(1, ws, W));
    spk_embs.push_back(spk);
    env_embs.push_back(env_emb);
    real_env_segs.push_back(item.env_wav.narrow(0, ws * hop, L));
    real_raw_segs.push_back(item.raw_wav.narrow(0, ws * hop, L));
  }

  auto z_batch = torch::stack(z_windows);                     // (B, C, W)
  auto spk_batch = torch::stack(spk_embs);                    // (B, D)
  auto env_batch = torch::stack(env_embs);                    // (B, D)
  auto zero_batch = zero_env.unsqueeze(0).expand_as(env_batch);
  auto real_env = torch::stack(real_env_segs).unsqueeze(1);   // (B, 1, L)
  auto real_raw = torch::stack(real_raw_segs).unsqueeze(1);

  auto fake_env = system_.decoder->forward(z_batch, spk_batch, env_batch);
  auto fake_raw = system_.decoder->forward(z_batch, spk_batch, zero_batch);

  LossBreakdown out;

  // Discriminator update: both branches in one combined step.
  auto reals = torch::cat({real_env, real_raw}, 0);
  auto fakes = torch::cat({fake_env, fake_raw}, 0);
  auto d_real = system_.discriminator->forward(reals);
  auto d_fake_detached = system_.discriminator->forward(fakes.detach());
  auto l_adv_d = losses::discriminator_loss(d_real.logits, d_fake_detached.logits);
  out.l_adv_d = l_adv_d.item<double>();
  out.total_d = out.l_adv_d;
  if (!std::isfinite(out.l_adv_d))
    throw std::runtime_error("train_step " + std::to_string(step) +
                             " aborted: non-finite discriminator loss");
  opt_d_->zero_grad();
  l_adv_d.backward();
  opt_d_->step();

  // Generator update.
  auto d_fake = system_.discriminator->forward(fakes);
  auto d_real_ref = system_.discriminator->forward(reals);
  auto l_adv_g = losses::generator_adversarial_loss(d_fake.logits);
  auto l_fm = losses::feature_matching_loss(d_real_ref.features, d_fake.features);

  auto mel_fake_env = dsp::linear_to_mel(dsp::stft_magnitude(fake_env.squeeze(1)));
  auto mel_fake_raw = dsp::linear_to_mel(dsp::stft_magnitude(fake_raw.squeeze(1)));
  torch::Tensor mel_real_env, mel_real_raw;
  {
    torch::NoGradGuard ng;
    mel_real_env = dsp::linear_to_mel(dsp::stft_magnitude(real_env.squeeze(1)));
    mel_real_raw = dsp::linear_to_mel(dsp::stft_magnitude(real_raw.squeeze(1)));
  }
  auto l_recon_env = (mel_fake_env - mel_real_env).abs().mean();
  auto l_recon_raw = (mel_fake_raw - mel_real_raw).abs().mean();

  auto l_se = torch::stack(se_terms).mean();
  auto l_kl = torch::stack(kl_terms).mean();
  auto l_dur = torch::stack(dur_terms).mean();

  // Zero-weighted terms are left out of the graph entirely so modules they
  // alone touch keep undefined grads and are skipped by the optimizer.
  auto total_g = torch::zeros({}, l_se.options());
  if (weights.mel != 0) total_g = total_g + weights.mel * (l_recon_env + l_recon_raw);
  if (weights.kl != 0) total_g = total_g + weights.kl * l_kl;
  if (weights.duration != 0) total_g = total_g + weights.duration * l_dur;
  if (weights.feature_matching != 0) total_g = total_g + weights.feature_matching * l_fm;
  if (weights.adversarial != 0) total_g = total_g + weights.adversarial * l_adv_g;
  if (weights.se != 0) total_g = total_g + weights.se * l_se;

  out.l_se = l_se.item<double>();
  out.l_recon_env = l_recon_env.item<double>();
  out.l_recon_raw = l_recon_raw.item<double>();
  out.l_kl = l_kl.item<double>();
  out.l_dur = l_dur.item<double>();
  out.l_adv_g = l_adv_g.item<double>();
  out.l_fm = l_fm.item<double>();
  out.total_g = total_g.item<double>();

  if (!out.finite()) {
    std::ostringstream dump;
    dump << "train_step " << step << " aborted: non-finite loss;"
         << " l_se=" << out.l_se << " l_recon_env=" << out.l_recon_env
         << " l_recon_raw=" << out.l_recon_raw << " l_kl=" << out.l_kl
         << " l_dur=" << out.l_dur << " l_adv_g=" << out.l_adv_g << " l_fm=" << out.l_fm
         << " l_adv_d=" << out.l_adv_d;
    throw std::runtime_error(dump.str());
  }

  opt_g_->zero_grad();
  total_g.backward();
  opt_g_->step();

  system_.step = step + 1;
  return out;
}

void Trainer::run(int64_t until_step, const std::string& loss_log_path,
                  const std::function<void(int64_t, const LossBreakdown&)>& on_step) {
  std::ofstream log;
  if (!loss_log_path.empty()) {
    log.open(loss_log_path, std::ios::app);
    if (!log) throw IoError("trainer: cannot open loss log " + loss_log_path);
  }
  while (system_.step < until_step) {
    const int64_t step = system_.step;
    auto breakdown = train_step();
    if (log.is_open()) log << breakdown.to_json(step, current_lr()) << "\n";
    if (on_step) on_step(step, breakdown);
  }
  if (log.is_open()) log.flush();
}

}  // namespace envtts
