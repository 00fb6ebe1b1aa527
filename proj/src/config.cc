// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/config.h"

#include <fstream>

#include <nlohmann/json.hpp>

#include "envtts/common.h"

using json = nlohmann::json;

namespace envtts {

void EstimatorConfig::validate() const {
  if (n_layers < 1 || model_dim < 1 || ff_dim < 1 || conv_kernel < 1)
    throw ConfigError("estimator: dimensions must be positive");
  if (model_dim % n_heads != 0)
    throw ConfigError("estimator: model_dim must be divisible by n_heads");
  if (conv_kernel % 2 == 0) throw ConfigError("estimator: conv_kernel must be odd");
}

void EcapaConfig::validate() const {
  if (in_dim < 1 || channels < 1 || emb_dim < 1 || attn_dim < 1)
    throw ConfigError("ecapa: dimensions must be positive");
  if (channels % res2_scale != 0)
    throw ConfigError("ecapa: channels must be divisible by res2_scale");
}

int BackboneConfig::upsample_factor() const {
  int f = 1;
  for (int r : upsample_rates) f *= r;
  return f;
}

void BackboneConfig::validate() const {
  if (c_lat % 2 != 0) throw ConfigError("backbone: c_lat must be even for coupling splits");
  if (hidden % text_heads != 0)
    throw ConfigError("backbone: hidden must be divisible by text_heads");
  if (upsample_rates.size() != upsample_kernels.size())
    throw ConfigError("backbone: upsample_rates/kernels length mismatch");
  for (size_t i = 0; i < upsample_rates.size(); ++i)
    if ((upsample_kernels[i] - upsample_rates[i]) % 2 != 0)
      throw ConfigError("backbone: upsample kernel minus rate must be even");
  if (upsample_factor() != 256)
    throw ConfigError("backbone: upsample factor must equal the 256-sample hop");
}

void OptimizerConfig::validate() const {
  if (lr0 <= 0) throw ConfigError("optimizer: lr0 must be positive");
  if (decay_per_epoch <= 0 || decay_per_epoch >= 1)
    throw ConfigError("optimizer: decay factor must be in (0, 1)");
}

void SystemConfig::validate() const {
  estimator.validate();
  env_encoder.validate();
  spk_encoder.validate();
  backbone.validate();
  train.optimizer.validate();
  if (backbone.env_dim != env_encoder.emb_dim)
    throw ConfigError("config: backbone.env_dim must match env_encoder.emb_dim");
  if (backbone.spk_dim != spk_encoder.emb_dim)
    throw ConfigError("config: backbone.spk_dim must match spk_encoder.emb_dim");
}

namespace {

// Read a key if present, else keep the default.
template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json estimator_to_json(const EstimatorConfig& c) {
  return {{"n_layers", c.n_layers},     {"model_dim", c.model_dim},
          {"n_heads", c.n_heads},       {"ff_dim", c.ff_dim},
          {"conv_kernel", c.conv_kernel}, {"dropout", c.dropout},
          {"allow_negative_mask", c.allow_negative_mask}};
}

void estimator_from_json(const json& j, EstimatorConfig& c) {
  get(j, "n_layers", c.n_layers);
  get(j, "model_dim", c.model_dim);
  get(j, "n_heads", c.n_heads);
  get(j, "ff_dim", c.ff_dim);
  get(j, "conv_kernel", c.conv_kernel);
  get(j, "dropout", c.dropout);
  get(j, "allow_negative_mask", c.allow_negative_mask);
}

json ecapa_to_json(const EcapaConfig& c) {
  return {{"in_dim", c.in_dim},
          {"channels", c.channels},
          {"emb_dim", c.emb_dim},
          {"attn_dim", c.attn_dim},
          {"res2_scale", c.res2_scale}};
}

void ecapa_from_json(const json& j, EcapaConfig& c) {
  get(j, "in_dim", c.in_dim);
  get(j, "channels", c.channels);
  get(j, "emb_dim", c.emb_dim);
  get(j, "attn_dim", c.attn_dim);
  get(j, "res2_scale", c.res2_scale);
}

json backbone_to_json(const BackboneConfig& c) {
  return {{"hidden", c.hidden},
          {"c_lat", c.c_lat},
          {"text_layers", c.text_layers},
          {"text_heads", c.text_heads},
          {"text_ff", c.text_ff},
          {"text_kernel", c.text_kernel},
          {"rel_window", c.rel_window},
          {"dropout", c.dropout},
          {"posterior_layers", c.posterior_layers},
          {"posterior_hidden", c.posterior_hidden},
          {"posterior_kernel", c.posterior_kernel},
          {"condition_posterior_on_speaker", c.condition_posterior_on_speaker},
          {"flow_couplings", c.flow_couplings},
          {"flow_layers", c.flow_layers},
          {"flow_hidden", c.flow_hidden},
          {"flow_kernel", c.flow_kernel},
          {"use_stochastic_duration", c.use_stochastic_duration},
          {"dur_flow_steps", c.dur_flow_steps},
          {"dur_filter", c.dur_filter},
          {"dec_channels", c.dec_channels},
          {"upsample_rates", c.upsample_rates},
          {"upsample_kernels", c.upsample_kernels},
          {"res_kernels", c.res_kernels},
          {"res_dilations", c.res_dilations},
          {"spk_dim", c.spk_dim},
          {"env_dim", c.env_dim}};
}

void backbone_from_json(const json& j, BackboneConfig& c) {
  get(j, "hidden", c.hidden);
  get(j, "c_lat", c.c_lat);
  get(j, "text_layers", c.text_layers);
  get(j, "text_heads", c.text_heads);
  get(j, "text_ff", c.text_ff);
  get(j, "text_kernel", c.text_kernel);
  get(j, "rel_window", c.rel_window);
  get(j, "dropout", c.dropout);
  get(j, "posterior_layers", c.posterior_layers);
  get(j, "posterior_hidden", c.posterior_hidden);
  get(j, "posterior_kernel", c.posterior_kernel);
  get(j, "condition_posterior_on_speaker", c.condition_posterior_on_speaker);
  get(j, "flow_couplings", c.flow_couplings);
  get(j, "flow_layers", c.flow_layers);
  get(j, "flow_hidden", c.flow_hidden);
  get(j, "flow_kernel", c.flow_kernel);
  get(j, "use_stochastic_duration", c.use_stochastic_duration);
  get(j, "dur_flow_steps", c.dur_flow_steps);
  get(j, "dur_filter", c.dur_filter);
  get(j, "dec_channels", c.dec_channels);
  get(j, "upsample_rates", c.upsample_rates);
  get(j, "upsample_kernels", c.upsample_kernels);
  get(j, "res_kernels", c.res_kernels);
  get(j, "res_dilations", c.res_dilations);
  get(j, "spk_dim", c.spk_dim);
  get(j, "env_dim", c.env_dim);
}

}  // namespace

std::string system_config_to_json(const SystemConfig& c) {
  json j;
  j["estimator"] = estimator_to_json(c.estimator);
  j["env_encoder"] = ecapa_to_json(c.env_encoder);
  j["spk_encoder"] = ecapa_to_json(c.spk_encoder);
  j["backbone"] = backbone_to_json(c.backbone);
  j["discriminator"] = {{"periods", c.discriminator.periods},
                        {"mpd_channels", c.discriminator.mpd_channels},
                        {"msd_scales", c.discriminator.msd_scales},
                        {"msd_channels", c.discriminator.msd_channels}};
  j["train"] = {{"batch_size", c.train.batch_size},
                {"segment_frames", c.train.segment_frames},
                {"total_steps", c.train.total_steps},
                {"seed", c.train.seed},
                {"log_every", c.train.log_every},
                {"checkpoint_every", c.train.checkpoint_every},
                {"weights",
                 {{"mel", c.train.weights.mel},
                  {"kl", c.train.weights.kl},
                  {"duration", c.train.weights.duration},
                  {"feature_matching", c.train.weights.feature_matching},
                  {"adversarial", c.train.weights.adversarial},
                  {"se", c.train.weights.se}}},
                {"optimizer",
                 {{"lr0", c.train.optimizer.lr0},
                  {"beta1", c.train.optimizer.beta1},
                  {"beta2", c.train.optimizer.beta2},
                  {"weight_decay", c.train.optimizer.weight_decay},
                  {"decay_per_epoch", c.train.optimizer.decay_per_epoch}}}};
  j["spk_train"] = {{"steps", c.spk_train.steps},
                    {"batch_size", c.spk_train.batch_size},
                    {"segment_frames", c.spk_train.segment_frames},
                    {"lr", c.spk_train.lr},
                    {"aam_margin", c.spk_train.aam_margin},
                    {"aam_scale", c.spk_train.aam_scale},
                    {"seed", c.spk_train.seed}};
  j["inference"] = {{"noise_scale_prior", c.inference.noise_scale_prior},
                    {"noise_scale_sdp", c.inference.noise_scale_sdp},
                    {"conversion_temperature", c.inference.conversion_temperature}};
  return j.dump(2);
}

SystemConfig system_config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, true, true);
  SystemConfig c;
  if (j.contains("estimator")) estimator_from_json(j["estimator"], c.estimator);
  if (j.contains("env_encoder")) ecapa_from_json(j["env_encoder"], c.env_encoder);
  if (j.contains("spk_encoder")) ecapa_from_json(j["spk_encoder"], c.spk_encoder);
  if (j.contains("backbone")) backbone_from_json(j["backbone"], c.backbone);
  if (j.contains("discriminator")) {
    const auto& d = j["discriminator"];
    get(d, "periods", c.discriminator.periods);
    get(d, "mpd_channels", c.discriminator.mpd_channels);
    get(d, "msd_scales", c.discriminator.msd_scales);
    get(d, "msd_channels", c.discriminator.msd_channels);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    get(t, "batch_size", c.train.batch_size);
    get(t, "segment_frames", c.train.segment_frames);
    get(t, "total_steps", c.train.total_steps);
    get(t, "seed", c.train.seed);
    get(t, "log_every", c.train.log_every);
    get(t, "checkpoint_every", c.train.checkpoint_every);
    if (t.contains("weights")) {
      const auto& w = t["weights"];
      get(w, "mel", c.train.weights.mel);
      get(w, "kl", c.train.weights.kl);
      get(w, "duration", c.train.weights.duration);
      get(w, "feature_matching", c.train.weights.feature_matching);
      get(w, "adversarial", c.train.weights.adversarial);
      get(w, "se", c.train.weights.se);
    }
    if (t.contains("optimizer")) {
      const auto& o = t["optimizer"];
      get(o, "lr0", c.train.optimizer.lr0);
      get(o, "beta1", c.train.optimizer.beta1);
      get(o, "beta2", c.train.optimizer.beta2);
      get(o, "weight_decay", c.train.optimizer.weight_decay);
      get(o, "decay_per_epoch", c.train.optimizer.decay_per_epoch);
    }
  }
  if (j.contains("spk_train")) {
    const auto& t = j["spk_train"];
    get(t, "steps", c.spk_train.steps);
    get(t, "batch_size", c.spk_train.batch_size);
    get(t, "segment_frames", c.spk_train.segment_frames);
    get(t, "lr", c.spk_train.lr);
    get(t, "aam_margin", c.spk_train.aam_margin);
    get(t, "aam_scale", c.spk_train.aam_scale);
    get(t, "seed", c.spk_train.seed);
  }
  if (j.contains("inference")) {
    const auto& i = j["inference"];
    get(i, "noise_scale_prior", c.inference.noise_scale_prior);
    get(i, "noise_scale_sdp", c.inference.noise_scale_sdp);
    get(i, "conversion_temperature", c.inference.conversion_temperature);
  }
  c.validate();
  return c;
}

SystemConfig load_system_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_system_config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return system_config_from_json(text);
}

void save_system_config(const std::string& path, const SystemConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("save_system_config: cannot open " + path);
  out << system_config_to_json(config) << "\n";
}

}  // namespace envtts
