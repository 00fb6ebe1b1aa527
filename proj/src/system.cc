// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/system.h"

#include <nlohmann/json.hpp>

#include "envtts/text.h"

using json = nlohmann::json;

namespace envtts {

std::vector<torch::Tensor> TtsSystem::generator_parameters() const {
  std::vector<torch::Tensor> params;
  for (const auto& mod :
       std::vector<std::shared_ptr<torch::nn::Module>>{estimator.ptr(), env_encoder.ptr(),
                                                       text_encoder.ptr(), posterior.ptr(),
                                                       flow.ptr(), duration.ptr(), decoder.ptr()}) {
    auto p = mod->parameters();
    params.insert(params.end(), p.begin(), p.end());
  }
  return params;
}

std::vector<torch::Tensor> TtsSystem::discriminator_parameters() const {
  return discriminator->parameters();
}

void TtsSystem::set_train(bool train) {
  estimator->train(train);
  env_encoder->train(train);
  text_encoder->train(train);
  posterior->train(train);
  flow->train(train);
  duration->train(train);
  decoder->train(train);
  if (discriminator) discriminator->train(train);
  if (spk_encoder.net) spk_encoder.net->eval();  // always frozen
}

TtsSystem init_system(const SystemConfig& config, uint64_t seed,
                      SpeakerEncoderHandle spk_encoder) {
  config.validate();
  TtsSystem sys;
  sys.config = config;
  sys.estimator = init_estimator(config.estimator, hash_seed("estimator", seed));
  torch::manual_seed(hash_seed("env_encoder", seed));
  sys.env_encoder = EcapaEncoder(config.env_encoder);
  sys.spk_encoder = std::move(spk_encoder);
  torch::manual_seed(hash_seed("text_encoder", seed));
  sys.text_encoder = TextEncoder(config.backbone, text::inventory_size());
  torch::manual_seed(hash_seed("posterior", seed));
  sys.posterior = PosteriorEncoder(config.backbone);
  torch::manual_seed(hash_seed("flow", seed));
  sys.flow = ResidualCouplingFlow(config.backbone);
  torch::manual_seed(hash_seed("duration", seed));
  sys.duration = DurationModel(config.backbone);
  torch::manual_seed(hash_seed("decoder", seed));
  sys.decoder = Decoder(config.backbone);
  torch::manual_seed(hash_seed("discriminator", seed));
  sys.discriminator = MultiDiscriminator(config.discriminator);
  sys.set_train(false);
  return sys;
}

void save_system(const std::string& path, const TtsSystem& system,
                 const torch::optim::AdamW* opt_g, const torch::optim::AdamW* opt_d) {
  ckpt::Container c;
  json meta = {{"format", "envtts-system"},
               {"step", system.step},
               {"epoch", system.epoch},
               {"config", json::parse(system_config_to_json(system.config))},
               {"spk_impl_id", system.spk_encoder.impl_id},
               {"has_optimizers", opt_g != nullptr && opt_d != nullptr}};
  c.json_sections["meta"] = meta.dump();
  c.tensor_sections["env_estimator"] = ckpt::dump_module(*system.estimator);
  c.tensor_sections["env_encoder"] = ckpt::dump_module(*system.env_encoder);
  c.tensor_sections["spk_encoder"] = ckpt::dump_module(*system.spk_encoder.net);
  c.tensor_sections["text_encoder"] = ckpt::dump_module(*system.text_encoder);
  c.tensor_sections["posterior"] = ckpt::dump_module(*system.posterior);
  c.tensor_sections["flow"] = ckpt::dump_module(*system.flow);
  c.tensor_sections["duration"] = ckpt::dump_module(*system.duration);
  c.tensor_sections["decoder"] = ckpt::dump_module(*system.decoder);
  c.tensor_sections["discriminator"] = ckpt::dump_module(*system.discriminator);
  if (opt_g && opt_d) {
    c.tensor_sections["opt_g"] = ckpt::dump_adamw(*opt_g, system.generator_parameters());
    c.tensor_sections["opt_d"] = ckpt::dump_adamw(*opt_d, system.discriminator_parameters());
  }
  ckpt::write_container(path, c);
}

LoadedSystem load_system(const std::string& path) {
  auto c = ckpt::read_container(path);
  auto meta = json::parse(c.json("meta"));
  if (meta.value("format", "") != "envtts-system")
    throw IoError("load_system: '" + path + "' is not a system checkpoint");
  auto config = system_config_from_json(meta.at("config").dump());

  LoadedSystem out;
  out.system.config = config;
  out.system.step = meta.value("step", 0);
  out.system.epoch = meta.value("epoch", 0);

  out.system.estimator = EnvironmentEstimator(config.estimator);
  out.system.env_encoder = EcapaEncoder(config.env_encoder);
  out.system.spk_encoder.net = EcapaEncoder(config.spk_encoder);
  out.system.spk_encoder.config = config.spk_encoder;
  out.system.spk_encoder.impl_id = meta.value("spk_impl_id", std::string("ecapa-mel-aam-v1"));
  out.system.text_encoder = TextEncoder(config.backbone, text::inventory_size());
  out.system.posterior = PosteriorEncoder(config.backbone);
  out.system.flow = ResidualCouplingFlow(config.backbone);
  out.system.duration = DurationModel(config.backbone);
  out.system.decoder = Decoder(config.backbone);
  out.system.discriminator = MultiDiscriminator(config.discriminator);

  ckpt::load_module(*out.system.estimator, c.tensors("env_estimator"), "env_estimator");
  ckpt::load_module(*out.system.env_encoder, c.tensors("env_encoder"), "env_encoder");
  ckpt::load_module(*out.system.spk_encoder.net, c.tensors("spk_encoder"), "spk_encoder");
  ckpt::load_module(*out.system.text_encoder, c.tensors("text_encoder"), "text_encoder");
  ckpt::load_module(*out.system.posterior, c.tensors("posterior"), "posterior");
  ckpt::load_module(*out.system.flow, c.tensors("flow"), "flow");
  ckpt::load_module(*out.system.duration, c.tensors("duration"), "duration");
  ckpt::load_module(*out.system.decoder, c.tensors("decoder"), "decoder");
  ckpt::load_module(*out.system.discriminator, c.tensors("discriminator"), "discriminator");

  if (meta.value("has_optimizers", false)) {
    out.has_optimizer_state = true;
    out.opt_g_state = c.tensors("opt_g");
    out.opt_d_state = c.tensors("opt_d");
  }
  out.system.set_train(false);
  return out;
}

}  // namespace envtts
