// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/checkpoint.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "envtts/common.h"

namespace envtts {
namespace ckpt {

namespace {

constexpr char kMagic[8] = {'E', 'N', 'V', 'T', 'T', 'S', 'C', 'K'};

enum SectionKind : uint8_t { kJson = 0, kTensors = 1 };

void put_u32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); }
void put_u64(std::ostream& out, uint64_t v) { out.write(reinterpret_cast<char*>(&v), 8); }
void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, uint32_t(s.size()));
  out.write(s.data(), std::streamsize(s.size()));
}

uint32_t get_u32(std::istream& in, const std::string& what) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) throw IoError("checkpoint: truncated while reading " + what);
  return v;
}

uint64_t get_u64(std::istream& in, const std::string& what) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  if (!in) throw IoError("checkpoint: truncated while reading " + what);
  return v;
}

std::string get_str(std::istream& in, const std::string& what) {
  const uint32_t n = get_u32(in, what);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw IoError("checkpoint: truncated while reading " + what);
  return s;
}

uint8_t dtype_code(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return 0;
    case torch::kFloat64: return 1;
    case torch::kInt64: return 2;
    default: throw IoError("checkpoint: unsupported dtype");
  }
}

torch::ScalarType code_dtype(uint8_t code) {
  switch (code) {
    case 0: return torch::kFloat32;
    case 1: return torch::kFloat64;
    case 2: return torch::kInt64;
    default: throw IoError("checkpoint: unknown dtype code");
  }
}

void write_tensor(std::ostream& out, const NamedTensor& nt) {
  auto t = nt.tensor.detach().cpu().contiguous();
  put_str(out, nt.name);
  const uint8_t code = dtype_code(t.scalar_type());
  out.write(reinterpret_cast<const char*>(&code), 1);
  put_u32(out, uint32_t(t.dim()));
  for (int64_t d = 0; d < t.dim(); ++d) put_u64(out, uint64_t(t.size(d)));
  const uint64_t nbytes = uint64_t(t.numel()) * t.element_size();
  put_u64(out, nbytes);
  out.write(reinterpret_cast<const char*>(t.data_ptr()), std::streamsize(nbytes));
}

NamedTensor read_tensor(std::istream& in, const std::string& section) {
  NamedTensor nt;
  nt.name = get_str(in, "tensor name in '" + section + "'");
  uint8_t code = 0;
  in.read(reinterpret_cast<char*>(&code), 1);
  if (!in) throw IoError("checkpoint: truncated while reading dtype in '" + section + "'");
  const uint32_t ndim = get_u32(in, "rank of '" + nt.name + "'");
  std::vector<int64_t> dims(ndim);
  for (auto& d : dims) d = int64_t(get_u64(in, "shape of '" + nt.name + "'"));
  const uint64_t nbytes = get_u64(in, "size of '" + nt.name + "'");
  auto t = torch::empty(dims, code_dtype(code));
  if (uint64_t(t.numel()) * t.element_size() != nbytes)
    throw IoError("checkpoint: inconsistent byte count for '" + nt.name + "'");
  in.read(reinterpret_cast<char*>(t.data_ptr()), std::streamsize(nbytes));
  if (!in) throw IoError("checkpoint: truncated while reading data of '" + nt.name + "'");
  nt.tensor = t;
  return nt;
}

}  // namespace

bool Container::has(const std::string& name) const {
  return json_sections.count(name) > 0 || tensor_sections.count(name) > 0;
}

const std::vector<NamedTensor>& Container::tensors(const std::string& name) const {
  auto it = tensor_sections.find(name);
  if (it == tensor_sections.end())
    throw IoError("checkpoint: missing tensor section '" + name + "'");
  return it->second;
}

const std::string& Container::json(const std::string& name) const {
  auto it = json_sections.find(name);
  if (it == json_sections.end())
    throw IoError("checkpoint: missing json section '" + name + "'");
  return it->second;
}

void write_container(const std::string& path, const Container& container) {
  namespace fs = std::filesystem;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot open " + tmp + " for writing");
    out.write(kMagic, 8);
    put_u32(out, kVersion);
    put_u32(out, uint32_t(container.json_sections.size() + container.tensor_sections.size()));
    for (const auto& [name, text] : container.json_sections) {
      const uint8_t kind = kJson;
      out.write(reinterpret_cast<const char*>(&kind), 1);
      put_str(out, name);
      put_u64(out, text.size());
      out.write(text.data(), std::streamsize(text.size()));
    }
    for (const auto& [name, tensors] : container.tensor_sections) {
      const uint8_t kind = kTensors;
      out.write(reinterpret_cast<const char*>(&kind), 1);
      put_str(out, name);
      std::ostringstream payload;
      put_u32(payload, uint32_t(tensors.size()));
      for (const auto& nt : tensors) write_tensor(payload, nt);
      const std::string bytes = payload.str();
      put_u64(out, bytes.size());
      out.write(bytes.data(), std::streamsize(bytes.size()));
    }
    if (!out) throw IoError("checkpoint: write failed for " + tmp);
  }
  fs::rename(tmp, path);
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError("checkpoint: bad magic in " + path);
  const uint32_t version = get_u32(in, "version");
  if (version != kVersion)
    throw IoError("checkpoint: version " + std::to_string(version) +
                  " needs migration; this build reads version " + std::to_string(kVersion));
  const uint32_t n_sections = get_u32(in, "section count");
  Container c;
  for (uint32_t i = 0; i < n_sections; ++i) {
    uint8_t kind = 0;
    in.read(reinterpret_cast<char*>(&kind), 1);
    if (!in) throw IoError("checkpoint: truncated at section " + std::to_string(i));
    const std::string name = get_str(in, "section name");
    const uint64_t len = get_u64(in, "length of section '" + name + "'");
    if (kind == kJson) {
      std::string text(len, '\0');
      in.read(text.data(), std::streamsize(len));
      if (!in) throw IoError("checkpoint: truncated while reading section '" + name + "'");
      c.json_sections[name] = std::move(text);
    } else if (kind == kTensors) {
      std::string payload(len, '\0');
      in.read(payload.data(), std::streamsize(len));
      if (!in) throw IoError("checkpoint: truncated while reading section '" + name + "'");
      std::istringstream ps(payload);
      const uint32_t count = get_u32(ps, "tensor count in '" + name + "'");
      std::vector<NamedTensor> tensors;
      tensors.reserve(count);
      for (uint32_t t = 0; t < count; ++t) tensors.push_back(read_tensor(ps, name));
      c.tensor_sections[name] = std::move(tensors);
    } else {
      throw IoError("checkpoint: unknown section kind in '" + name + "'");
    }
  }
  return c;
}

std::vector<NamedTensor> dump_module(const torch::nn::Module& module) {
  std::vector<NamedTensor> out;
  for (const auto& p : module.named_parameters()) out.push_back({p.key(), p.value()});
  for (const auto& b : module.named_buffers()) out.push_back({"buffer:" + b.key(), b.value()});
  return out;
}

void load_module(torch::nn::Module& module, const std::vector<NamedTensor>& tensors,
                 const std::string& context) {
  torch::NoGradGuard no_grad;
  auto params = module.named_parameters();
  auto buffers = module.named_buffers();
  std::map<std::string, torch::Tensor> index;
  for (const auto& p : params) index[p.key()] = p.value();
  for (const auto& b : buffers) index["buffer:" + b.key()] = b.value();

  std::map<std::string, bool> seen;
  for (const auto& [name, _] : index) seen[name] = false;
  for (const auto& nt : tensors) {
    auto it = index.find(nt.name);
    if (it == index.end())
      throw IoError("checkpoint: unexpected tensor '" + nt.name + "' in " + context);
    if (it->second.sizes() != nt.tensor.sizes())
      throw IoError("checkpoint: shape mismatch for '" + nt.name + "' in " + context);
    it->second.copy_(nt.tensor.to(it->second.dtype()));
    seen[nt.name] = true;
  }
  for (const auto& [name, was_seen] : seen)
    if (!was_seen) throw IoError("checkpoint: missing tensor '" + name + "' in " + context);
}

std::vector<NamedTensor> dump_adamw(const torch::optim::AdamW& opt,
                                    const std::vector<torch::Tensor>& params) {
  std::vector<NamedTensor> out;
  const auto& state = opt.state();
  for (size_t i = 0; i < params.size(); ++i) {
    auto key = params[i].unsafeGetTensorImpl();
    auto it = state.find(key);
    if (it == state.end()) continue;  // parameter never stepped
    auto& s = static_cast<torch::optim::AdamWParamState&>(*it->second);
    const std::string prefix = "p" + std::to_string(i) + ".";
    out.push_back({prefix + "step", torch::tensor({s.step()}, torch::kInt64)});
    out.push_back({prefix + "exp_avg", s.exp_avg()});
    out.push_back({prefix + "exp_avg_sq", s.exp_avg_sq()});
  }
  return out;
}

void load_adamw(torch::optim::AdamW& opt, const std::vector<torch::Tensor>& params,
                const std::vector<NamedTensor>& tensors) {
  std::map<std::string, torch::Tensor> index;
  for (const auto& nt : tensors) index[nt.name] = nt.tensor;
  for (size_t i = 0; i < params.size(); ++i) {
    const std::string prefix = "p" + std::to_string(i) + ".";
    auto step_it = index.find(prefix + "step");
    if (step_it == index.end()) continue;
    auto state = std::make_unique<torch::optim::AdamWParamState>();
    state->step(step_it->second[0].item<int64_t>());
    state->exp_avg(index.at(prefix + "exp_avg").clone());
    state->exp_avg_sq(index.at(prefix + "exp_avg_sq").clone());
    opt.state()[params[i].unsafeGetTensorImpl()] = std::move(state);
  }
}

}  // namespace ckpt
}  // namespace envtts
