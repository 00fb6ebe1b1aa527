// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/npy.h"

#include <fstream>
#include <sstream>

#include "envtts/common.h"

namespace envtts {

void save_npy(const std::string& path, const torch::Tensor& array) {
  auto t = array.to(torch::kFloat32).contiguous();
  std::ostringstream shape;
  shape << "(";
  for (int64_t i = 0; i < t.dim(); ++i) shape << t.size(i) << (t.dim() == 1 ? "," : (i + 1 < t.dim() ? ", " : ""));
  shape << ")";
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape.str() + ", }";
  // Pad so that magic + header is a multiple of 64 bytes, newline-terminated.
  size_t unpadded = 10 + header.size() + 1;
  header += std::string((64 - unpadded % 64) % 64, ' ');
  header += '\n';

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_npy: cannot open " + path);
  const char magic[] = "\x93NUMPY\x01\x00";
  out.write(magic, 8);
  uint16_t hlen = uint16_t(header.size());
  char lenb[2] = {char(hlen & 0xff), char(hlen >> 8)};
  out.write(lenb, 2);
  out.write(header.data(), header.size());
  out.write(reinterpret_cast<const char*>(t.data_ptr<float>()), t.numel() * 4);
  if (!out) throw IoError("save_npy: write failed for " + path);
}

torch::Tensor load_npy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_npy: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 6) != "\x93NUMPY") throw IoError("load_npy: bad magic in " + path);
  char lenb[2];
  in.read(lenb, 2);
  uint16_t hlen = uint8_t(lenb[0]) | (uint16_t(uint8_t(lenb[1])) << 8);
  std::string header(hlen, '\0');
  in.read(header.data(), hlen);
  if (header.find("'<f4'") == std::string::npos)
    throw IoError("load_npy: only float32 arrays supported: " + path);
  auto lp = header.find('('), rp = header.find(')');
  if (lp == std::string::npos || rp == std::string::npos)
    throw IoError("load_npy: malformed header in " + path);
  std::vector<int64_t> shape;
  std::stringstream ss(header.substr(lp + 1, rp - lp - 1));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.find_first_not_of(" \t") == std::string::npos) continue;
    shape.push_back(std::stoll(tok));
  }
  int64_t numel = 1;
  for (auto s : shape) numel *= s;
  auto t = torch::empty(shape.empty() ? std::vector<int64_t>{1} : shape, torch::kFloat32);
  in.read(reinterpret_cast<char*>(t.data_ptr<float>()), numel * 4);
  if (!in) throw IoError("load_npy: truncated data in " + path);
  return t;
}

}  // namespace envtts
