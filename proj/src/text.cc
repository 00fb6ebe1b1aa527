// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "envtts/text.h"

#include <algorithm>
#include <cctype>

#include "envtts/common.h"

namespace envtts {
namespace text {

const std::string& symbol_inventory() {
  static const std::string symbols = " abcdefghijklmnopqrstuvwxyz'.,?!-";
  return symbols;
}

int inventory_size() { return int(symbol_inventory().size()) + 1; }

std::string normalize(const std::string& raw) {
  const std::string& inv = symbol_inventory();
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char ch : raw) {
    char c = char(std::tolower(static_cast<unsigned char>(ch)));
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (inv.find(c) == std::string::npos) continue;
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += c;
  }
  return out;
}

std::vector<int> text_to_phonemes(const std::string& raw) {
  const std::string norm = normalize(raw);
  check_input(!norm.empty(), "text_to_phonemes: empty text after normalization");
  const std::string& inv = symbol_inventory();
  std::vector<int> ids;
  ids.reserve(norm.size() * 2 + 1);
  ids.push_back(kBlankId);
  for (char c : norm) {
    ids.push_back(int(inv.find(c)) + 1);
    ids.push_back(kBlankId);
  }
  return ids;
}

std::string phonemes_to_text(const std::vector<int>& ids) {
  const std::string& inv = symbol_inventory();
  std::string out;
  for (int id : ids) {
    if (id == kBlankId) continue;
    check_input(id >= 1 && id <= int(inv.size()), "phonemes_to_text: id out of inventory");
    out += inv[size_t(id) - 1];
  }
  return out;
}

}  // namespace text
}  // namespace envtts
