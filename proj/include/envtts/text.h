// Copyright 2026 envtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ENVTTS_TEXT_H_
#define ENVTTS_TEXT_H_

#include <string>
#include <vector>

namespace envtts {
namespace text {

// Closed grapheme inventory. Id 0 is the blank token interspersed between
// symbols; ids 1..N-1 cover the printable symbols below.
constexpr int kBlankId = 0;

const std::string& symbol_inventory();  // characters, index i -> id i+1
int inventory_size();                   // symbols + blank

// Lowercase, collapse runs of whitespace to single spaces, trim, and drop
// characters outside the inventory.
std::string normalize(const std::string& text);

// Normalized text to ids with blanks interspersed:
// "ab" -> [blank, a, blank, b, blank]. Throws InvalidInput if nothing
// survives normalization.
std::vector<int> text_to_phonemes(const std::string& text);

// Inverse of the id mapping (blanks dropped).
std::string phonemes_to_text(const std::vector<int>& ids);

}  // namespace text
}  // namespace envtts

#endif  // ENVTTS_TEXT_H_
