#include "rlv/vocab.hpp"

#include <array>
#include <stdexcept>

namespace rlv {
namespace {

constexpr std::array<std::string_view, kVocabSize> kNames = {
    "0", "1", "2", "3", "4", "5", "6", "7", "8", "9",
    "+", "-", "*",
    "SEP", "STEP", "ANSWER", "EOS", "VERIFY", "YES", "NO", "PAD",
};

}  // namespace

Vocab::Vocab(int m) : modulus(m) {
  if (m < 1 || m > 10)
    throw std::invalid_argument("modulus must be in [1, 10] (single-digit operands)");
}

int Vocab::digit(int d) const {
  if (d < 0 || d >= modulus) throw std::invalid_argument("digit out of range");
  return d;
}

int Vocab::apply_op(int op, int a, int b) const {
  switch (op) {
    case kPlus:
      return (a + b) % modulus;
    case kMinus:
      return ((a - b) % modulus + modulus) % modulus;
    case kTimes:
      return (a * b) % modulus;
    default:
      throw std::invalid_argument("not an operator token");
  }
}

std::string_view token_name(int token) {
  if (token < 0 || token >= kVocabSize) throw std::invalid_argument("token id out of range");
  return kNames[static_cast<std::size_t>(token)];
}

int parse_token(std::string_view name) {
  for (int t = 0; t < kVocabSize; ++t)
    if (kNames[static_cast<std::size_t>(t)] == name) return t;
  throw std::invalid_argument("unknown token name: " + std::string(name));
}

std::string detokenize(const int* tokens, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out.push_back(' ');
    out += token_name(tokens[i]);
  }
  return out;
}

void tokenize_into(std::string_view text, std::vector<int>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) out.push_back(parse_token(text.substr(i, j - i)));
    i = j;
  }
}

}  // namespace rlv
