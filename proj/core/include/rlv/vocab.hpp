#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace rlv {

// Fixed token layout. Digits occupy [0, 10); everything else is structural.
inline constexpr int kPlus = 10;
inline constexpr int kMinus = 11;
inline constexpr int kTimes = 12;
inline constexpr int kSep = 13;
inline constexpr int kStep = 14;
inline constexpr int kAnswer = 15;
inline constexpr int kEos = 16;
inline constexpr int kVerify = 17;
inline constexpr int kYes = 18;
inline constexpr int kNo = 19;
inline constexpr int kPad = 20;
inline constexpr int kVocabSize = 21;

constexpr bool is_digit_token(int t) { return t >= 0 && t < 10; }
constexpr bool is_op_token(int t) { return t == kPlus || t == kMinus || t == kTimes; }

// Vocabulary plus the modulus of the arithmetic domain. Operands are single
// digit tokens, so the modulus must be in [1, 10].
struct Vocab {
  int modulus = 10;

  explicit Vocab(int m = 10);

  int digit(int d) const;               // d in [0, modulus)
  int apply_op(int op, int a, int b) const;  // left-to-right chain step, mod m
};

std::string_view token_name(int token);
int parse_token(std::string_view name);  // throws std::invalid_argument

// Space-separated names <-> token ids.
std::string detokenize(const int* tokens, std::size_t n);
template <typename Seq>
std::string detokenize(const Seq& s) {
  return detokenize(s.data(), s.size());
}
void tokenize_into(std::string_view text, std::vector<int>& out);

}  // namespace rlv
