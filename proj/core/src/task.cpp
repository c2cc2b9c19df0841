#include "rlv/task.hpp"

#include <stdexcept>

namespace rlv {

std::string_view domain_name(Domain d) {
  return d == Domain::kAddOnly ? "ADD_ONLY" : "MIXED";
}

Domain parse_domain(std::string_view name) {
  if (name == "ADD_ONLY") return Domain::kAddOnly;
  if (name == "MIXED") return Domain::kMixed;
  throw std::invalid_argument("unknown domain: " + std::string(name));
}

TaskInstance generate_task(const Vocab& v, int difficulty, Domain domain, std::uint64_t seed) {
  Rng rng(seed);
  rng.next_u64();  // decouple nearby seeds
  return generate_task(v, difficulty, domain, rng);
}

TaskInstance generate_task(const Vocab& v, int difficulty, Domain domain, Rng& rng) {
  if (difficulty < 1) throw std::invalid_argument("difficulty must be >= 1");
  TaskInstance t;
  t.difficulty = difficulty;
  t.domain = domain;
  t.prompt.reserve(static_cast<std::size_t>(2 * difficulty + 2));
  int acc = rng.uniform_int(0, v.modulus - 1);
  t.prompt.push_back(v.digit(acc));
  for (int k = 0; k < difficulty; ++k) {
    int op = kPlus;
    if (domain == Domain::kMixed) {
      static constexpr int kOps[3] = {kPlus, kMinus, kTimes};
      op = kOps[rng.uniform_int(0, 2)];
    }
    int d = rng.uniform_int(0, v.modulus - 1);
    t.prompt.push_back(op);
    t.prompt.push_back(v.digit(d));
    acc = v.apply_op(op, acc, d);
  }
  t.prompt.push_back(kSep);
  t.ground_truth = acc;
  return t;
}

int eval_chain(const Vocab& v, std::span<const int> prompt) {
  std::size_t n = prompt.size();
  if (n && prompt[n - 1] == kSep) --n;
  if (n == 0 || !is_digit_token(prompt[0]))
    throw std::invalid_argument("malformed chain: must start with a digit");
  int acc = prompt[0];
  std::size_t i = 1;
  while (i < n) {
    if (i + 1 >= n || !is_op_token(prompt[i]) || !is_digit_token(prompt[i + 1]))
      throw std::invalid_argument("malformed chain: expected op digit");
    acc = v.apply_op(prompt[i], acc, prompt[i + 1]);
    i += 2;
  }
  return acc;
}

std::optional<int> extract_answer(const Vocab& v, std::span<const int> solution) {
  std::size_t start = solution.size();
  for (std::size_t i = solution.size(); i-- > 0;) {
    if (solution[i] == kAnswer) {
      start = i + 1;
      break;
    }
  }
  if (start >= solution.size()) return std::nullopt;
  int val = 0;
  bool any = false;
  for (std::size_t i = start; i < solution.size() && is_digit_token(solution[i]); ++i) {
    val = (val * 10 + solution[i]) % v.modulus;
    any = true;
  }
  if (!any) return std::nullopt;
  return val;
}

int reward(const Vocab& v, const TaskInstance& task, std::span<const int> solution) {
  auto ans = extract_answer(v, solution);
  return ans && *ans == task.ground_truth ? 1 : 0;
}

std::vector<int> make_verification_input(const TaskInstance& task, std::span<const int> solution) {
  std::vector<int> out;
  out.reserve(task.prompt.size() + solution.size() + 1);
  out.insert(out.end(), task.prompt.begin(), task.prompt.end());
  out.insert(out.end(), solution.begin(), solution.end());
  out.push_back(kVerify);
  return out;
}

}  // namespace rlv
