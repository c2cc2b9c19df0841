#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rlv/rng.hpp"
#include "rlv/vocab.hpp"

namespace rlv {

enum class Domain { kAddOnly, kMixed };

std::string_view domain_name(Domain d);
Domain parse_domain(std::string_view name);

// One arithmetic chain: prompt is "d0 op1 d1 ... opK dK SEP", ground truth is
// the left-to-right evaluation mod the vocab modulus.
struct TaskInstance {
  std::vector<int> prompt;
  int ground_truth = 0;
  int difficulty = 0;
  Domain domain = Domain::kAddOnly;
};

// One sampled attempt at a task.
struct Episode {
  TaskInstance task;
  std::vector<int> solution;
  std::vector<double> old_logprobs;  // behavior-policy logprobs, untempered
  int reward = 0;
  int group_id = 0;
};

// Pure function of (difficulty, domain, seed).
TaskInstance generate_task(const Vocab& v, int difficulty, Domain domain, std::uint64_t seed);
TaskInstance generate_task(const Vocab& v, int difficulty, Domain domain, Rng& rng);

// Left-to-right evaluation of a well-formed prompt (without trailing SEP it
// is still accepted); used as the independent check that generated tasks
// carry the right ground truth.
int eval_chain(const Vocab& v, std::span<const int> prompt);

// Digit run immediately after the last ANSWER, decoded positionally mod m.
std::optional<int> extract_answer(const Vocab& v, std::span<const int> solution);

// 1 if the extracted answer equals ground truth, else 0.
int reward(const Vocab& v, const TaskInstance& task, std::span<const int> solution);

// prompt + solution + VERIFY; the verifier reads YES/NO at the next position.
std::vector<int> make_verification_input(const TaskInstance& task, std::span<const int> solution);

}  // namespace rlv
