#pragma once

#include <span>
#include <vector>

#include "rlv/policy.hpp"
#include "rlv/task.hpp"

namespace rlv {

// Group-relative advantages: (r_i - mean) / (population std + 1e-8).
// A zero-variance group yields all-zero advantages.
std::vector<double> grpo_advantages(std::span<const double> rewards);

// Leave-one-out advantages: r_i - mean of the other K-1 rewards.
std::vector<double> rloo_advantages(std::span<const double> rewards);

// Monte Carlo value of the state (prompt + partial solution): mean reward of
// k completions sampled from the current policy at temperature 1. A partial
// already ending in EOS is scored as-is.
double vineppo_value(const Vocab& vocab, const PolicyParams& p, const TaskInstance& task,
                     std::span<const int> partial, int k, int max_len, Rng& rng);

// Per-token advantages r_t + V(s_{t+1}) - V(s_t) with V estimated by
// vineppo_value once per state (post-terminal state has value 0); only the
// final token carries the episode reward.
std::vector<double> vineppo_advantages(const Vocab& vocab, const PolicyParams& p,
                                       const TaskInstance& task, std::span<const int> solution,
                                       int k, int max_len, Rng& rng);

// Generalized advantage estimation. values has length len(rewards) + 1 with
// the caller's terminal value last.
std::vector<double> gae_advantages(std::span<const double> token_rewards,
                                   std::span<const double> values, double gamma, double lambda);

}  // namespace rlv
