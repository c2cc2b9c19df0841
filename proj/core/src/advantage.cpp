#include "rlv/advantage.hpp"

#include <cmath>
#include <stdexcept>

namespace rlv {

std::vector<double> grpo_advantages(std::span<const double> rewards) {
  std::size_t n = rewards.size();
  if (n < 2) throw std::invalid_argument("grpo_advantages: group size must be >= 2");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(n);
  double denom = std::sqrt(var) + 1e-8;
  std::vector<double> adv(n);
  for (std::size_t i = 0; i < n; ++i) adv[i] = (rewards[i] - mean) / denom;
  return adv;
}

std::vector<double> rloo_advantages(std::span<const double> rewards) {
  std::size_t n = rewards.size();
  if (n < 2) throw std::invalid_argument("rloo_advantages: group size must be >= 2");
  double total = 0.0;
  for (double r : rewards) total += r;
  std::vector<double> adv(n);
  for (std::size_t i = 0; i < n; ++i)
    adv[i] = rewards[i] - (total - rewards[i]) / static_cast<double>(n - 1);
  return adv;
}

double vineppo_value(const Vocab& vocab, const PolicyParams& p, const TaskInstance& task,
                     std::span<const int> partial, int k, int max_len, Rng& rng) {
  if (k < 1) throw std::invalid_argument("vineppo_value: k must be >= 1");
  if (!partial.empty() && partial.back() == kEos) {
    return static_cast<double>(reward(vocab, task, partial));
  }
  SampleOptions opt;  // temperature 1
  std::vector<int> full(partial.begin(), partial.end());
  std::size_t base = full.size();
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    Continuation c = sample_continuation(vocab, p, task, partial, max_len, opt, rng);
    full.resize(base);
    full.insert(full.end(), c.tokens.begin(), c.tokens.end());
    total += static_cast<double>(reward(vocab, task, full));
  }
  return total / static_cast<double>(k);
}

std::vector<double> vineppo_advantages(const Vocab& vocab, const PolicyParams& p,
                                       const TaskInstance& task, std::span<const int> solution,
                                       int k, int max_len, Rng& rng) {
  std::size_t len = solution.size();
  if (len == 0) throw std::invalid_argument("vineppo_advantages: empty solution");
  double r = static_cast<double>(reward(vocab, task, solution));
  // One value estimate per state; reusing them across adjacent advantages
  // makes the estimates telescope: sum of advantages == r - V(s_0).
  std::vector<double> values(len + 1, 0.0);
  for (std::size_t t = 0; t < len; ++t)
    values[t] = vineppo_value(vocab, p, task, solution.subspan(0, t), k, max_len, rng);
  std::vector<double> adv(len);
  for (std::size_t t = 0; t < len; ++t) {
    double rt = (t + 1 == len) ? r : 0.0;
    adv[t] = rt + values[t + 1] - values[t];
  }
  return adv;
}

std::vector<double> gae_advantages(std::span<const double> token_rewards,
                                   std::span<const double> values, double gamma, double lambda) {
  std::size_t len = token_rewards.size();
  if (values.size() != len + 1)
    throw std::invalid_argument("gae_advantages: values must have length len(rewards)+1");
  std::vector<double> adv(len);
  double carry = 0.0;
  for (std::size_t t = len; t-- > 0;) {
    double delta = token_rewards[t] + gamma * values[t + 1] - values[t];
    carry = delta + gamma * lambda * carry;
    adv[t] = carry;
  }
  return adv;
}

}  // namespace rlv
