#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rlv/rng.hpp"
#include "rlv/verifier.hpp"
#include "rlv/vocab.hpp"

namespace rlv {

enum class VoteStrategy { kMajority, kWeighted };

// Result of a parallel-sampling vote. Solutions without an extractable
// answer carry no mass; if none has one the outcome is the NO_ANSWER
// sentinel (has_answer = false).
struct VoteOutcome {
  bool has_answer = false;
  int answer = -1;
  double winning_mass = 0.0;  // count for majority, score mass for weighted
  double total_mass = 0.0;    // summed over all answered solutions
  VoteStrategy strategy = VoteStrategy::kMajority;
  std::vector<std::pair<int, double>> per_answer_mass;  // ascending by answer

  double confidence() const {
    return has_answer && total_mass > 0.0 ? winning_mass / total_mass : 0.0;
  }
};

// Most frequent answer; ties broken by higher cumulative score, then by
// smaller answer value. Throws std::invalid_argument on an empty list.
VoteOutcome majority_vote(std::span<const ScoredSolution> solutions);

// Answer with the highest summed verifier score; same tie-break and
// NO_ANSWER rules as majority_vote.
VoteOutcome weighted_vote(std::span<const ScoredSolution> solutions);

// Index of the highest-scored solution, earliest index on ties.
std::size_t best_of_n_index(std::span<const ScoredSolution> solutions);
const ScoredSolution& best_of_n(std::span<const ScoredSolution> solutions);

// Unbiased estimate of E[value of the top-scored element of a uniformly
// random size-k subset], given values already sorted by decreasing score.
// Computed via the stable weight recurrence w_0 = k/N,
// w_{i+1} = w_i * (N-i-k)/(N-i-1)  (equivalent to C(N-i-1,k-1)/C(N,k)),
// which never forms a large binomial. k=1 gives the mean, k=N gives
// sorted_values[0].
double best_of_k_estimate(std::span<const double> sorted_values, int k);

// Convenience: sorts by (score desc, index asc) and runs the estimator on
// the correctness flags.
double best_of_k_estimate(std::span<const ScoredSolution> pool, int k);

// Token budget for one forced generation; C is spliced between the
// truncated draft and the continuation.
struct BudgetSpec {
  int budget = 0;               // total token budget L
  int buffer = 0;               // reserved tokens b, 0 < b < L
  std::vector<int> conclusion;  // C, default {STEP, ANSWER}

  void validate() const;  // throws std::invalid_argument
};
BudgetSpec make_budget_spec(int budget, int buffer);

// Backend-agnostic generation primitive: complete `context` with at most
// max_new tokens.
using GenerateFn =
    std::function<std::vector<int>(std::span<const int> context, int max_new)>;

struct BudgetResult {
  std::vector<int> tokens;
  bool budget_exhausted = false;
};

// Two-phase budget-forced generation:
//   G0 = generate(prompt, L-b); T = G0 cut after its last STEP (no STEP
//   keeps all of G0); result = T + C + generate(prompt+T+C, L-|T|-|C|).
// If T + C already fills the budget the result is truncated to L and
// flagged budget_exhausted. |tokens| <= L always.
BudgetResult budget_force(const GenerateFn& generate, std::span<const int> prompt,
                          const BudgetSpec& spec);

struct AdaptiveResult {
  VoteOutcome outcome;
  int length_used = 0;
  double confidence = 0.0;
  bool threshold_unmet = false;
};

// Walk an increasing budget ladder; at each rung draw that rung's scored
// solutions, take the weighted vote, and stop once confidence
// (winning mass / answered mass) reaches tau. Exhausting the ladder
// returns the last rung flagged threshold_unmet. tau <= 0 accepts the
// first rung.
AdaptiveResult adaptive_length_select(
    const std::function<std::vector<ScoredSolution>(int budget)>& sample_at,
    std::span<const int> ladder, double tau);

enum class Strategy { kMajorityVote, kWeightedVote, kBestOfN };
std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct SweepRow {
  Strategy strategy;
  int n = 0;
  double accuracy = 0.0;  // mean over tasks
  double stderr_ = 0.0;   // standard error of that mean
};

// Accuracy of each strategy at each N, from one fixed pool of scored
// solutions per task (pools.size() == ground_truths.size(), every pool at
// least max(n_grid) deep). Best-of-N uses the unbiased estimator on the
// full pool; votes at n == 1 average over singletons exactly, larger n are
// estimated from `trials` random subsamples per task.
std::vector<SweepRow> sweep(std::span<const std::vector<ScoredSolution>> pools,
                            std::span<const int> ground_truths,
                            std::span<const Strategy> strategies,
                            std::span<const int> n_grid, int trials, Rng& rng);

}  // namespace rlv
