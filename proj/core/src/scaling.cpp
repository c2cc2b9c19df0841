#include "rlv/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rlv {

namespace {

VoteOutcome vote(std::span<const ScoredSolution> solutions, VoteStrategy strategy) {
  if (solutions.empty()) throw std::invalid_argument("vote: empty solution list");
  // (answer, primary mass, cumulative score); primary is count or score mass
  std::vector<std::pair<int, std::pair<double, double>>> tally;
  for (const ScoredSolution& s : solutions) {
    if (!s.answer) continue;
    auto it = std::find_if(tally.begin(), tally.end(),
                           [&](const auto& t) { return t.first == *s.answer; });
    if (it == tally.end())
      it = tally.insert(tally.end(), {*s.answer, {0.0, 0.0}});
    it->second.first += strategy == VoteStrategy::kMajority ? 1.0 : s.score;
    it->second.second += s.score;
  }
  VoteOutcome out;
  out.strategy = strategy;
  if (tally.empty()) return out;  // NO_ANSWER
  std::sort(tally.begin(), tally.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::size_t win = 0;
  for (std::size_t i = 1; i < tally.size(); ++i) {
    const auto& cand = tally[i].second;
    const auto& best = tally[win].second;
    if (cand.first > best.first ||
        (cand.first == best.first && cand.second > best.second))
      win = i;  // ascending answer order makes "smaller answer" the final tie-break
  }
  out.has_answer = true;
  out.answer = tally[win].first;
  out.winning_mass = tally[win].second.first;
  for (const auto& t : tally) {
    out.total_mass += t.second.first;
    out.per_answer_mass.emplace_back(t.first, t.second.first);
  }
  return out;
}

}  // namespace

VoteOutcome majority_vote(std::span<const ScoredSolution> solutions) {
  return vote(solutions, VoteStrategy::kMajority);
}

VoteOutcome weighted_vote(std::span<const ScoredSolution> solutions) {
  return vote(solutions, VoteStrategy::kWeighted);
}

std::size_t best_of_n_index(std::span<const ScoredSolution> solutions) {
  if (solutions.empty()) throw std::invalid_argument("best_of_n: empty solution list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < solutions.size(); ++i)
    if (solutions[i].score > solutions[best].score) best = i;
  return best;
}

const ScoredSolution& best_of_n(std::span<const ScoredSolution> solutions) {
  return solutions[best_of_n_index(solutions)];
}

double best_of_k_estimate(std::span<const double> sorted_values, int k) {
  std::size_t n = sorted_values.size();
  if (n == 0) throw std::invalid_argument("best_of_k_estimate: empty values");
  if (k < 1 || static_cast<std::size_t>(k) > n)
    throw std::invalid_argument("best_of_k_estimate: k out of range");
  double nn = static_cast<double>(n);
  double w = static_cast<double>(k) / nn;  // P(index 0 is the subset's top)
  double total = 0.0;
  for (std::size_t i = 0; static_cast<std::size_t>(k) + i <= n; ++i) {
    total += w * sorted_values[i];
    double ii = static_cast<double>(i);
    w *= (nn - ii - static_cast<double>(k)) / (nn - ii - 1.0);
  }
  return total;
}

double best_of_k_estimate(std::span<const ScoredSolution> pool, int k) {
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pool[a].score > pool[b].score;
  });
  std::vector<double> values(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    values[i] = static_cast<double>(pool[order[i]].correct);
  return best_of_k_estimate(values, k);
}

void BudgetSpec::validate() const {
  if (!(buffer > 0 && buffer < budget))
    throw std::invalid_argument("budget spec: need 0 < buffer < budget");
}

BudgetSpec make_budget_spec(int budget, int buffer) {
  BudgetSpec spec{budget, buffer, {kStep, kAnswer}};
  spec.validate();
  return spec;
}

BudgetResult budget_force(const GenerateFn& generate, std::span<const int> prompt,
                          const BudgetSpec& spec) {
  spec.validate();
  std::size_t budget = static_cast<std::size_t>(spec.budget);
  std::vector<int> draft = generate(prompt, spec.budget - spec.buffer);
  if (draft.size() > budget - static_cast<std::size_t>(spec.buffer))
    draft.resize(budget - static_cast<std::size_t>(spec.buffer));
  std::size_t keep = draft.size();  // cut after the last STEP; none keeps all
  for (std::size_t i = draft.size(); i-- > 0;)
    if (draft[i] == kStep) {
      keep = i + 1;
      break;
    }
  draft.resize(keep);

  BudgetResult out;
  out.tokens = std::move(draft);
  out.tokens.insert(out.tokens.end(), spec.conclusion.begin(), spec.conclusion.end());
  if (out.tokens.size() >= budget) {
    out.tokens.resize(budget);
    out.budget_exhausted = true;
    return out;
  }
  std::vector<int> ctx(prompt.begin(), prompt.end());
  ctx.insert(ctx.end(), out.tokens.begin(), out.tokens.end());
  int room = spec.budget - static_cast<int>(out.tokens.size());
  std::vector<int> cont = generate(ctx, room);
  if (cont.size() > static_cast<std::size_t>(room)) cont.resize(static_cast<std::size_t>(room));
  out.tokens.insert(out.tokens.end(), cont.begin(), cont.end());
  return out;
}

AdaptiveResult adaptive_length_select(
    const std::function<std::vector<ScoredSolution>(int budget)>& sample_at,
    std::span<const int> ladder, double tau) {
  if (ladder.empty()) throw std::invalid_argument("adaptive_length_select: empty ladder");
  for (std::size_t i = 1; i < ladder.size(); ++i)
    if (ladder[i] <= ladder[i - 1])
      throw std::invalid_argument("adaptive_length_select: ladder must strictly increase");
  AdaptiveResult res;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    std::vector<ScoredSolution> sols = sample_at(ladder[i]);
    res.outcome = weighted_vote(sols);
    res.length_used = ladder[i];
    res.confidence = res.outcome.confidence();
    if (res.confidence >= tau) return res;
  }
  res.threshold_unmet = true;
  return res;
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kMajorityVote: return "MAJORITY";
    case Strategy::kWeightedVote: return "WEIGHTED";
    case Strategy::kBestOfN: return "BEST_OF_N";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "MAJORITY") return Strategy::kMajorityVote;
  if (name == "WEIGHTED") return Strategy::kWeightedVote;
  if (name == "BEST_OF_N") return Strategy::kBestOfN;
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

namespace {

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stderr_of(std::span<const double> xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double var = ss / static_cast<double>(xs.size() - 1);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

// Exact vote accuracy at n=1: every singleton subset in turn.
double singleton_vote_accuracy(const std::vector<ScoredSolution>& pool, int truth) {
  double hits = 0.0;
  for (const ScoredSolution& s : pool)
    hits += (s.answer && *s.answer == truth) ? 1.0 : 0.0;
  return hits / static_cast<double>(pool.size());
}

double subsampled_vote_accuracy(const std::vector<ScoredSolution>& pool, int truth, int n,
                                VoteStrategy strategy, int trials, Rng& rng) {
  if (static_cast<std::size_t>(n) == pool.size()) {  // every subset is the whole pool
    VoteOutcome o = strategy == VoteStrategy::kMajority ? majority_vote(pool)
                                                        : weighted_vote(pool);
    return (o.has_answer && o.answer == truth) ? 1.0 : 0.0;
  }
  std::vector<std::size_t> base(pool.size());
  std::iota(base.begin(), base.end(), std::size_t{0});
  std::vector<std::size_t> idx;
  std::vector<ScoredSolution> subset(static_cast<std::size_t>(n));
  double hits = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    idx = base;  // partial Fisher-Yates draw of n distinct indices
    for (int t = 0; t < n; ++t) {
      std::size_t j = static_cast<std::size_t>(t) +
                      rng.next_below(idx.size() - static_cast<std::size_t>(t));
      std::swap(idx[static_cast<std::size_t>(t)], idx[j]);
      subset[static_cast<std::size_t>(t)] = pool[idx[static_cast<std::size_t>(t)]];
    }
    VoteOutcome o = strategy == VoteStrategy::kMajority ? majority_vote(subset)
                                                        : weighted_vote(subset);
    hits += (o.has_answer && o.answer == truth) ? 1.0 : 0.0;
  }
  return hits / static_cast<double>(trials);
}

}  // namespace

std::vector<SweepRow> sweep(std::span<const std::vector<ScoredSolution>> pools,
                            std::span<const int> ground_truths,
                            std::span<const Strategy> strategies,
                            std::span<const int> n_grid, int trials, Rng& rng) {
  if (pools.empty() || pools.size() != ground_truths.size())
    throw std::invalid_argument("sweep: pools and ground truths must align");
  if (trials < 1) throw std::invalid_argument("sweep: trials must be >= 1");
  for (int n : n_grid) {
    if (n < 1) throw std::invalid_argument("sweep: n values must be >= 1");
    for (const auto& pool : pools)
      if (pool.size() < static_cast<std::size_t>(n))
        throw std::invalid_argument("sweep: pool smaller than requested n");
  }
  std::vector<SweepRow> rows;
  std::vector<double> per_task(pools.size());
  for (Strategy strat : strategies) {
    for (int n : n_grid) {
      for (std::size_t t = 0; t < pools.size(); ++t) {
        const std::vector<ScoredSolution>& pool = pools[t];
        if (strat == Strategy::kBestOfN) {
          per_task[t] = best_of_k_estimate(std::span<const ScoredSolution>(pool), n);
        } else if (n == 1) {
          per_task[t] = singleton_vote_accuracy(pool, ground_truths[t]);
        } else {
          VoteStrategy vs = strat == Strategy::kMajorityVote ? VoteStrategy::kMajority
                                                             : VoteStrategy::kWeighted;
          per_task[t] = subsampled_vote_accuracy(pool, ground_truths[t], n, vs, trials, rng);
        }
      }
      double mean = mean_of(per_task);
      rows.push_back(SweepRow{strat, n, mean, stderr_of(per_task, mean)});
    }
  }
  return rows;
}

}  // namespace rlv
