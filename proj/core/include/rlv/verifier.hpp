#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rlv/policy.hpp"
#include "rlv/task.hpp"

namespace rlv {

struct ScoredSolution {
  std::vector<int> solution;
  double score = 0.0;
  std::optional<int> answer;
  int correct = 0;
};

// P(YES) at the position after VERIFY — raw softmax mass over the full
// vocabulary, deliberately not renormalized over {YES, NO}.
double score_generative(const PolicyParams& p, const TaskInstance& task,
                        std::span<const int> solution);

// sigmoid(u_bce . features(prompt + solution + VERIFY))
double score_bce_head(const PolicyParams& p, const TaskInstance& task,
                      std::span<const int> solution);

// u_reg . features(...), clamped to [0, 1]
double score_reg_head(const PolicyParams& p, const TaskInstance& task,
                      std::span<const int> solution);

enum class ValueAggregate { kMean, kLast };

// Value head over the states entering each solution token, aggregated.
// Unbounded; pair with the median threshold in verifier_accuracy.
double score_ppo_value(const PolicyParams& p, const TaskInstance& task,
                       std::span<const int> solution, ValueAggregate agg);

using Scorer = std::function<double(const TaskInstance&, std::span<const int>)>;

enum class ScorerKind { kGenerative, kBceHead, kRegHead, kPpoValueMean, kPpoValueLast };
std::string_view scorer_kind_name(ScorerKind k);
ScorerKind parse_scorer_kind(std::string_view name);
Scorer make_scorer(ScorerKind kind, const PolicyParams& p);

enum class ThresholdMode { kFixed, kMedian };  // fixed 0.5 vs probe median

// Fraction of (score > threshold) == (label == 1) over a class-balanced
// probe; throws std::invalid_argument if the classes are not balanced.
double verifier_accuracy(std::span<const double> scores, std::span<const int> labels,
                         ThresholdMode mode);

struct ProbeExample {
  TaskInstance task;
  std::vector<int> solution;
  int label = 0;  // 1 = correct
};

// Balanced probe from current-policy samples at temperature 1: label by
// reward, subsample the majority class to the minority count. If no
// incorrect sample exists, negatives are synthesized by rewriting a correct
// solution's answer to a uniformly random wrong digit. Returns an empty
// probe when there is no correct sample to pair.
std::vector<ProbeExample> build_balanced_probe(const Vocab& vocab, const PolicyParams& p,
                                               std::span<const TaskInstance> tasks,
                                               int samples_per_task, int max_len, Rng& rng);

// Probe accuracy with the scorer's natural threshold (median for the
// unbounded value head, 0.5 otherwise); 0.5 on an empty probe.
double probe_accuracy(const std::vector<ProbeExample>& probe, const Scorer& scorer,
                      ThresholdMode mode);

// N solutions from generating_params at the given temperature, scored with
// scoring_params' generative pathway.
std::vector<ScoredSolution> cross_score(const Vocab& vocab, const PolicyParams& scoring_params,
                                        const PolicyParams& generating_params,
                                        const TaskInstance& task, int n, int max_len,
                                        double temperature, Rng& rng);

}  // namespace rlv
