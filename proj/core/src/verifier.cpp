#include "rlv/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rlv {

double score_generative(const PolicyParams& p, const TaskInstance& task,
                        std::span<const int> solution) {
  std::vector<int> input = make_verification_input(task, solution);
  Dist d = next_token_dist(p, input);
  return d[kYes];
}

double score_bce_head(const PolicyParams& p, const TaskInstance& task,
                      std::span<const int> solution) {
  std::vector<int> input = make_verification_input(task, solution);
  double z = dot_features(p.u_bce, p.fc, input);
  return 1.0 / (1.0 + std::exp(-z));
}

double score_reg_head(const PolicyParams& p, const TaskInstance& task,
                      std::span<const int> solution) {
  std::vector<int> input = make_verification_input(task, solution);
  return std::clamp(dot_features(p.u_reg, p.fc, input), 0.0, 1.0);
}

double score_ppo_value(const PolicyParams& p, const TaskInstance& task,
                       std::span<const int> solution, ValueAggregate agg) {
  if (solution.empty()) throw std::invalid_argument("score_ppo_value: empty solution");
  std::vector<int> ctx = task.prompt;
  double sum = 0.0, last = 0.0;
  for (std::size_t t = 0; t < solution.size(); ++t) {
    last = value(p, ctx);  // state entering token t
    sum += last;
    ctx.push_back(solution[t]);
  }
  return agg == ValueAggregate::kMean ? sum / static_cast<double>(solution.size()) : last;
}

std::string_view scorer_kind_name(ScorerKind k) {
  switch (k) {
    case ScorerKind::kGenerative: return "GENERATIVE";
    case ScorerKind::kBceHead: return "BCE_HEAD";
    case ScorerKind::kRegHead: return "REG_HEAD";
    case ScorerKind::kPpoValueMean: return "PPO_VALUE_MEAN";
    case ScorerKind::kPpoValueLast: return "PPO_VALUE_LAST";
  }
  return "?";
}

ScorerKind parse_scorer_kind(std::string_view name) {
  if (name == "GENERATIVE") return ScorerKind::kGenerative;
  if (name == "BCE_HEAD") return ScorerKind::kBceHead;
  if (name == "REG_HEAD") return ScorerKind::kRegHead;
  if (name == "PPO_VALUE_MEAN") return ScorerKind::kPpoValueMean;
  if (name == "PPO_VALUE_LAST") return ScorerKind::kPpoValueLast;
  throw std::invalid_argument("unknown scorer kind: " + std::string(name));
}

Scorer make_scorer(ScorerKind kind, const PolicyParams& p) {
  switch (kind) {
    case ScorerKind::kGenerative:
      return [&p](const TaskInstance& t, std::span<const int> s) {
        return score_generative(p, t, s);
      };
    case ScorerKind::kBceHead:
      return [&p](const TaskInstance& t, std::span<const int> s) {
        return score_bce_head(p, t, s);
      };
    case ScorerKind::kRegHead:
      return [&p](const TaskInstance& t, std::span<const int> s) {
        return score_reg_head(p, t, s);
      };
    case ScorerKind::kPpoValueMean:
      return [&p](const TaskInstance& t, std::span<const int> s) {
        return score_ppo_value(p, t, s, ValueAggregate::kMean);
      };
    case ScorerKind::kPpoValueLast:
      return [&p](const TaskInstance& t, std::span<const int> s) {
        return score_ppo_value(p, t, s, ValueAggregate::kLast);
      };
  }
  throw std::invalid_argument("unknown scorer kind");
}

double verifier_accuracy(std::span<const double> scores, std::span<const int> labels,
                         ThresholdMode mode) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("verifier_accuracy: size mismatch");
  if (scores.empty()) throw std::invalid_argument("verifier_accuracy: empty probe");
  std::size_t pos = 0;
  for (int l : labels) pos += (l == 1);
  if (pos * 2 != scores.size())
    throw std::invalid_argument("verifier_accuracy: probe must be class-balanced");
  double thr = 0.5;
  if (mode == ThresholdMode::kMedian) {
    std::vector<double> s(scores.begin(), scores.end());
    std::sort(s.begin(), s.end());
    std::size_t n = s.size();
    thr = (n % 2) ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    hits += ((scores[i] > thr) == (labels[i] == 1));
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

namespace {

// Rewrite the answer of a correct solution to a uniformly random wrong digit.
std::vector<int> mutate_answer(const Vocab& vocab, const TaskInstance& task,
                               std::span<const int> solution, Rng& rng) {
  std::size_t ans = solution.size();
  for (std::size_t i = solution.size(); i-- > 0;)
    if (solution[i] == kAnswer) {
      ans = i;
      break;
    }
  std::vector<int> out(solution.begin(), solution.begin() + static_cast<std::ptrdiff_t>(ans) + 1);
  if (vocab.modulus > 1) {
    int wrong = rng.uniform_int(0, vocab.modulus - 2);
    if (wrong >= task.ground_truth) ++wrong;  // uniform over digits != truth
    out.push_back(vocab.digit(wrong));
  }  // modulus 1: every digit decodes to the truth; leave the answer empty
  out.push_back(kEos);
  return out;
}

}  // namespace

std::vector<ProbeExample> build_balanced_probe(const Vocab& vocab, const PolicyParams& p,
                                               std::span<const TaskInstance> tasks,
                                               int samples_per_task, int max_len, Rng& rng) {
  SampleOptions opt;  // temperature 1
  std::vector<ProbeExample> pos, neg;
  for (const TaskInstance& task : tasks) {
    for (int s = 0; s < samples_per_task; ++s) {
      Episode e = sample_solution(vocab, p, task, max_len, opt, rng);
      (e.reward ? pos : neg).push_back(ProbeExample{task, std::move(e.solution), e.reward});
    }
  }
  if (pos.empty()) return {};
  if (neg.empty()) {
    for (const ProbeExample& x : pos)
      neg.push_back(ProbeExample{x.task, mutate_answer(vocab, x.task, x.solution, rng), 0});
  }
  std::size_t m = std::min(pos.size(), neg.size());
  std::vector<ProbeExample> probe;
  probe.reserve(2 * m);
  for (std::size_t i = 0; i < m; ++i) probe.push_back(std::move(pos[i]));
  for (std::size_t i = 0; i < m; ++i) probe.push_back(std::move(neg[i]));
  return probe;
}

double probe_accuracy(const std::vector<ProbeExample>& probe, const Scorer& scorer,
                      ThresholdMode mode) {
  if (probe.empty()) return 0.5;
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(probe.size());
  labels.reserve(probe.size());
  for (const ProbeExample& x : probe) {
    scores.push_back(scorer(x.task, x.solution));
    labels.push_back(x.label);
  }
  return verifier_accuracy(scores, labels, mode);
}

std::vector<ScoredSolution> cross_score(const Vocab& vocab, const PolicyParams& scoring_params,
                                        const PolicyParams& generating_params,
                                        const TaskInstance& task, int n, int max_len,
                                        double temperature, Rng& rng) {
  if (n < 1) throw std::invalid_argument("cross_score: n must be >= 1");
  SampleOptions opt;
  opt.temperature = temperature;
  std::vector<ScoredSolution> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Episode e = sample_solution(vocab, generating_params, task, max_len, opt, rng);
    ScoredSolution s;
    s.score = score_generative(scoring_params, task, e.solution);
    s.answer = extract_answer(vocab, e.solution);
    s.correct = e.reward;
    s.solution = std::move(e.solution);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace rlv
