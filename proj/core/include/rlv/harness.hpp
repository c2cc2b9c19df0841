#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rlv/artifacts.hpp"
#include "rlv/backend.hpp"
#include "rlv/config.hpp"
#include "rlv/scaling.hpp"
#include "rlv/trainer.hpp"
#include "rlv/verifier.hpp"

namespace rlv {

// train command: merge config sources, run, persist artifacts under
// out_root/<run_id>/.
struct TrainOutcome {
  RunConfig cfg;
  std::string id;
  RunPaths paths;
  TrainResult result;
};
TrainOutcome run_train(std::span<const std::vector<KeyValue>> sources,
                       const std::string& out_root);

// load_params with corrupt files surfaced as ArtifactError; fills the vocab
// the params were trained with.
PolicyParams load_params_artifact(const std::string& path, Vocab& vocab_out);

// Eval-set shape shared by the eval / sweep-n / budget-demo commands.
struct EvalSpec {
  int tasks = 64;
  int samples = 16;  // solutions per task
  int difficulty = 2;
  Domain domain = Domain::kAddOnly;
  double temperature = 1.0;
  int max_len = 10;
  std::uint64_t seed = 1;
  ScorerKind scorer = ScorerKind::kGenerative;
  int trials = 200;  // vote subsampling trials per (task, n)

  void validate() const;  // throws ConfigError
};

// A generated eval set with one scored solution pool per task.
struct EvalPools {
  std::vector<TaskInstance> tasks;
  std::vector<std::vector<ScoredSolution>> pools;
  std::vector<int> truths;
};
EvalPools build_eval_pools(const Vocab& vocab, const PolicyParams& params,
                           const EvalSpec& spec);

struct EvalReport {
  double pass1 = 0.0;         // mean single-sample correctness over the pools
  double verifier_acc = 0.0;  // balanced-probe accuracy of spec.scorer
  std::vector<SweepRow> strategies;  // each strategy at n = spec.samples
};
EvalReport run_eval(const Vocab& vocab, const PolicyParams& params, const EvalSpec& spec);
std::string render_eval(const EvalReport& report);

// sweep-n command: one pool of spec.samples per task, every strategy at
// every n in the grid (n <= spec.samples).
std::vector<SweepRow> run_sweep_n(const Vocab& vocab, const PolicyParams& params,
                                  const EvalSpec& spec, std::span<const int> n_grid,
                                  std::span<const Strategy> strategies);
std::string sweep_csv(std::span<const SweepRow> rows);

// Mints one generation backend per (task, rung) stream tag, so forced
// generation is deterministic for the builtin policy and swappable for the
// remote endpoint. Captured references must outlive the factory.
using BackendFactory =
    std::function<std::unique_ptr<GenerationBackend>(std::uint64_t stream_tag)>;
BackendFactory builtin_backend_factory(const PolicyParams& params, double temperature,
                                       std::uint64_t seed);
BackendFactory remote_backend_factory(const RemoteSpec& spec, double temperature);

// budget-demo command: per-budget weighted-vote accuracy with budget-forced
// generation, plus one adaptive-length row over the same ladder. The rung
// pools are shared between the fixed-budget rows and the adaptive walk, so
// tau = 0 reproduces the first row exactly.
struct BudgetRow {
  int budget = 0;
  double accuracy = 0.0;
  double mean_tokens = 0.0;  // mean forced-generation length
};
struct BudgetReport {
  std::vector<BudgetRow> budgets;
  double adaptive_accuracy = 0.0;
  double adaptive_mean_length = 0.0;
  double adaptive_mean_confidence = 0.0;
  double threshold_unmet_rate = 0.0;
  double tau = 0.0;
};
BudgetReport run_budget_demo(const Vocab& vocab, const PolicyParams& params,
                             const EvalSpec& spec, std::span<const int> budgets,
                             int buffer, double tau, const BackendFactory& factory);
std::string render_budget(const BudgetReport& report);

// verify-probe command: balanced probe assembled from a logged episode set
// (optionally only the last `tail_iterations` iterations), scored by each
// requested variant. Reasoner accuracy is the mean logged reward of the
// selection; value-head variants threshold at the probe median.
struct ProbeRow {
  ScorerKind kind = ScorerKind::kGenerative;
  double reasoner_pass1 = 0.0;
  double verifier_acc = 0.0;
  int probe_size = 0;
};
std::vector<ProbeRow> run_verify_probe(const Vocab& vocab, const PolicyParams& params,
                                       std::span<const EpisodeRecord> log,
                                       std::span<const ScorerKind> kinds,
                                       int tail_iterations);
std::string render_probe(std::span<const ProbeRow> rows);

}  // namespace rlv
