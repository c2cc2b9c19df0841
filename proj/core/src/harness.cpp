#include "rlv/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace rlv {

namespace {

std::string fmt(double x, int places = 4) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::fixed, places);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

TrainOutcome run_train(std::span<const std::vector<KeyValue>> sources,
                       const std::string& out_root) {
  TrainOutcome out;
  out.cfg = run_config_from(sources);
  out.id = run_id(out.cfg);
  out.result = train(out.cfg);
  out.paths = write_run_artifacts(out_root, out.cfg, out.result);
  return out;
}

PolicyParams load_params_artifact(const std::string& path, Vocab& vocab_out) {
  try {
    return load_params(path, &vocab_out);
  } catch (const std::exception& e) {
    throw ArtifactError("params file " + path + ": " + e.what());
  }
}

void EvalSpec::validate() const {
  auto fail = [](const char* msg) { throw ConfigError(msg); };
  if (tasks < 1) fail("eval: tasks must be >= 1");
  if (samples < 1) fail("eval: samples must be >= 1");
  if (difficulty < 1) fail("eval: difficulty must be >= 1");
  if (!(temperature > 0.0)) fail("eval: temperature must be positive");
  if (max_len < 1) fail("eval: max_len must be >= 1");
  if (trials < 1) fail("eval: trials must be >= 1");
}

EvalPools build_eval_pools(const Vocab& vocab, const PolicyParams& params,
                           const EvalSpec& spec) {
  spec.validate();
  Rng root(spec.seed);
  Rng task_rng = root.fork(1);
  Rng sample_rng = root.fork(2);
  Scorer scorer = make_scorer(spec.scorer, params);
  SampleOptions opt;
  opt.temperature = spec.temperature;

  EvalPools out;
  for (int t = 0; t < spec.tasks; ++t) {
    TaskInstance task = generate_task(vocab, spec.difficulty, spec.domain, task_rng);
    std::vector<ScoredSolution> pool;
    pool.reserve(static_cast<std::size_t>(spec.samples));
    for (int s = 0; s < spec.samples; ++s) {
      Episode e = sample_solution(vocab, params, task, spec.max_len, opt, sample_rng);
      ScoredSolution sol;
      sol.score = scorer(task, e.solution);
      sol.answer = extract_answer(vocab, e.solution);
      sol.correct = e.reward;
      sol.solution = std::move(e.solution);
      pool.push_back(std::move(sol));
    }
    out.truths.push_back(task.ground_truth);
    out.tasks.push_back(std::move(task));
    out.pools.push_back(std::move(pool));
  }
  return out;
}

EvalReport run_eval(const Vocab& vocab, const PolicyParams& params, const EvalSpec& spec) {
  EvalPools ev = build_eval_pools(vocab, params, spec);
  Rng root(spec.seed);
  Rng probe_rng = root.fork(3);
  Rng trial_rng = root.fork(4);

  EvalReport report;
  double hits = 0.0, total = 0.0;
  for (const auto& pool : ev.pools)
    for (const ScoredSolution& s : pool) {
      hits += static_cast<double>(s.correct);
      total += 1.0;
    }
  report.pass1 = hits / total;

  std::vector<ProbeExample> probe =
      build_balanced_probe(vocab, params, ev.tasks, 2, spec.max_len, probe_rng);
  Scorer scorer = make_scorer(spec.scorer, params);
  bool unbounded = spec.scorer == ScorerKind::kPpoValueMean ||
                   spec.scorer == ScorerKind::kPpoValueLast;
  report.verifier_acc =
      probe_accuracy(probe, scorer, unbounded ? ThresholdMode::kMedian : ThresholdMode::kFixed);

  const Strategy all[] = {Strategy::kMajorityVote, Strategy::kWeightedVote, Strategy::kBestOfN};
  const int grid[] = {spec.samples};
  report.strategies = sweep(ev.pools, ev.truths, all, grid, spec.trials, trial_rng);
  return report;
}

std::string render_eval(const EvalReport& report) {
  std::string out;
  out += "pass@1            " + fmt(report.pass1) + "\n";
  out += "verifier_acc      " + fmt(report.verifier_acc) + "\n";
  for (const SweepRow& row : report.strategies) {
    std::string name(strategy_name(row.strategy));
    out += name + std::string(14 - std::min<std::size_t>(name.size(), 13), ' ') + "n=" +
           std::to_string(row.n) + "  " + fmt(row.accuracy) + " (se " + fmt(row.stderr_) +
           ")\n";
  }
  return out;
}

std::vector<SweepRow> run_sweep_n(const Vocab& vocab, const PolicyParams& params,
                                  const EvalSpec& spec, std::span<const int> n_grid,
                                  std::span<const Strategy> strategies) {
  for (int n : n_grid)
    if (n < 1 || n > spec.samples)
      throw ConfigError("sweep-n: every n must be in [1, samples]");
  EvalPools ev = build_eval_pools(vocab, params, spec);
  Rng trial_rng = Rng(spec.seed).fork(4);
  return sweep(ev.pools, ev.truths, strategies, n_grid, spec.trials, trial_rng);
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "strategy,n,accuracy,stderr\n";
  for (const SweepRow& row : rows) {
    out += std::string(strategy_name(row.strategy));
    out.push_back(',');
    out += std::to_string(row.n);
    out.push_back(',');
    out += fmt(row.accuracy, 6);
    out.push_back(',');
    out += fmt(row.stderr_, 6);
    out.push_back('\n');
  }
  return out;
}

BackendFactory builtin_backend_factory(const PolicyParams& params, double temperature,
                                       std::uint64_t seed) {
  return [&params, temperature, seed](std::uint64_t tag) {
    return std::make_unique<BuiltinBackend>(params, temperature, Rng(seed).fork(5).fork(tag));
  };
}

BackendFactory remote_backend_factory(const RemoteSpec& spec, double temperature) {
  return [spec, temperature](std::uint64_t) {
    return std::make_unique<RemoteBackend>(spec, temperature);
  };
}

BudgetReport run_budget_demo(const Vocab& vocab, const PolicyParams& params,
                             const EvalSpec& spec, std::span<const int> budgets,
                             int buffer, double tau, const BackendFactory& factory) {
  spec.validate();
  if (budgets.empty()) throw ConfigError("budget-demo: need at least one budget");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] <= buffer || buffer < 1)
      throw ConfigError("budget-demo: need 0 < buffer < every budget");
    if (i && budgets[i] <= budgets[i - 1])
      throw ConfigError("budget-demo: budgets must strictly increase");
  }
  Rng root(spec.seed);
  Rng task_rng = root.fork(1);
  Scorer scorer = make_scorer(spec.scorer, params);

  BudgetReport report;
  report.tau = tau;
  report.budgets.resize(budgets.size());
  for (std::size_t i = 0; i < budgets.size(); ++i) report.budgets[i].budget = budgets[i];

  for (int t = 0; t < spec.tasks; ++t) {
    TaskInstance task = generate_task(vocab, spec.difficulty, spec.domain, task_rng);
    // One pool of budget-forced solutions per rung, shared between the
    // fixed-budget rows and the adaptive walk.
    std::vector<std::vector<ScoredSolution>> rung_pools(budgets.size());
    std::vector<double> rung_tokens(budgets.size(), 0.0);
    for (std::size_t i = 0; i < budgets.size(); ++i) {
      std::unique_ptr<GenerationBackend> backend =
          factory(static_cast<std::uint64_t>(t) * budgets.size() + i);
      GenerateFn gen = backend_generate_fn(*backend);
      BudgetSpec bspec = make_budget_spec(budgets[i], buffer);
      for (int s = 0; s < spec.samples; ++s) {
        BudgetResult forced = budget_force(gen, task.prompt, bspec);
        rung_tokens[i] += static_cast<double>(forced.tokens.size());
        ScoredSolution sol;
        sol.score = scorer(task, forced.tokens);
        sol.answer = extract_answer(vocab, forced.tokens);
        sol.correct = reward(vocab, task, forced.tokens);
        sol.solution = std::move(forced.tokens);
        rung_pools[i].push_back(std::move(sol));
      }
    }
    for (std::size_t i = 0; i < budgets.size(); ++i) {
      VoteOutcome o = weighted_vote(rung_pools[i]);
      report.budgets[i].accuracy +=
          (o.has_answer && o.answer == task.ground_truth) ? 1.0 : 0.0;
      report.budgets[i].mean_tokens +=
          rung_tokens[i] / static_cast<double>(spec.samples);
    }
    AdaptiveResult ar = adaptive_length_select(
        [&](int budget) {
          auto it = std::find(budgets.begin(), budgets.end(), budget);
          return rung_pools[static_cast<std::size_t>(it - budgets.begin())];
        },
        budgets, tau);
    report.adaptive_accuracy +=
        (ar.outcome.has_answer && ar.outcome.answer == task.ground_truth) ? 1.0 : 0.0;
    report.adaptive_mean_length += static_cast<double>(ar.length_used);
    report.adaptive_mean_confidence += ar.confidence;
    report.threshold_unmet_rate += ar.threshold_unmet ? 1.0 : 0.0;
  }
  double nt = static_cast<double>(spec.tasks);
  for (BudgetRow& row : report.budgets) {
    row.accuracy /= nt;
    row.mean_tokens /= nt;
  }
  report.adaptive_accuracy /= nt;
  report.adaptive_mean_length /= nt;
  report.adaptive_mean_confidence /= nt;
  report.threshold_unmet_rate /= nt;
  return report;
}

std::string render_budget(const BudgetReport& report) {
  std::string out = "budget  accuracy  mean_tokens\n";
  for (const BudgetRow& row : report.budgets)
    out += std::to_string(row.budget) + "  " + fmt(row.accuracy) + "  " +
           fmt(row.mean_tokens, 2) + "\n";
  out += "adaptive(tau=" + fmt(report.tau, 2) + ")  accuracy " + fmt(report.adaptive_accuracy) +
         "  mean_length " + fmt(report.adaptive_mean_length, 2) + "  mean_confidence " +
         fmt(report.adaptive_mean_confidence) + "  unmet_rate " +
         fmt(report.threshold_unmet_rate) + "\n";
  return out;
}

std::vector<ProbeRow> run_verify_probe(const Vocab& vocab, const PolicyParams& params,
                                       std::span<const EpisodeRecord> log,
                                       std::span<const ScorerKind> kinds,
                                       int tail_iterations) {
  if (log.empty()) throw ArtifactError("verify-probe: empty episode log");
  int last_iter = 0;
  for (const EpisodeRecord& rec : log) last_iter = std::max(last_iter, rec.iteration);
  int first_iter = tail_iterations > 0 ? last_iter - tail_iterations + 1 : 0;

  std::vector<ProbeExample> pos, neg;
  double reward_sum = 0.0, count = 0.0;
  for (const EpisodeRecord& rec : log) {
    if (rec.iteration < first_iter) continue;
    TaskInstance task;
    task.prompt = rec.prompt;
    task.ground_truth = eval_chain(vocab, rec.prompt);
    reward_sum += static_cast<double>(rec.reward);
    count += 1.0;
    (rec.reward ? pos : neg)
        .push_back(ProbeExample{std::move(task), rec.solution, rec.reward});
  }
  std::size_t m = std::min(pos.size(), neg.size());
  std::vector<ProbeExample> probe;
  for (std::size_t i = 0; i < m; ++i) probe.push_back(std::move(pos[i]));
  for (std::size_t i = 0; i < m; ++i) probe.push_back(std::move(neg[i]));

  std::vector<ProbeRow> rows;
  for (ScorerKind kind : kinds) {
    ProbeRow row;
    row.kind = kind;
    row.reasoner_pass1 = count > 0.0 ? reward_sum / count : 0.0;
    row.probe_size = static_cast<int>(probe.size());
    bool unbounded = kind == ScorerKind::kPpoValueMean || kind == ScorerKind::kPpoValueLast;
    row.verifier_acc = probe_accuracy(probe, make_scorer(kind, params),
                                      unbounded ? ThresholdMode::kMedian : ThresholdMode::kFixed);
    rows.push_back(row);
  }
  return rows;
}

std::string render_probe(std::span<const ProbeRow> rows) {
  std::string out = "scorer,reasoner_pass1,verifier_acc,probe_size\n";
  for (const ProbeRow& row : rows) {
    out += std::string(scorer_kind_name(row.kind));
    out.push_back(',');
    out += fmt(row.reasoner_pass1, 6);
    out.push_back(',');
    out += fmt(row.verifier_acc, 6);
    out.push_back(',');
    out += std::to_string(row.probe_size);
    out.push_back('\n');
  }
  return out;
}

}  // namespace rlv
