#include <benchmark/benchmark.h>

#include "rlv/advantage.hpp"
#include "rlv/policy.hpp"
#include "rlv/scaling.hpp"
#include "rlv/trainer.hpp"

namespace {

rlv::PolicyParams warm_params() {
  rlv::PolicyParams p;
  rlv::Rng rng(7);
  for (double& w : p.w) w = (rng.next_double() - 0.5) * 0.05;
  return p;
}

void bm_next_token_dist(benchmark::State& state) {
  rlv::Vocab vocab(10);
  rlv::PolicyParams p = warm_params();
  rlv::TaskInstance task = rlv::generate_task(vocab, 2, rlv::Domain::kAddOnly, 3u);
  std::vector<int> ctx = task.prompt;
  ctx.push_back(rlv::kStep);
  for (auto _ : state) {
    rlv::Dist d = rlv::next_token_dist(p, ctx);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(bm_next_token_dist);

void bm_sample_solution(benchmark::State& state) {
  rlv::Vocab vocab(10);
  rlv::PolicyParams p = warm_params();
  rlv::TaskInstance task = rlv::generate_task(vocab, 2, rlv::Domain::kAddOnly, 3u);
  rlv::Rng rng(11);
  rlv::SampleOptions opt;
  for (auto _ : state) {
    rlv::Episode e = rlv::sample_solution(vocab, p, task, 10, opt, rng);
    benchmark::DoNotOptimize(e);
  }
}
BENCHMARK(bm_sample_solution);

void bm_logprob_and_grad(benchmark::State& state) {
  rlv::Vocab vocab(10);
  rlv::PolicyParams p = warm_params();
  rlv::TaskInstance task = rlv::generate_task(vocab, 2, rlv::Domain::kAddOnly, 3u);
  for (auto _ : state) {
    rlv::LogProbGrad g = rlv::logprob_and_grad(p, task.prompt, rlv::kAnswer);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(bm_logprob_and_grad);

void bm_best_of_k(benchmark::State& state) {
  std::vector<double> alphas(static_cast<std::size_t>(state.range(0)));
  rlv::Rng rng(5);
  for (double& a : alphas) a = rng.next_double() < 0.3 ? 1.0 : 0.0;
  int k = static_cast<int>(state.range(0)) / 2;
  for (auto _ : state) {
    double est = rlv::best_of_k_estimate(alphas, k);
    benchmark::DoNotOptimize(est);
  }
}
BENCHMARK(bm_best_of_k)->Arg(32)->Arg(256);

void bm_unified_step(benchmark::State& state) {
  rlv::Vocab vocab(10);
  rlv::RunConfig cfg;
  cfg.batch_prompts = 4;
  cfg.group_size = 4;
  cfg.iterations = 10;
  rlv::PolicyParams p(rlv::FeatureConfig{cfg.window, cfg.digit_tuple});
  rlv::ReferenceParams ref = rlv::make_reference(p);
  rlv::TrainStreams streams = rlv::make_streams(1);
  rlv::SampleOptions opt;
  std::vector<rlv::Episode> episodes;
  for (int b = 0; b < cfg.batch_prompts; ++b) {
    rlv::TaskInstance task = rlv::generate_task(vocab, 2, rlv::Domain::kAddOnly, streams.task);
    for (int g = 0; g < cfg.group_size; ++g) {
      rlv::Episode e = rlv::sample_solution(vocab, p, task, cfg.max_len, opt, streams.rollout);
      e.group_id = b;
      episodes.push_back(std::move(e));
    }
  }
  for (auto _ : state) {
    rlv::PolicyParams work = p;
    rlv::StepMetrics m =
        rlv::unified_step(work, ref, episodes, cfg, 0, streams.verify, streams.vineppo);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(bm_unified_step);

}  // namespace

BENCHMARK_MAIN();
