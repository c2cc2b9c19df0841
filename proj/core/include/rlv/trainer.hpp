#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "rlv/advantage.hpp"
#include "rlv/policy.hpp"
#include "rlv/task.hpp"

namespace rlv {

enum class Method { kGrpo, kRloo, kVineppo, kPpo };
enum class VerifierMode { kGenerative, kBceHead, kRegHead, kNone };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
std::string_view verifier_mode_name(VerifierMode m);
VerifierMode parse_verifier_mode(std::string_view name);

struct RunConfig {
  Method method = Method::kGrpo;
  std::uint64_t seed = 1;
  int iterations = 200;
  int batch_prompts = 128;
  int group_size = 8;       // solutions per prompt (the K of leave-one-out)
  int max_len = 3;          // ANSWER digit EOS; longer only invites length games
  double temperature = 1.2;
  double clip_epsilon = 0.2;
  double kl_beta = 0.01;
  double lr_max = 8.0;      // nominal rate; the per-row frequency scaling keeps
                            // the always-active window rows at an effective ~lr
  double lr_head_max = 0.01;  // value/BCE/REG heads: quadratic losses over ~13
                              // active features per context need a small step
  double ramp_fraction = 0.75;
  int ppo_epochs = 2;
  VerifierMode verifier_mode = VerifierMode::kGenerative;
  double lambda_max = 1.0;
  int vineppo_mc_samples = 4;
  double gae_gamma = 1.0;
  double gae_lambda = 0.95;
  int difficulty = 2;
  Domain domain = Domain::kAddOnly;
  int modulus = 10;
  int window = 12;
  int digit_tuple = 4;
  int heldout_tasks = 64;   // fixed held-out set for the per-iteration pass@1
  int probe_tasks = 32;     // held-out tasks behind the balanced verifier probe
  int probe_samples = 2;    // solutions sampled per probe task per iteration

  void validate() const;  // throws std::invalid_argument
};

// Linear ramp: min(1, step / (ramp_fraction * total_steps)) * max_value.
double ramp(int step, int total_steps, double max_value, double ramp_fraction);

// Clipped surrogate over a batch of solutions: per-token
// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A), averaged over tokens within
// each solution and then over solutions. dlogp holds the exact gradient of
// that average w.r.t. each new logprob (zero where the clipped branch wins).
struct ClipResult {
  double objective = 0.0;
  std::vector<std::vector<double>> dlogp;
};
ClipResult ppo_clip_objective(const std::vector<std::vector<double>>& new_logprobs,
                              const std::vector<std::vector<double>>& old_logprobs,
                              const std::vector<std::vector<double>>& advantages,
                              double clip_epsilon);

struct VerificationExample {
  std::vector<int> input;  // prompt + solution + VERIFY
  int label = kNo;         // kYes or kNo
};

struct VerificationBatch {
  std::vector<VerificationExample> examples;
  bool skipped = false;  // one class was empty
};

// Class-balanced batch: every episode with an extractable answer becomes an
// example (YES iff reward 1), then the minority class is oversampled
// uniformly with replacement up to the majority count. Originals keep
// episode order; duplicates are appended. Unextractable solutions carry no
// claim to verify, and their verification input reuses the generation rows
// of the digit-tuple group, so they are excluded outright.
VerificationBatch build_verification_batch(const Vocab& vocab, std::span<const Episode> episodes,
                                           Rng& rng);

// Mean NLL of the label token after the VERIFY position. The _grad variant
// also accumulates scale * d(loss)/dw into grad and returns the loss.
double verification_loss(const PolicyParams& p, std::span<const VerificationExample> batch);
double verification_loss_grad(const PolicyParams& p, std::span<const VerificationExample> batch,
                              double scale, std::vector<double>& grad);

struct StepMetrics {
  int iteration = 0;
  double lr = 0.0;
  double lambda = 0.0;
  double pass1_batch = 0.0;
  double clip_objective = 0.0;  // last epoch pass
  double mean_kl = 0.0;         // last epoch pass
  double verify_loss = 0.0;     // NaN when not applicable
  double value_loss = 0.0;      // NaN unless method PPO
  double head_loss = 0.0;       // NaN unless BCE_HEAD / REG_HEAD
  bool verify_skipped = false;
};

// One optimization step on a sampled batch: advantages by cfg.method, then
// ppo_epochs passes of gradient ascent on
//   clip_objective - kl_beta * mean KL(pi || ref) - lambda(step) * verify loss
// with lambda(step) and lr(step) ramped (1-based step so that the first
// iteration already trains). BCE/REG modes train their head on the balanced
// batch instead of the generative loss; method PPO additionally regresses the
// value head on empirical returns. Update order within an epoch is fixed:
// accumulate all gradients, then apply w, v, u.
StepMetrics unified_step(PolicyParams& params, const ReferenceParams& ref,
                         std::span<const Episode> episodes, const RunConfig& cfg,
                         int step_index, Rng& verify_rng, Rng& vineppo_rng);

// The named substreams of one run, all derived from the seed. Keeping them
// independent means e.g. verification batch assembly can never perturb task
// generation or rollouts (so lambda_max = 0 reproduces the base method).
struct TrainStreams {
  Rng task;
  Rng rollout;
  Rng verify;
  Rng vineppo;
  Rng eval;
};
TrainStreams make_streams(std::uint64_t seed);

struct IterationRecord {
  StepMetrics metrics;
  double heldout_pass1 = 0.0;
  double verifier_acc = 0.0;
};

struct TrainResult {
  PolicyParams params;
  ReferenceParams ref;
  std::vector<IterationRecord> iterations;
  // Flat episode log, parallel arrays (iteration index + behavior-time score).
  std::vector<Episode> episodes;
  std::vector<int> episode_iteration;
  std::vector<double> episode_score;
};

TrainResult train(const RunConfig& cfg);

}  // namespace rlv
