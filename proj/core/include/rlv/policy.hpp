#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rlv/rng.hpp"
#include "rlv/task.hpp"
#include "rlv/vocab.hpp"

namespace rlv {

/// Feature map with two indicator groups:
//  * one per (window position, token id) over the trailing token window;
//    right-aligned, PAD-filled on the left. All ten digits share one slot per
//    position, so these rows encode format ("a digit goes here"), never digit
//    identity.
//  * one for the ordered tuple of the first `digit_tuple` digit-valued tokens
//    of the whole context, right-filled with a non-digit bucket
//    (11^digit_tuple ids). For task prompts these are the operands, so the
//    tuple stays fixed no matter what the solution emits.
//  * one for the pair (digit sum of the prompt mod residue_base, last digit
//    of the claim after the most recent ANSWER), both with a "none" bucket
//    ((residue_base+1) x 11 ids). The tuple memorizes per-task evidence; the
//    residue pair is the task-independent abstraction of it, which is what
//    transfers to operand combinations never seen in training.
// Position indicators carry format; the digit-tuple and residue indicators
// carry the operand interactions a linear softmax otherwise cannot represent.
// Keeping digit identity out of the shared rows matters: they see every
// episode while a given tuple row sees only its own operand triple, so any
// digit signal in the shared rows would drown the tuple's by orders of
// magnitude.
struct FeatureConfig {
  int window = 12;
  int digit_tuple = 4;
  int residue_base = 10;

  int tuple_dim() const {
    int d = 1;
    for (int i = 0; i < digit_tuple; ++i) d *= 11;
    return d;
  }
  int residue_dim() const { return (residue_base + 1) * 11; }
  int dim() const { return window * kVocabSize + tuple_dim() + residue_dim(); }
  bool operator==(const FeatureConfig&) const = default;
};

// Column partition: positional (window) rows parameterize format tokens
// only; tuple and residue rows parameterize answer digits and the YES/NO
// verdict only. Each logit column is owned by exactly one row family. Letting
// a family cross the line is how training falls over: a semantic row active
// at a pre-digit step replays generation credit for ANSWER, and a format row
// with live digit columns can grow a task-independent preference for one
// digit until it outshouts ANSWER at the first step and every sample goes
// malformed. Masked weights stay zero and contribute nothing to logits or
// gradients.
inline bool live_column(const FeatureConfig& fc, int feature, int col) {
  bool semantic_row = feature >= fc.window * kVocabSize;
  bool semantic_col = is_digit_token(col) || col == kYes || col == kNo;
  return semantic_row == semantic_col;
}

// Active feature indices for a context. Contexts that agree on the trailing
// `window` tokens get identical features.
void features_into(const FeatureConfig& fc, std::span<const int> context, std::vector<int>& out);
std::vector<int> features(const FeatureConfig& fc, std::span<const int> context);

using Dist = std::array<double, kVocabSize>;

// Joint parameters: one softmax table plus three scalar heads on the same
// features. Heads are always allocated (zero = untrained).
struct PolicyParams {
  FeatureConfig fc;
  std::vector<double> w;      // [dim() x kVocabSize] row-major by feature
  std::vector<double> v;      // value head (PPO baseline)
  std::vector<double> u_bce;  // sigmoid correctness head
  std::vector<double> u_reg;  // squared-error correctness head

  explicit PolicyParams(FeatureConfig f = {});
  double* row(int f) { return w.data() + static_cast<std::size_t>(f) * kVocabSize; }
  const double* row(int f) const { return w.data() + static_cast<std::size_t>(f) * kVocabSize; }
};

// Frozen snapshot of the softmax table, taken at step 0 of a run.
struct ReferenceParams {
  std::vector<double> w;
};
ReferenceParams make_reference(const PolicyParams& p);

// Exact softmax over the full vocabulary; throws std::domain_error on
// non-finite logits.
Dist next_token_dist(const PolicyParams& p, std::span<const int> context);

struct SampleOptions {
  double temperature = 1.0;
  bool greedy = false;  // argmax, lowest index wins ties; temperature ignored
};

// Autoregressive sampling until EOS or max_len tokens. old_logprobs are the
// untempered log-probabilities of the chosen tokens. Reward is filled in.
Episode sample_solution(const Vocab& vocab, const PolicyParams& p, const TaskInstance& task,
                        int max_len, const SampleOptions& opt, Rng& rng);

struct Continuation {
  std::vector<int> tokens;
  std::vector<double> logprobs;
};

// Continue `partial` until EOS or the total solution length reaches max_len.
// Returns only the newly generated part. If `partial` already ends in EOS the
// continuation is empty.
Continuation sample_continuation(const Vocab& vocab, const PolicyParams& p,
                                 const TaskInstance& task, std::span<const int> partial,
                                 int max_len, const SampleOptions& opt, Rng& rng);

// log pi(token | context) and its gradient. The gradient w.r.t. w[f][c] is
// coeff[c] for every active feature f and zero elsewhere.
struct LogProbGrad {
  double logprob = 0.0;
  Dist coeff{};
  std::vector<int> active;
};
LogProbGrad logprob_and_grad(const PolicyParams& p, std::span<const int> context, int token);

// KL(p || q) over probability vectors; exact, >= 0, 0 iff p == q.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Exact KL of the current next-token distribution to the reference at one
// context. The _grad variant also accumulates scale * dKL/dw into grad
// (layout of PolicyParams::w) and returns the KL value.
double kl_to_ref(const PolicyParams& p, const ReferenceParams& ref, std::span<const int> context);
double kl_to_ref_grad(const PolicyParams& p, const ReferenceParams& ref,
                      std::span<const int> context, double scale, std::vector<double>& grad);

// Dot product of a head vector with the feature indicators of context.
double dot_features(const std::vector<double>& u, const FeatureConfig& fc,
                    std::span<const int> context);

// Value head at a context.
double value(const PolicyParams& p, std::span<const int> context);

// Versioned text round-trip of all parameters (exact via shortest-round-trip
// formatting). Throws std::runtime_error on malformed files.
void save_params(const PolicyParams& p, const Vocab& vocab, const std::string& path);
PolicyParams load_params(const std::string& path, Vocab* vocab_out = nullptr);

}  // namespace rlv
