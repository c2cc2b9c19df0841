#include "rlv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rlv/verifier.hpp"

namespace rlv {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kGrpo: return "GRPO";
    case Method::kRloo: return "RLOO";
    case Method::kVineppo: return "VINEPPO";
    case Method::kPpo: return "PPO";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "GRPO") return Method::kGrpo;
  if (name == "RLOO") return Method::kRloo;
  if (name == "VINEPPO") return Method::kVineppo;
  if (name == "PPO") return Method::kPpo;
  throw std::invalid_argument("unknown method: " + std::string(name));
}

std::string_view verifier_mode_name(VerifierMode m) {
  switch (m) {
    case VerifierMode::kGenerative: return "GENERATIVE";
    case VerifierMode::kBceHead: return "BCE_HEAD";
    case VerifierMode::kRegHead: return "REG_HEAD";
    case VerifierMode::kNone: return "NONE";
  }
  return "?";
}

VerifierMode parse_verifier_mode(std::string_view name) {
  if (name == "GENERATIVE") return VerifierMode::kGenerative;
  if (name == "BCE_HEAD") return VerifierMode::kBceHead;
  if (name == "REG_HEAD") return VerifierMode::kRegHead;
  if (name == "NONE") return VerifierMode::kNone;
  throw std::invalid_argument("unknown verifier mode: " + std::string(name));
}

void RunConfig::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(msg); };
  if (iterations < 0) fail("iterations must be >= 0");
  if (batch_prompts < 1) fail("batch.prompts must be >= 1");
  if (group_size < 2) fail("group.size must be >= 2");
  if (max_len < 1) fail("rollout.max_len must be >= 1");
  if (!(temperature > 0.0)) fail("rollout.temperature must be positive");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) fail("clip.epsilon must be in (0, 1)");
  if (kl_beta < 0.0) fail("kl.beta must be >= 0");
  if (!(lr_max >= 0.0)) fail("lr.max must be >= 0");
  if (!(lr_head_max >= 0.0)) fail("lr.head_max must be >= 0");
  if (!(ramp_fraction > 0.0 && ramp_fraction <= 1.0)) fail("ramp.fraction must be in (0, 1]");
  if (ppo_epochs < 1) fail("ppo.epochs must be >= 1");
  if (lambda_max < 0.0) fail("verify.lambda_max must be >= 0");
  if (vineppo_mc_samples < 1) fail("vineppo.mc_samples must be >= 1");
  if (!(gae_gamma >= 0.0 && gae_gamma <= 1.0)) fail("gae.gamma must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae.lambda must be in [0, 1]");
  if (difficulty < 1) fail("task.difficulty must be >= 1");
  if (modulus < 1 || modulus > 10) fail("task.modulus must be in [1, 10]");
  if (window < 1 || window > 64) fail("policy.window must be in [1, 64]");
  if (digit_tuple < 0 || digit_tuple > 6) fail("policy.digit_ngram must be in [0, 6]");
  if (heldout_tasks < 1) fail("eval.heldout_tasks must be >= 1");
  if (probe_tasks < 1) fail("eval.probe_tasks must be >= 1");
  if (probe_samples < 1) fail("eval.probe_samples must be >= 1");
}

double ramp(int step, int total_steps, double max_value, double ramp_fraction) {
  if (step < 0 || total_steps < 0 || step > total_steps)
    throw std::invalid_argument("ramp: need 0 <= step <= total_steps");
  if (!(ramp_fraction > 0.0 && ramp_fraction <= 1.0))
    throw std::invalid_argument("ramp: ramp_fraction must be in (0, 1]");
  double denom = ramp_fraction * static_cast<double>(total_steps);
  double f = denom > 0.0 ? std::min(1.0, static_cast<double>(step) / denom) : 1.0;
  return f * max_value;
}

ClipResult ppo_clip_objective(const std::vector<std::vector<double>>& new_logprobs,
                              const std::vector<std::vector<double>>& old_logprobs,
                              const std::vector<std::vector<double>>& advantages,
                              double clip_epsilon) {
  std::size_t n = new_logprobs.size();
  if (n == 0) throw std::invalid_argument("ppo_clip_objective: no solutions");
  if (old_logprobs.size() != n || advantages.size() != n)
    throw std::invalid_argument("ppo_clip_objective: outer length mismatch");
  ClipResult res;
  res.dlogp.resize(n);
  double lo = 1.0 - clip_epsilon, hi = 1.0 + clip_epsilon;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t len = new_logprobs[i].size();
    if (len == 0) throw std::invalid_argument("ppo_clip_objective: empty solution");
    if (old_logprobs[i].size() != len || advantages[i].size() != len)
      throw std::invalid_argument("ppo_clip_objective: inner length mismatch");
    res.dlogp[i].assign(len, 0.0);
    double weight = 1.0 / (static_cast<double>(len) * static_cast<double>(n));
    for (std::size_t t = 0; t < len; ++t) {
      double ratio = std::exp(new_logprobs[i][t] - old_logprobs[i][t]);
      double a = advantages[i][t];
      double unclipped = ratio * a;
      double clipped = std::clamp(ratio, lo, hi) * a;
      if (unclipped <= clipped) {  // gradient flows only through this branch
        res.objective += unclipped * weight;
        res.dlogp[i][t] = unclipped * weight;
      } else {
        res.objective += clipped * weight;
      }
    }
  }
  return res;
}

VerificationBatch build_verification_batch(const Vocab& vocab, std::span<const Episode> episodes,
                                           Rng& rng) {
  VerificationBatch out;
  std::vector<std::size_t> yes_idx, no_idx;
  for (const Episode& e : episodes) {
    // a solution with no extractable answer has nothing to verify; it also
    // leaves the answer slot of the digit tuple empty, and training YES/NO on
    // that feature would trample the rows generation relies on
    if (!extract_answer(vocab, e.solution).has_value()) continue;
    (e.reward ? yes_idx : no_idx).push_back(out.examples.size());
    out.examples.push_back(VerificationExample{
        make_verification_input(e.task, e.solution), e.reward ? kYes : kNo});
  }
  if (yes_idx.empty() || no_idx.empty()) {
    out.examples.clear();
    out.skipped = true;
    return out;
  }
  const auto& minority = yes_idx.size() < no_idx.size() ? yes_idx : no_idx;
  std::size_t deficit = std::max(yes_idx.size(), no_idx.size()) - minority.size();
  for (std::size_t k = 0; k < deficit; ++k) {
    std::size_t pick = minority[rng.next_below(minority.size())];
    out.examples.push_back(out.examples[pick]);
  }
  return out;
}

double verification_loss(const PolicyParams& p, std::span<const VerificationExample> batch) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const VerificationExample& x : batch) {
    Dist d = next_token_dist(p, x.input);
    total -= std::log(d[x.label]);
  }
  return total / static_cast<double>(batch.size());
}

double verification_loss_grad(const PolicyParams& p, std::span<const VerificationExample> batch,
                              double scale, std::vector<double>& grad) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  double per = scale * (-1.0 / static_cast<double>(batch.size()));
  for (const VerificationExample& x : batch) {
    LogProbGrad g = logprob_and_grad(p, x.input, x.label);
    total -= g.logprob;
    for (int f : g.active) {
      double* row = grad.data() + static_cast<std::size_t>(f) * kVocabSize;
      for (int c = 0; c < kVocabSize; ++c)
        if (live_column(p.fc, f, c)) row[c] += per * g.coeff[c];
    }
  }
  return total / static_cast<double>(batch.size());
}

namespace {

void validate_grouping(std::span<const Episode> episodes, const RunConfig& cfg) {
  std::size_t g = static_cast<std::size_t>(cfg.group_size);
  if (episodes.empty() || episodes.size() % g != 0)
    throw std::invalid_argument("unified_step: episode count must be a positive multiple of group size");
  for (std::size_t b = 0; b < episodes.size(); b += g) {
    for (std::size_t i = 1; i < g; ++i) {
      if (episodes[b + i].group_id != episodes[b].group_id ||
          episodes[b + i].task.prompt != episodes[b].task.prompt)
        throw std::invalid_argument("unified_step: malformed grouping");
    }
    if (b && episodes[b].group_id == episodes[b - 1].group_id)
      throw std::invalid_argument("unified_step: malformed grouping");
  }
}

// Per-episode per-token advantages under cfg.method.
std::vector<std::vector<double>> compute_advantages(const PolicyParams& params,
                                                    std::span<const Episode> episodes,
                                                    const RunConfig& cfg, Rng& vineppo_rng) {
  Vocab vocab(cfg.modulus);
  std::size_t n = episodes.size();
  std::size_t g = static_cast<std::size_t>(cfg.group_size);
  std::vector<std::vector<double>> adv(n);
  switch (cfg.method) {
    case Method::kGrpo:
    case Method::kRloo: {
      for (std::size_t b = 0; b < n; b += g) {
        std::vector<double> rewards(g);
        for (std::size_t i = 0; i < g; ++i)
          rewards[i] = static_cast<double>(episodes[b + i].reward);
        std::vector<double> a = cfg.method == Method::kGrpo ? grpo_advantages(rewards)
                                                            : rloo_advantages(rewards);
        for (std::size_t i = 0; i < g; ++i)
          adv[b + i].assign(episodes[b + i].solution.size(), a[i]);
      }
      break;
    }
    case Method::kVineppo: {
      for (std::size_t i = 0; i < n; ++i)
        adv[i] = vineppo_advantages(vocab, params, episodes[i].task, episodes[i].solution,
                                    cfg.vineppo_mc_samples, cfg.max_len, vineppo_rng);
      break;
    }
    case Method::kPpo: {
      for (std::size_t i = 0; i < n; ++i) {
        const Episode& e = episodes[i];
        std::size_t len = e.solution.size();
        std::vector<double> values(len + 1, 0.0);
        std::vector<int> ctx = e.task.prompt;
        for (std::size_t t = 0; t < len; ++t) {
          values[t] = value(params, ctx);
          ctx.push_back(e.solution[t]);
        }
        std::vector<double> rewards(len, 0.0);
        rewards[len - 1] = static_cast<double>(e.reward);
        adv[i] = gae_advantages(rewards, values, cfg.gae_gamma, cfg.gae_lambda);
      }
      break;
    }
  }
  return adv;
}

}  // namespace

StepMetrics unified_step(PolicyParams& params, const ReferenceParams& ref,
                         std::span<const Episode> episodes, const RunConfig& cfg,
                         int step_index, Rng& verify_rng, Rng& vineppo_rng) {
  validate_grouping(episodes, cfg);
  Vocab vocab(cfg.modulus);
  StepMetrics m;
  m.iteration = step_index;
  m.lr = ramp(step_index + 1, cfg.iterations, cfg.lr_max, cfg.ramp_fraction);
  m.lambda = ramp(step_index + 1, cfg.iterations, cfg.lambda_max, cfg.ramp_fraction);
  m.verify_loss = kNan;
  m.value_loss = kNan;
  m.head_loss = kNan;

  std::size_t n = episodes.size();
  double mean_reward = 0.0;
  std::size_t total_tokens = 0;
  for (const Episode& e : episodes) {
    mean_reward += static_cast<double>(e.reward);
    total_tokens += e.solution.size();
  }
  m.pass1_batch = mean_reward / static_cast<double>(n);

  std::vector<std::vector<double>> advantages =
      compute_advantages(params, episodes, cfg, vineppo_rng);

  VerificationBatch vbatch;
  if (cfg.verifier_mode != VerifierMode::kNone) {
    vbatch = build_verification_batch(vocab, episodes, verify_rng);
    m.verify_skipped = vbatch.skipped;
  }

  std::vector<std::vector<double>> old_lps(n);
  for (std::size_t i = 0; i < n; ++i) old_lps[i] = episodes[i].old_logprobs;

  std::vector<double> grad(params.w.size());
  std::vector<std::vector<double>> new_lps(n);
  std::vector<std::vector<LogProbGrad>> lpgs(n);
  // Per-feature activation counts for frequency-normalized steps: format rows
  // fire on every token while a given operand-tuple row fires on a handful,
  // three orders of magnitude apart; a single global step size either starves
  // the rare rows or blows up the common ones. Scaling each row's update by
  // (contexts / its activation count) equalizes the per-occurrence step, the
  // usual per-coordinate treatment for one-hot sparse models. Always-active
  // rows keep a factor of one so lr retains its plain-SGD meaning for them.
  std::vector<int> acount(params.w.size() / kVocabSize);

  for (int epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(acount.begin(), acount.end(), 0);

    // clipped surrogate
    for (std::size_t i = 0; i < n; ++i) {
      const Episode& e = episodes[i];
      std::size_t len = e.solution.size();
      new_lps[i].resize(len);
      lpgs[i].resize(len);
      std::vector<int> ctx = e.task.prompt;
      for (std::size_t t = 0; t < len; ++t) {
        lpgs[i][t] = logprob_and_grad(params, ctx, e.solution[t]);
        new_lps[i][t] = lpgs[i][t].logprob;
        ctx.push_back(e.solution[t]);
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      for (const LogProbGrad& g : lpgs[i])
        for (int f : g.active) ++acount[f];
    std::size_t total_contexts = total_tokens;

    ClipResult clip = ppo_clip_objective(new_lps, old_lps, advantages, cfg.clip_epsilon);
    m.clip_objective = clip.objective;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < lpgs[i].size(); ++t) {
        double s = clip.dlogp[i][t];
        if (s == 0.0) continue;
        const LogProbGrad& g = lpgs[i][t];
        for (int f : g.active) {
          double* row = grad.data() + static_cast<std::size_t>(f) * kVocabSize;
          for (int c = 0; c < kVocabSize; ++c)
            if (live_column(params.fc, f, c)) row[c] += s * g.coeff[c];
        }
      }
    }

    // KL to reference, exact, per-token mean over the batch
    double kl_sum = 0.0;
    double kl_scale = -cfg.kl_beta / static_cast<double>(total_tokens);
    for (std::size_t i = 0; i < n; ++i) {
      const Episode& e = episodes[i];
      std::vector<int> ctx = e.task.prompt;
      for (std::size_t t = 0; t < e.solution.size(); ++t) {
        kl_sum += kl_to_ref_grad(params, ref, ctx, kl_scale, grad);
        ctx.push_back(e.solution[t]);
      }
    }
    m.mean_kl = kl_sum / static_cast<double>(total_tokens);

    // verification
    if (cfg.verifier_mode == VerifierMode::kGenerative && !vbatch.skipped) {
      if (m.lambda != 0.0) {
        m.verify_loss = verification_loss_grad(params, vbatch.examples, -m.lambda, grad);
      } else {
        m.verify_loss = verification_loss(params, vbatch.examples);
      }
    }
    bool verify_contexts_counted = !vbatch.skipped && m.lambda != 0.0 &&
                                   cfg.verifier_mode != VerifierMode::kNone;
    if (verify_contexts_counted) {
      std::vector<int> active;
      for (const VerificationExample& x : vbatch.examples) {
        features_into(params.fc, x.input, active);
        for (int f : active) ++acount[f];
      }
      total_contexts += vbatch.examples.size();
    }

    // value head (PPO baseline), squared error against empirical returns
    std::vector<double> vgrad;
    if (cfg.method == Method::kPpo) {
      vgrad.assign(params.v.size(), 0.0);
      double vloss = 0.0;
      std::vector<int> active;
      for (std::size_t i = 0; i < n; ++i) {
        const Episode& e = episodes[i];
        std::size_t len = e.solution.size();
        std::vector<int> ctx = e.task.prompt;
        for (std::size_t t = 0; t < len; ++t) {
          double ret = std::pow(cfg.gae_gamma, static_cast<double>(len - 1 - t)) *
                       static_cast<double>(e.reward);
          features_into(params.fc, ctx, active);
          double val = 0.0;
          for (int f : active) val += params.v[static_cast<std::size_t>(f)];
          double diff = val - ret;
          vloss += diff * diff;
          double per = 2.0 * diff / static_cast<double>(total_tokens);
          for (int f : active) vgrad[static_cast<std::size_t>(f)] += per;
          ctx.push_back(e.solution[t]);
        }
      }
      m.value_loss = vloss / static_cast<double>(total_tokens);
    }

    // correctness heads trained instead of the generative loss
    std::vector<double> ugrad;
    bool bce = cfg.verifier_mode == VerifierMode::kBceHead;
    bool reg = cfg.verifier_mode == VerifierMode::kRegHead;
    if ((bce || reg) && !vbatch.skipped) {
      ugrad.assign(params.u_bce.size(), 0.0);
      const std::vector<double>& u = bce ? params.u_bce : params.u_reg;
      double hloss = 0.0;
      std::vector<int> active;
      double bsz = static_cast<double>(vbatch.examples.size());
      for (const VerificationExample& x : vbatch.examples) {
        double y = x.label == kYes ? 1.0 : 0.0;
        features_into(params.fc, x.input, active);
        double z = 0.0;
        for (int f : active) z += u[static_cast<std::size_t>(f)];
        double per;
        if (bce) {
          double pr = 1.0 / (1.0 + std::exp(-z));
          hloss += -(y * std::log(std::max(pr, 1e-300)) +
                     (1.0 - y) * std::log(std::max(1.0 - pr, 1e-300)));
          per = (pr - y) / bsz;
        } else {
          hloss += (z - y) * (z - y);
          per = 2.0 * (z - y) / bsz;
        }
        for (int f : active) ugrad[static_cast<std::size_t>(f)] += per;
      }
      m.head_loss = hloss / bsz;
    }

    // apply updates with frequency-normalized per-row steps: w ascends the
    // surrogate, heads descend their losses. Rows never activated this epoch
    // carry zero gradient, so they are skipped outright.
    const double tc = static_cast<double>(total_contexts);
    const double lr_head =
        ramp(step_index + 1, cfg.iterations, cfg.lr_head_max, cfg.ramp_fraction);
    for (std::size_t f = 0; f < acount.size(); ++f) {
      if (acount[f] == 0) continue;
      double norm = tc / static_cast<double>(acount[f]);
      double step = m.lr * norm;
      double hstep = lr_head * norm;
      double* wrow = params.w.data() + f * kVocabSize;
      const double* grow = grad.data() + f * kVocabSize;
      for (int c = 0; c < kVocabSize; ++c) wrow[c] += step * grow[c];
      if (!vgrad.empty()) params.v[f] -= hstep * vgrad[f];
      if (!ugrad.empty()) {
        std::vector<double>& u = bce ? params.u_bce : params.u_reg;
        u[f] -= hstep * m.lambda * ugrad[f];
      }
    }
  }
  return m;
}

TrainStreams make_streams(std::uint64_t seed) {
  Rng root(seed);
  return TrainStreams{root.fork(1), root.fork(2), root.fork(3), root.fork(4), root.fork(5)};
}

TrainResult train(const RunConfig& cfg) {
  cfg.validate();
  Vocab vocab(cfg.modulus);
  TrainStreams streams = make_streams(cfg.seed);

  TrainResult out{PolicyParams(FeatureConfig{cfg.window, cfg.digit_tuple}), {}, {}, {}, {}, {}};
  out.ref = make_reference(out.params);

  Rng heldout_rng = streams.eval.fork(1);
  std::vector<TaskInstance> heldout;
  for (int i = 0; i < cfg.heldout_tasks; ++i)
    heldout.push_back(generate_task(vocab, cfg.difficulty, cfg.domain, heldout_rng));
  Rng probe_rng = streams.eval.fork(2);
  std::vector<TaskInstance> probe_tasks;
  for (int i = 0; i < cfg.probe_tasks; ++i)
    probe_tasks.push_back(generate_task(vocab, cfg.difficulty, cfg.domain, probe_rng));

  ScorerKind probe_kind = ScorerKind::kGenerative;
  if (cfg.verifier_mode == VerifierMode::kBceHead) probe_kind = ScorerKind::kBceHead;
  if (cfg.verifier_mode == VerifierMode::kRegHead) probe_kind = ScorerKind::kRegHead;
  Scorer probe_scorer = make_scorer(probe_kind, out.params);

  SampleOptions rollout_opt;
  rollout_opt.temperature = cfg.temperature;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    std::vector<Episode> episodes;
    episodes.reserve(static_cast<std::size_t>(cfg.batch_prompts * cfg.group_size));
    for (int b = 0; b < cfg.batch_prompts; ++b) {
      TaskInstance task = generate_task(vocab, cfg.difficulty, cfg.domain, streams.task);
      for (int g = 0; g < cfg.group_size; ++g) {
        Episode e = sample_solution(vocab, out.params, task, cfg.max_len, rollout_opt,
                                    streams.rollout);
        e.group_id = b;
        episodes.push_back(std::move(e));
      }
    }

    // behavior-time verifier scores, logged with the episodes
    for (const Episode& e : episodes)
      out.episode_score.push_back(probe_scorer(e.task, e.solution));

    StepMetrics sm =
        unified_step(out.params, out.ref, episodes, cfg, iter, streams.verify, streams.vineppo);

    IterationRecord rec;
    rec.metrics = sm;
    double hits = 0.0;
    for (const TaskInstance& t : heldout) {
      Episode e = sample_solution(vocab, out.params, t, cfg.max_len, SampleOptions{}, streams.eval);
      hits += static_cast<double>(e.reward);
    }
    rec.heldout_pass1 = hits / static_cast<double>(heldout.size());
    std::vector<ProbeExample> probe = build_balanced_probe(
        vocab, out.params, probe_tasks, cfg.probe_samples, cfg.max_len, streams.eval);
    rec.verifier_acc = probe_accuracy(probe, probe_scorer, ThresholdMode::kFixed);
    out.iterations.push_back(rec);

    for (Episode& e : episodes) {
      out.episode_iteration.push_back(iter);
      out.episodes.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace rlv
