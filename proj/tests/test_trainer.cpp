#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "rlv/advantage.hpp"
#include "rlv/trainer.hpp"

using namespace rlv;

namespace {

constexpr double kLn21 = 3.044522437723423;

// Small but valid config for fast single-step tests.
RunConfig tiny_config() {
  RunConfig cfg;
  cfg.method = Method::kGrpo;
  cfg.iterations = 10;
  cfg.batch_prompts = 2;
  cfg.group_size = 2;
  cfg.max_len = 3;
  cfg.temperature = 1.0;
  cfg.lr_max = 0.5;
  cfg.lr_head_max = 0.01;
  cfg.kl_beta = 0.01;
  cfg.ppo_epochs = 1;
  cfg.difficulty = 1;
  cfg.heldout_tasks = 4;
  cfg.probe_tasks = 2;
  cfg.probe_samples = 1;
  return cfg;
}

Episode hand_episode(const Vocab& v, const TaskInstance& t, std::vector<int> solution,
                     int group_id) {
  Episode e;
  e.task = t;
  e.solution = std::move(solution);
  e.old_logprobs.assign(e.solution.size(), -kLn21);  // zero-policy behavior logprobs
  e.reward = reward(v, t, e.solution);
  e.group_id = group_id;
  return e;
}

// Two groups of two: one correct + one wrong answer per group, so rewards
// vary within every group and the verification batch has both classes.
std::vector<Episode> hand_batch(const Vocab& v) {
  TaskInstance a = generate_task(v, 1, Domain::kAddOnly, 100ull);
  TaskInstance b = generate_task(v, 1, Domain::kAddOnly, 101ull);
  std::vector<Episode> eps;
  eps.push_back(hand_episode(v, a, {kAnswer, a.ground_truth, kEos}, 0));
  eps.push_back(hand_episode(v, a, {kAnswer, (a.ground_truth + 1) % 10, kEos}, 0));
  eps.push_back(hand_episode(v, b, {kAnswer, b.ground_truth, kEos}, 1));
  eps.push_back(hand_episode(v, b, {kAnswer, (b.ground_truth + 3) % 10, kEos}, 1));
  return eps;
}

double solution_logprob(const PolicyParams& p, const Episode& e) {
  double total = 0.0;
  std::vector<int> ctx = e.task.prompt;
  for (int tok : e.solution) {
    total += logprob_and_grad(p, ctx, tok).logprob;
    ctx.push_back(tok);
  }
  return total;
}

}  // namespace

TEST_CASE("method and verifier mode names round-trip") {
  for (Method m : {Method::kGrpo, Method::kRloo, Method::kVineppo, Method::kPpo})
    CHECK(parse_method(method_name(m)) == m);
  CHECK(method_name(Method::kGrpo) == "GRPO");
  CHECK(method_name(Method::kRloo) == "RLOO");
  CHECK(method_name(Method::kVineppo) == "VINEPPO");
  CHECK(method_name(Method::kPpo) == "PPO");
  CHECK_THROWS_AS(parse_method("SAC"), std::invalid_argument);
  for (VerifierMode m : {VerifierMode::kGenerative, VerifierMode::kBceHead,
                         VerifierMode::kRegHead, VerifierMode::kNone})
    CHECK(parse_verifier_mode(verifier_mode_name(m)) == m);
  CHECK(verifier_mode_name(VerifierMode::kGenerative) == "GENERATIVE");
  CHECK(verifier_mode_name(VerifierMode::kNone) == "NONE");
  CHECK_THROWS_AS(parse_verifier_mode("MAYBE"), std::invalid_argument);
}

TEST_CASE("config validation rejects each bad field") {
  RunConfig ok = tiny_config();
  CHECK_NOTHROW(ok.validate());
  auto bad = [&](auto&& mutate) {
    RunConfig c = tiny_config();
    mutate(c);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  };
  bad([](RunConfig& c) { c.iterations = -1; });
  bad([](RunConfig& c) { c.batch_prompts = 0; });
  bad([](RunConfig& c) { c.group_size = 1; });
  bad([](RunConfig& c) { c.max_len = 0; });
  bad([](RunConfig& c) { c.temperature = 0.0; });
  bad([](RunConfig& c) { c.clip_epsilon = 0.0; });
  bad([](RunConfig& c) { c.clip_epsilon = 1.0; });
  bad([](RunConfig& c) { c.kl_beta = -0.1; });
  bad([](RunConfig& c) { c.lr_max = -1.0; });
  bad([](RunConfig& c) { c.lr_head_max = -1.0; });
  bad([](RunConfig& c) { c.ramp_fraction = 0.0; });
  bad([](RunConfig& c) { c.ramp_fraction = 1.5; });
  bad([](RunConfig& c) { c.ppo_epochs = 0; });
  bad([](RunConfig& c) { c.lambda_max = -0.5; });
  bad([](RunConfig& c) { c.vineppo_mc_samples = 0; });
  bad([](RunConfig& c) { c.gae_gamma = 1.5; });
  bad([](RunConfig& c) { c.gae_lambda = -0.1; });
  bad([](RunConfig& c) { c.difficulty = 0; });
  bad([](RunConfig& c) { c.modulus = 0; });
  bad([](RunConfig& c) { c.modulus = 11; });
  bad([](RunConfig& c) { c.window = 0; });
  bad([](RunConfig& c) { c.window = 65; });
  bad([](RunConfig& c) { c.digit_tuple = -1; });
  bad([](RunConfig& c) { c.digit_tuple = 7; });
  bad([](RunConfig& c) { c.heldout_tasks = 0; });
  bad([](RunConfig& c) { c.probe_tasks = 0; });
  bad([](RunConfig& c) { c.probe_samples = 0; });
}

TEST_CASE("ramp goldens") {
  CHECK(ramp(1, 200, 8.0, 0.75) == doctest::Approx(0.053333333333333337).epsilon(1e-15));
  CHECK(ramp(75, 200, 8.0, 0.75) == 4.0);
  CHECK(ramp(150, 200, 8.0, 0.75) == 8.0);
  CHECK(ramp(200, 200, 8.0, 0.75) == 8.0);
  CHECK(ramp(0, 200, 8.0, 0.75) == 0.0);
  CHECK(ramp(0, 0, 5.0, 0.5) == 5.0);  // degenerate horizon jumps to the plateau
  CHECK(ramp(10, 20, 1.0, 1.0) == 0.5);
  CHECK_THROWS_AS(ramp(-1, 10, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ramp(11, 10, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ramp(1, 10, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ramp(1, 10, 1.0, 1.1), std::invalid_argument);
}

TEST_CASE("clip objective hand cases") {
  auto single = [](double new_lp, double old_lp, double adv, double eps) {
    std::vector<std::vector<double>> n = {{new_lp}}, o = {{old_lp}}, a = {{adv}};
    return ppo_clip_objective(n, o, a, eps);
  };
  // ratio 1: objective = A, gradient = A
  ClipResult r1 = single(-1.0, -1.0, 2.0, 0.2);
  CHECK(r1.objective == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r1.dlogp[0][0] == doctest::Approx(2.0).epsilon(1e-14));
  // positive advantage, ratio above the ceiling: clipped, no gradient
  ClipResult r2 = single(std::log(1.5), 0.0, 1.0, 0.2);
  CHECK(r2.objective == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(r2.dlogp[0][0] == 0.0);
  // negative advantage, ratio below the floor: min picks the clipped branch
  ClipResult r3 = single(std::log(0.5), 0.0, -1.0, 0.2);
  CHECK(r3.objective == doctest::Approx(-0.8).epsilon(1e-12));
  CHECK(r3.dlogp[0][0] == 0.0);
  // negative advantage, ratio above the ceiling: unclipped is the minimum and
  // keeps its gradient (this is the branch that punishes overshooting)
  ClipResult r4 = single(std::log(1.5), 0.0, -1.0, 0.2);
  CHECK(r4.objective == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(r4.dlogp[0][0] == doctest::Approx(-1.5).epsilon(1e-12));
  // positive advantage, ratio below the floor: unclipped again
  ClipResult r5 = single(std::log(0.5), 0.0, 1.0, 0.2);
  CHECK(r5.objective == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r5.dlogp[0][0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("clip objective averages within solutions then across them") {
  // solution 0: one token, contributes adv directly; solution 1: two tokens
  std::vector<std::vector<double>> n = {{0.0}, {0.0, 0.0}};
  std::vector<std::vector<double>> o = {{0.0}, {0.0, 0.0}};
  std::vector<std::vector<double>> a = {{2.0}, {3.0, 5.0}};
  ClipResult r = ppo_clip_objective(n, o, a, 0.2);
  CHECK(r.objective == doctest::Approx((2.0 + (3.0 + 5.0) / 2.0) / 2.0).epsilon(1e-14));
  CHECK(r.dlogp[0][0] == doctest::Approx(2.0 / 2.0).epsilon(1e-14));
  CHECK(r.dlogp[1][0] == doctest::Approx(3.0 / 4.0).epsilon(1e-14));
  CHECK(r.dlogp[1][1] == doctest::Approx(5.0 / 4.0).epsilon(1e-14));
}

TEST_CASE("clip objective validates shapes") {
  std::vector<std::vector<double>> empty;
  CHECK_THROWS_AS(ppo_clip_objective(empty, empty, empty, 0.2), std::invalid_argument);
  std::vector<std::vector<double>> n = {{0.0}}, o = {{0.0}}, a = {{1.0, 2.0}};
  CHECK_THROWS_AS(ppo_clip_objective(n, o, a, 0.2), std::invalid_argument);
  std::vector<std::vector<double>> hollow = {{}};
  CHECK_THROWS_AS(ppo_clip_objective(hollow, hollow, hollow, 0.2), std::invalid_argument);
  std::vector<std::vector<double>> two = {{0.0}, {0.0}};
  CHECK_THROWS_AS(ppo_clip_objective(n, two, a, 0.2), std::invalid_argument);
}

TEST_CASE("clip gradient matches finite differences") {
  Rng rng(314);
  const double h = 1e-6;
  for (int trial = 0; trial < 40; ++trial) {
    int n = rng.uniform_int(1, 4);
    std::vector<std::vector<double>> nl(static_cast<std::size_t>(n)), ol(static_cast<std::size_t>(n)), ad(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      int len = rng.uniform_int(1, 4);
      for (int t = 0; t < len; ++t) {
        nl[static_cast<std::size_t>(i)].push_back(-rng.next_double());
        ol[static_cast<std::size_t>(i)].push_back(-rng.next_double());
        ad[static_cast<std::size_t>(i)].push_back(2.0 * rng.next_double() - 1.0);
      }
    }
    ClipResult r = ppo_clip_objective(nl, ol, ad, 0.2);
    for (std::size_t i = 0; i < nl.size(); ++i) {
      for (std::size_t t = 0; t < nl[i].size(); ++t) {
        double saved = nl[i][t];
        nl[i][t] = saved + h;
        double up = ppo_clip_objective(nl, ol, ad, 0.2).objective;
        nl[i][t] = saved - h;
        double dn = ppo_clip_objective(nl, ol, ad, 0.2).objective;
        nl[i][t] = saved;
        double fd = (up - dn) / (2 * h);
        // kinks at the clip boundary poison the two-sided difference; skip
        double ratio = std::exp(saved - ol[i][t]);
        if (std::abs(ratio - 1.2) < 1e-3 || std::abs(ratio - 0.8) < 1e-3) continue;
        CHECK(std::abs(fd - r.dlogp[i][t]) <= 1e-4 * std::max(1.0, std::abs(r.dlogp[i][t])));
      }
    }
  }
}

TEST_CASE("verification batch balances classes and keeps order") {
  Vocab v(10);
  TaskInstance t = generate_task(v, 1, Domain::kAddOnly, 55ull);
  int truth = t.ground_truth;
  std::vector<Episode> eps;
  eps.push_back(hand_episode(v, t, {kAnswer, truth, kEos}, 0));                // YES
  eps.push_back(hand_episode(v, t, {kAnswer, (truth + 1) % 10, kEos}, 0));     // NO
  eps.push_back(hand_episode(v, t, {kAnswer, truth, kEos}, 1));                // YES
  eps.push_back(hand_episode(v, t, {kAnswer, truth, kEos}, 1));                // YES
  eps.push_back(hand_episode(v, t, {truth, kEos}, 2));                         // no claim
  eps.push_back(hand_episode(v, t, {kAnswer, kEos}, 2));                       // no claim
  Rng rng(8);
  VerificationBatch b = build_verification_batch(v, eps, rng);
  CHECK(!b.skipped);
  REQUIRE(b.examples.size() == 6);  // 4 originals + 2 oversampled NOs
  int yes = 0, no = 0;
  for (const VerificationExample& x : b.examples) (x.label == kYes ? yes : no)++;
  CHECK(yes == no);
  // originals in episode order
  CHECK(b.examples[0].label == kYes);
  CHECK(b.examples[1].label == kNo);
  CHECK(b.examples[2].label == kYes);
  CHECK(b.examples[3].label == kYes);
  CHECK(b.examples[0].input == make_verification_input(t, eps[0].solution));
  CHECK(b.examples[1].input == make_verification_input(t, eps[1].solution));
  // duplicates replicate the lone NO example
  CHECK(b.examples[4].input == b.examples[1].input);
  CHECK(b.examples[5].input == b.examples[1].input);

  // determinism
  Rng rng2(8);
  VerificationBatch b2 = build_verification_batch(v, eps, rng2);
  REQUIRE(b2.examples.size() == b.examples.size());
  for (std::size_t i = 0; i < b.examples.size(); ++i) {
    CHECK(b2.examples[i].input == b.examples[i].input);
    CHECK(b2.examples[i].label == b.examples[i].label);
  }
}

TEST_CASE("verification batch skips one-class and empty pools") {
  Vocab v(10);
  TaskInstance t = generate_task(v, 1, Domain::kAddOnly, 56ull);
  Rng rng(1);
  std::vector<Episode> all_yes = {hand_episode(v, t, {kAnswer, t.ground_truth, kEos}, 0)};
  VerificationBatch b1 = build_verification_batch(v, all_yes, rng);
  CHECK(b1.skipped);
  CHECK(b1.examples.empty());
  std::vector<Episode> unextractable = {hand_episode(v, t, {3, kEos}, 0)};
  VerificationBatch b2 = build_verification_batch(v, unextractable, rng);
  CHECK(b2.skipped);
  std::vector<Episode> none;
  VerificationBatch b3 = build_verification_batch(v, none, rng);
  CHECK(b3.skipped);
}

TEST_CASE("verification loss goldens") {
  Vocab v(10);
  PolicyParams p;
  TaskInstance t;
  t.prompt = {3, kPlus, 4, kSep};
  t.ground_truth = 7;
  std::vector<VerificationExample> batch;
  std::vector<int> sol = {kAnswer, 7, kEos};
  batch.push_back({make_verification_input(t, sol), kYes});
  // uniform policy: NLL of any token is ln 21
  CHECK(verification_loss(p, batch) == doctest::Approx(kLn21).epsilon(1e-14));

  // boost YES through the active residue row: P(YES) = 3/23
  std::vector<int> act = features(p.fc, batch[0].input);
  p.row(act.back())[kYes] = std::log(3.0);
  CHECK(verification_loss(p, batch) == doctest::Approx(2.0368819272610401).epsilon(1e-13));
  batch[0].label = kNo;  // same boost, wrong label: NLL of a 1/23 token
  CHECK(verification_loss(p, batch) == doctest::Approx(std::log(23.0)).epsilon(1e-13));

  std::vector<VerificationExample> empty;
  CHECK(verification_loss(p, empty) == 0.0);
  std::vector<double> grad(p.w.size(), 0.0);
  CHECK(verification_loss_grad(p, empty, 1.0, grad) == 0.0);
}

TEST_CASE("verification loss gradient matches finite differences") {
  FeatureConfig fc{3, 2, 5};
  Vocab v(10);
  Rng rng(99);
  const double h = 1e-5;
  PolicyParams p(fc);
  for (double& x : p.w) x = 0.6 * (2.0 * rng.next_double() - 1.0);
  std::vector<VerificationExample> batch;
  for (int i = 0; i < 3; ++i) {
    TaskInstance t = generate_task(v, 1, Domain::kMixed, 200ull + static_cast<std::uint64_t>(i));
    std::vector<int> sol = {kAnswer, rng.uniform_int(0, 9), kEos};
    batch.push_back({make_verification_input(t, sol), i % 2 ? kYes : kNo});
  }
  std::vector<double> grad(p.w.size(), 0.0);
  double loss = verification_loss_grad(p, batch, 1.0, grad);
  CHECK(loss == doctest::Approx(verification_loss(p, batch)).epsilon(1e-12));
  for (const VerificationExample& x : batch) {
    for (int f : features(fc, x.input)) {
      for (int c = 0; c < kVocabSize; ++c) {
        std::size_t i = static_cast<std::size_t>(f) * kVocabSize + static_cast<std::size_t>(c);
        double saved = p.w[i];
        p.w[i] = saved + h;
        double up = verification_loss(p, batch);
        p.w[i] = saved - h;
        double dn = verification_loss(p, batch);
        p.w[i] = saved;
        double fd = (up - dn) / (2 * h);
        if (live_column(fc, f, c)) {
          CHECK(std::abs(fd - grad[i]) <= 1e-4 * std::max(1.0, std::abs(grad[i])));
        } else {
          CHECK(fd == 0.0);
          CHECK(grad[i] == 0.0);
        }
      }
    }
  }
  // the scale argument multiplies the accumulated gradient
  std::vector<double> gneg(p.w.size(), 0.0);
  verification_loss_grad(p, batch, -2.0, gneg);
  for (std::size_t i = 0; i < grad.size(); ++i)
    CHECK(gneg[i] == doctest::Approx(-2.0 * grad[i]).epsilon(1e-12));
}

TEST_CASE("unified_step fills metrics by mode") {
  Vocab v(10);
  std::vector<Episode> eps = hand_batch(v);

  auto run = [&](Method m, VerifierMode vm, double lambda_max) {
    RunConfig cfg = tiny_config();
    cfg.method = m;
    cfg.verifier_mode = vm;
    cfg.lambda_max = lambda_max;
    PolicyParams p;
    ReferenceParams ref = make_reference(p);
    Rng vr(1), pr(2);
    return unified_step(p, ref, eps, cfg, 0, vr, pr);
  };

  StepMetrics grpo = run(Method::kGrpo, VerifierMode::kGenerative, 1.0);
  CHECK(grpo.iteration == 0);
  CHECK(grpo.pass1_batch == 0.5);
  CHECK(grpo.lr == doctest::Approx(ramp(1, 10, 0.5, 0.75)).epsilon(1e-14));
  CHECK(grpo.lambda == doctest::Approx(ramp(1, 10, 1.0, 0.75)).epsilon(1e-14));
  CHECK(!grpo.verify_skipped);
  CHECK(std::isfinite(grpo.verify_loss));
  CHECK(std::isnan(grpo.value_loss));
  CHECK(std::isnan(grpo.head_loss));
  CHECK(std::isfinite(grpo.mean_kl));
  CHECK(grpo.mean_kl >= 0.0);

  StepMetrics none = run(Method::kRloo, VerifierMode::kNone, 1.0);
  CHECK(std::isnan(none.verify_loss));
  CHECK(std::isnan(none.head_loss));
  CHECK(!none.verify_skipped);

  StepMetrics ppo = run(Method::kPpo, VerifierMode::kGenerative, 1.0);
  CHECK(std::isfinite(ppo.value_loss));

  StepMetrics bce = run(Method::kGrpo, VerifierMode::kBceHead, 1.0);
  CHECK(std::isfinite(bce.head_loss));
  CHECK(std::isnan(bce.verify_loss));  // generative loss is not in play

  StepMetrics reg = run(Method::kVineppo, VerifierMode::kRegHead, 1.0);
  CHECK(std::isfinite(reg.head_loss));
}

TEST_CASE("unified_step is deterministic") {
  Vocab v(10);
  std::vector<Episode> eps = hand_batch(v);
  RunConfig cfg = tiny_config();
  cfg.verifier_mode = VerifierMode::kGenerative;
  cfg.ppo_epochs = 2;
  PolicyParams p1, p2;
  ReferenceParams ref = make_reference(p1);
  Rng v1(3), m1(4), v2(3), m2(4);
  StepMetrics a = unified_step(p1, ref, eps, cfg, 0, v1, m1);
  StepMetrics b = unified_step(p2, ref, eps, cfg, 0, v2, m2);
  CHECK(p1.w == p2.w);
  CHECK(a.clip_objective == b.clip_objective);
  CHECK(a.mean_kl == b.mean_kl);
  CHECK(a.verify_loss == b.verify_loss);
}

TEST_CASE("lambda zero generative matches verifier-free training bit for bit") {
  Vocab v(10);
  std::vector<Episode> eps = hand_batch(v);
  for (Method m : {Method::kGrpo, Method::kRloo, Method::kVineppo, Method::kPpo}) {
    RunConfig with = tiny_config(), without = tiny_config();
    with.method = m;
    without.method = m;
    with.verifier_mode = VerifierMode::kGenerative;
    with.lambda_max = 0.0;
    without.verifier_mode = VerifierMode::kNone;
    without.lambda_max = 0.0;
    PolicyParams pw, po;
    ReferenceParams ref = make_reference(pw);
    Rng vw(7), mw(8), vo(7), mo(8);
    StepMetrics sw = unified_step(pw, ref, eps, with, 0, vw, mw);
    StepMetrics so = unified_step(po, ref, eps, without, 0, vo, mo);
    CHECK(pw.w == po.w);
    CHECK(pw.v == po.v);
    CHECK(pw.u_bce == po.u_bce);
    CHECK(sw.clip_objective == so.clip_objective);
    // the generative run still reports the (ungradiented) verify loss
    CHECK(std::isfinite(sw.verify_loss));
    CHECK(std::isnan(so.verify_loss));
  }
}

TEST_CASE("one step raises the probability of the rewarded solution") {
  Vocab v(10);
  std::vector<Episode> eps = hand_batch(v);
  RunConfig cfg = tiny_config();
  cfg.method = Method::kGrpo;
  cfg.verifier_mode = VerifierMode::kNone;
  cfg.kl_beta = 0.0;
  cfg.lambda_max = 0.0;
  PolicyParams p;
  ReferenceParams ref = make_reference(p);
  double before0 = solution_logprob(p, eps[0]);
  double before1 = solution_logprob(p, eps[1]);
  Rng vr(1), mr(2);
  unified_step(p, ref, eps, cfg, 0, vr, mr);
  CHECK(solution_logprob(p, eps[0]) > before0);   // rewarded solution up
  CHECK(solution_logprob(p, eps[1]) < before1);   // punished solution down
}

TEST_CASE("unified_step rejects malformed grouping") {
  Vocab v(10);
  RunConfig cfg = tiny_config();
  PolicyParams p;
  ReferenceParams ref = make_reference(p);
  Rng vr(1), mr(2);

  std::vector<Episode> empty;
  CHECK_THROWS_AS(unified_step(p, ref, empty, cfg, 0, vr, mr), std::invalid_argument);

  std::vector<Episode> odd = hand_batch(v);
  odd.pop_back();  // no longer a multiple of group_size
  CHECK_THROWS_AS(unified_step(p, ref, odd, cfg, 0, vr, mr), std::invalid_argument);

  std::vector<Episode> mixed = hand_batch(v);
  mixed[1].task.prompt = mixed[2].task.prompt;  // prompt mismatch inside a group
  CHECK_THROWS_AS(unified_step(p, ref, mixed, cfg, 0, vr, mr), std::invalid_argument);

  std::vector<Episode> merged = hand_batch(v);
  for (Episode& e : merged) e.group_id = 0;  // adjacent groups share an id
  merged[2].task = merged[0].task;
  merged[3].task = merged[0].task;
  CHECK_THROWS_AS(unified_step(p, ref, merged, cfg, 0, vr, mr), std::invalid_argument);
}

TEST_CASE("ppo value head moves toward discounted returns") {
  Vocab v(10);
  std::vector<Episode> eps = hand_batch(v);
  RunConfig cfg = tiny_config();
  cfg.method = Method::kPpo;
  cfg.verifier_mode = VerifierMode::kNone;
  cfg.gae_gamma = 0.9;
  PolicyParams p;
  ReferenceParams ref = make_reference(p);
  Rng vr(1), mr(2);
  StepMetrics m1 = unified_step(p, ref, eps, cfg, 0, vr, mr);
  bool any_nonzero = false;
  for (double x : p.v) any_nonzero |= (x != 0.0);
  CHECK(any_nonzero);
  // a few more steps shrink the value loss
  StepMetrics m2{};
  for (int i = 1; i <= 5; ++i) m2 = unified_step(p, ref, eps, cfg, i, vr, mr);
  CHECK(m2.value_loss < m1.value_loss);
}

TEST_CASE("bce and reg heads train on their own parameters") {
  Vocab v(10);
  std::vector<Episode> eps = hand_batch(v);
  for (VerifierMode vm : {VerifierMode::kBceHead, VerifierMode::kRegHead}) {
    RunConfig cfg = tiny_config();
    cfg.verifier_mode = vm;
    PolicyParams p;
    ReferenceParams ref = make_reference(p);
    Rng vr(1), mr(2);
    unified_step(p, ref, eps, cfg, 0, vr, mr);
    bool bce_moved = false, reg_moved = false;
    for (double x : p.u_bce) bce_moved |= (x != 0.0);
    for (double x : p.u_reg) reg_moved |= (x != 0.0);
    CHECK(bce_moved == (vm == VerifierMode::kBceHead));
    CHECK(reg_moved == (vm == VerifierMode::kRegHead));
  }
}

TEST_CASE("make_streams is seed-deterministic and separates streams") {
  TrainStreams a = make_streams(42), b = make_streams(42), c = make_streams(43);
  CHECK(a.task.next_u64() == b.task.next_u64());
  CHECK(a.rollout.next_u64() == b.rollout.next_u64());
  TrainStreams fresh = make_streams(42);
  std::uint64_t t = fresh.task.next_u64();
  std::uint64_t r = fresh.rollout.next_u64();
  std::uint64_t v = fresh.verify.next_u64();
  CHECK(t != r);
  CHECK(r != v);
  CHECK(make_streams(43).task.next_u64() == c.task.next_u64());
}

TEST_CASE("train smoke run") {
  RunConfig cfg = tiny_config();
  cfg.iterations = 3;
  cfg.batch_prompts = 4;
  TrainResult res = train(cfg);
  REQUIRE(res.iterations.size() == 3);
  CHECK(res.episodes.size() == 3u * 4u * 2u);
  CHECK(res.episode_iteration.size() == res.episodes.size());
  CHECK(res.episode_score.size() == res.episodes.size());
  CHECK(res.episode_iteration.front() == 0);
  CHECK(res.episode_iteration.back() == 2);
  for (const IterationRecord& rec : res.iterations) {
    CHECK(rec.heldout_pass1 >= 0.0);
    CHECK(rec.heldout_pass1 <= 1.0);
    CHECK(rec.verifier_acc >= 0.0);
    CHECK(rec.verifier_acc <= 1.0);
    CHECK(std::isnan(rec.metrics.value_loss));  // GRPO has no value head
  }
  CHECK(res.params.fc.window == cfg.window);
  CHECK(res.params.fc.digit_tuple == cfg.digit_tuple);
  // the reference is the zero initialization
  for (double x : res.ref.w) CHECK(x == 0.0);

  TrainResult again = train(cfg);
  CHECK(again.params.w == res.params.w);
  REQUIRE(again.episodes.size() == res.episodes.size());
  for (std::size_t i = 0; i < res.episodes.size(); ++i) {
    CHECK(again.episodes[i].solution == res.episodes[i].solution);
    CHECK(again.episode_score[i] == res.episode_score[i]);
  }
  for (std::size_t i = 0; i < res.iterations.size(); ++i) {
    CHECK(again.iterations[i].heldout_pass1 == res.iterations[i].heldout_pass1);
    CHECK(again.iterations[i].metrics.clip_objective == res.iterations[i].metrics.clip_objective);
  }

  RunConfig none = cfg;
  none.iterations = 0;
  TrainResult empty = train(none);
  CHECK(empty.iterations.empty());
  CHECK(empty.episodes.empty());

  RunConfig bad = cfg;
  bad.group_size = 0;
  CHECK_THROWS_AS(train(bad), std::invalid_argument);
}
