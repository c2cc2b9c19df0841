#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rlv/advantage.hpp"
#include "rlv/rng.hpp"
#include "rlv/task.hpp"

using namespace rlv;

namespace {

// Straight-line re-derivations used as oracles for the library versions.
std::vector<double> naive_grpo(const std::vector<double>& r) {
  double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
  double var = 0.0;
  for (double x : r) var += (x - mean) * (x - mean);
  var /= static_cast<double>(r.size());
  std::vector<double> a;
  for (double x : r) a.push_back((x - mean) / (std::sqrt(var) + 1e-8));
  return a;
}

std::vector<double> naive_rloo(const std::vector<double>& r) {
  std::vector<double> a;
  for (std::size_t i = 0; i < r.size(); ++i) {
    double others = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j)
      if (j != i) others += r[j];
    a.push_back(r[i] - others / static_cast<double>(r.size() - 1));
  }
  return a;
}

// O(T^2) definition: adv[t] = sum_l (gamma*lambda)^l * delta_{t+l}.
std::vector<double> naive_gae(const std::vector<double>& rew, const std::vector<double>& val,
                              double gamma, double lambda) {
  std::size_t len = rew.size();
  std::vector<double> adv(len, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    double w = 1.0;
    for (std::size_t l = t; l < len; ++l) {
      double delta = rew[l] + gamma * val[l + 1] - val[l];
      adv[t] += w * delta;
      w *= gamma * lambda;
    }
  }
  return adv;
}

int win_idx(int pos, int tok) { return pos * kVocabSize + (is_digit_token(tok) ? 0 : tok); }
int residue_idx(const FeatureConfig& fc, int r, int claim) {
  return fc.window * kVocabSize + fc.tuple_dim() + r * 11 + claim;
}

PolicyParams perfect_policy() {
  FeatureConfig fc;
  PolicyParams p(fc);
  int last = fc.window - 1;
  p.row(win_idx(last, kSep))[kAnswer] = 50.0;
  double* ans_row = p.row(win_idx(last, kAnswer));
  for (int c = 0; c < kVocabSize; ++c)
    if (live_column(fc, win_idx(last, kAnswer), c)) ans_row[c] = -50.0;
  for (int r = 0; r < 10; ++r) p.row(residue_idx(fc, r, 10))[r] = 50.0;
  p.row(win_idx(last, 0))[kEos] = 50.0;
  return p;
}

}  // namespace

TEST_CASE("grpo golden group") {
  std::vector<double> r = {1.0, 0.0, 0.0, 0.0};
  std::vector<double> a = grpo_advantages(r);
  REQUIRE(a.size() == 4);
  // mean 0.25, population std sqrt(0.1875), denom +1e-8
  CHECK(a[0] == doctest::Approx(1.7320507675688783).epsilon(1e-15));
  for (int i = 1; i < 4; ++i)
    CHECK(a[static_cast<std::size_t>(i)] == doctest::Approx(-0.57735025585629274).epsilon(1e-15));
}

TEST_CASE("grpo zero-variance group gives zeros") {
  std::vector<double> ones = {1.0, 1.0, 1.0};
  for (double x : grpo_advantages(ones)) CHECK(x == 0.0);
  std::vector<double> zeros = {0.0, 0.0, 0.0, 0.0, 0.0};
  for (double x : grpo_advantages(zeros)) CHECK(x == 0.0);
}

TEST_CASE("grpo group size bound") {
  std::vector<double> one = {1.0};
  CHECK_THROWS_AS(grpo_advantages(one), std::invalid_argument);
  std::vector<double> none;
  CHECK_THROWS_AS(grpo_advantages(none), std::invalid_argument);
}

TEST_CASE("rloo golden group") {
  std::vector<double> r = {1.0, 0.0, 0.0, 0.0};
  std::vector<double> a = rloo_advantages(r);
  CHECK(a[0] == 1.0);
  for (int i = 1; i < 4; ++i)
    CHECK(a[static_cast<std::size_t>(i)] == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
  std::vector<double> one = {0.5};
  CHECK_THROWS_AS(rloo_advantages(one), std::invalid_argument);
}

TEST_CASE("grpo and rloo match their oracles on random groups") {
  Rng rng(404);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = rng.uniform_int(2, 16);
    std::vector<double> r(static_cast<std::size_t>(n));
    // half the trials binary (the trained regime), half arbitrary reals
    for (double& x : r)
      x = (trial % 2) ? rng.next_double() : static_cast<double>(rng.uniform_int(0, 1));
    std::vector<double> g = grpo_advantages(r), gn = naive_grpo(r);
    std::vector<double> l = rloo_advantages(r), ln = naive_rloo(r);
    double gsum = 0.0, lsum = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(g[static_cast<std::size_t>(i)] - gn[static_cast<std::size_t>(i)]) <= 1e-9);
      CHECK(std::abs(l[static_cast<std::size_t>(i)] - ln[static_cast<std::size_t>(i)]) <= 1e-9);
      gsum += g[static_cast<std::size_t>(i)];
      lsum += l[static_cast<std::size_t>(i)];
    }
    CHECK(std::abs(gsum) <= 1e-9);  // both estimators are zero-sum per group
    CHECK(std::abs(lsum) <= 1e-9);
  }
}

TEST_CASE("gae golden trace") {
  std::vector<double> rew = {0.0, 0.0, 1.0};
  std::vector<double> val = {0.5, 0.25, 0.125, 0.0};
  std::vector<double> a = gae_advantages(rew, val, 0.9, 0.8);
  REQUIRE(a.size() == 3);
  CHECK(a[0] == doctest::Approx(0.0796).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(0.4925).epsilon(1e-12));
  CHECK(a[2] == doctest::Approx(0.875).epsilon(1e-12));
}

TEST_CASE("gae recurrence equals the power-sum definition") {
  Rng rng(2718);
  for (int trial = 0; trial < 300; ++trial) {
    int len = rng.uniform_int(1, 12);
    std::vector<double> rew(static_cast<std::size_t>(len)), val(static_cast<std::size_t>(len) + 1);
    for (double& x : rew) x = 2.0 * rng.next_double() - 1.0;
    for (double& x : val) x = 2.0 * rng.next_double() - 1.0;
    double gamma = rng.next_double();
    double lambda = rng.next_double();
    std::vector<double> fast = gae_advantages(rew, val, gamma, lambda);
    std::vector<double> slow = naive_gae(rew, val, gamma, lambda);
    for (int t = 0; t < len; ++t)
      CHECK(std::abs(fast[static_cast<std::size_t>(t)] - slow[static_cast<std::size_t>(t)]) <= 1e-12);
  }
}

TEST_CASE("gae with gamma=lambda=1 telescopes to return minus value") {
  std::vector<double> rew = {0.0, 0.0, 1.0};
  std::vector<double> val = {0.3, 0.1, 0.4, 0.0};
  std::vector<double> a = gae_advantages(rew, val, 1.0, 1.0);
  for (std::size_t t = 0; t < rew.size(); ++t) {
    double ret = 0.0;
    for (std::size_t s = t; s < rew.size(); ++s) ret += rew[s];
    CHECK(a[t] == doctest::Approx(ret - val[t]).epsilon(1e-14));
  }
}

TEST_CASE("gae validates the values length") {
  std::vector<double> rew = {0.0, 1.0};
  std::vector<double> bad = {0.5, 0.25};
  CHECK_THROWS_AS(gae_advantages(rew, bad, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("vineppo_value scores a finished partial without sampling") {
  Vocab v(10);
  PolicyParams p;  // zero policy; it must not matter for a finished partial
  TaskInstance t;
  t.prompt = {3, kPlus, 4, kSep};
  t.ground_truth = 7;
  std::vector<int> done_right = {kAnswer, 7, kEos};
  std::vector<int> done_wrong = {kAnswer, 2, kEos};
  Rng rng(1), probe(1);
  CHECK(vineppo_value(v, p, t, done_right, 5, 10, rng) == 1.0);
  CHECK(vineppo_value(v, p, t, done_wrong, 5, 10, rng) == 0.0);
  // no rng draws were consumed for either
  CHECK(rng.next_u64() == probe.next_u64());
}

TEST_CASE("vineppo_value is a deterministic mean in [0,1]") {
  Vocab v(10);
  PolicyParams p;
  TaskInstance t = generate_task(v, 2, Domain::kAddOnly, 17ull);
  std::vector<int> partial = {kAnswer};
  Rng r1(9), r2(9);
  double a = vineppo_value(v, p, t, partial, 8, 6, r1);
  double b = vineppo_value(v, p, t, partial, 8, 6, r2);
  CHECK(a == b);
  CHECK(a >= 0.0);
  CHECK(a <= 1.0);
  CHECK_THROWS_AS(vineppo_value(v, p, t, partial, 0, 6, r1), std::invalid_argument);
}

TEST_CASE("vineppo_value is 1 under the perfect policy") {
  Vocab v(10);
  PolicyParams p = perfect_policy();
  Rng rng(4);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TaskInstance t = generate_task(v, 2, Domain::kAddOnly, seed);
    std::vector<int> empty;
    CHECK(vineppo_value(v, p, t, empty, 4, 5, rng) == 1.0);
  }
}

TEST_CASE("vineppo advantages telescope and vanish under a deterministic policy") {
  Vocab v(10);
  PolicyParams p = perfect_policy();
  TaskInstance t = generate_task(v, 2, Domain::kAddOnly, 23ull);
  std::vector<int> sol = {kAnswer, t.ground_truth, kEos};
  Rng rng(12);
  std::vector<double> adv = vineppo_advantages(v, p, t, sol, 4, 5, rng);
  REQUIRE(adv.size() == 3);
  for (double a : adv) CHECK(a == 0.0);  // every state already has value 1

  // telescoping on a stochastic policy: sum(adv) = reward - V(s_0)
  PolicyParams zero;
  Rng r_adv(55), r_v0(55);
  std::vector<int> attempt = {kAnswer, 3, kEos};
  std::vector<double> adv2 = vineppo_advantages(v, zero, t, attempt, 3, 6, r_adv);
  std::vector<int> empty;
  double v0 = vineppo_value(v, zero, t, empty, 3, 6, r_v0);  // same draws as values[0]
  double sum = std::accumulate(adv2.begin(), adv2.end(), 0.0);
  double r = (t.ground_truth == 3) ? 1.0 : 0.0;
  CHECK(sum == doctest::Approx(r - v0).epsilon(1e-12));

  std::vector<int> none;
  CHECK_THROWS_AS(vineppo_advantages(v, zero, t, none, 3, 6, r_adv), std::invalid_argument);
}
