#include "rlv/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rlv {
namespace {

constexpr int kDigitPadBucket = 10;  // non-digit filler in the tuple group

void logits_from(const FeatureConfig& fc, const double* w, const std::vector<int>& active,
                 double* logits) {
  std::fill(logits, logits + kVocabSize, 0.0);
  const int tuple_start = fc.window * kVocabSize;
  for (int f : active) {
    const double* r = w + static_cast<std::size_t>(f) * kVocabSize;
    if (f < tuple_start) {
      for (int c = 0; c < kVocabSize; ++c)
        if (!is_digit_token(c) && c != kYes && c != kNo) logits[c] += r[c];
    } else {
      for (int c = 0; c < 10; ++c) logits[c] += r[c];
      logits[kYes] += r[kYes];
      logits[kNo] += r[kNo];
    }
  }
}

// Returns log(sum(exp(logits))) and writes the softmax into probs.
double softmax(const double* logits, double* probs) {
  double mx = logits[0];
  for (int c = 1; c < kVocabSize; ++c) mx = std::max(mx, logits[c]);
  if (!std::isfinite(mx)) throw std::domain_error("non-finite logits");
  double sum = 0.0;
  for (int c = 0; c < kVocabSize; ++c) {
    probs[c] = std::exp(logits[c] - mx);
    sum += probs[c];
  }
  for (int c = 0; c < kVocabSize; ++c) probs[c] /= sum;
  return mx + std::log(sum);
}

int sample_from(const double* probs, Rng& rng) {
  double u = rng.next_double();
  double acc = 0.0;
  for (int c = 0; c < kVocabSize; ++c) {
    acc += probs[c];
    if (u < acc) return c;
  }
  return kVocabSize - 1;
}

int argmax(const double* x) {
  int best = 0;
  for (int c = 1; c < kVocabSize; ++c)
    if (x[c] > x[best]) best = c;
  return best;
}

std::string fmt(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double x = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("bad number in params file: " + std::string(s));
  return x;
}

void read_values(std::istream& in, std::vector<double>& out, std::size_t n) {
  out.resize(n);
  std::string tok;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in >> tok)) throw std::runtime_error("params file truncated");
    out[i] = parse_double(tok);
  }
}

}  // namespace

void features_into(const FeatureConfig& fc, std::span<const int> context, std::vector<int>& out) {
  out.clear();
  const int w = fc.window;
  if (w < 1 || w > 64) throw std::invalid_argument("window must be in [1, 64]");
  const std::size_t n = context.size();
  for (int pos = 0; pos < w; ++pos) {
    // right-aligned: pos w-1 is the last context token
    int back = w - 1 - pos;
    int tok = (static_cast<std::size_t>(back) < n) ? context[n - 1 - static_cast<std::size_t>(back)] : kPad;
    if (tok < 0 || tok >= kVocabSize) throw std::invalid_argument("token id out of range");
    // digits share one window slot: window rows carry format only, so digit
    // identity reaches the logits through the tuple group alone and format
    // rows cannot build up a constant-digit preference
    out.push_back(pos * kVocabSize + (is_digit_token(tok) ? 0 : tok));
  }
  // Leading digits of the whole context (the task operands, then the first
  // answer digit), right-filled with the non-digit bucket. Anchoring at the
  // front keeps the operand tuple stable however long the solution runs.
  int tuple_id = 0;
  int taken = 0;
  for (std::size_t i = 0; i < n && taken < fc.digit_tuple; ++i) {
    int tok = context[i];
    if (tok < 0 || tok >= kVocabSize) throw std::invalid_argument("token id out of range");
    if (is_digit_token(tok)) {
      tuple_id = tuple_id * 11 + tok;
      ++taken;
    }
  }
  for (int j = taken; j < fc.digit_tuple; ++j) tuple_id = tuple_id * 11 + kDigitPadBucket;
  out.push_back(w * kVocabSize + tuple_id);
  // Residue pair: (digit sum of the prompt mod residue_base, last digit of
  // the claim after the most recent ANSWER). Unlike the exact tuple this
  // collapses operand identity to a shared residue class, so weight learned
  // on one task carries to every task with the same digit sum.
  int r = kDigitPadBucket;
  long long acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int tok = context[i];
    if (tok == kSep) {
      r = static_cast<int>(acc % fc.residue_base);
      break;
    }
    if (is_digit_token(tok)) acc += tok;
  }
  int claim = kDigitPadBucket;
  bool in_run = false;
  for (std::size_t i = 0; i < n; ++i) {
    int tok = context[i];
    if (tok == kAnswer) {
      claim = kDigitPadBucket;
      in_run = true;
    } else if (in_run) {
      if (is_digit_token(tok)) claim = tok;  // run continues; keep its last digit
      else in_run = false;                   // run closed by a non-digit
    }
  }
  out.push_back(w * kVocabSize + fc.tuple_dim() + r * 11 + claim);
}

std::vector<int> features(const FeatureConfig& fc, std::span<const int> context) {
  std::vector<int> out;
  features_into(fc, context, out);
  return out;
}

PolicyParams::PolicyParams(FeatureConfig f) : fc(f) {
  std::size_t d = static_cast<std::size_t>(fc.dim());
  w.assign(d * kVocabSize, 0.0);
  v.assign(d, 0.0);
  u_bce.assign(d, 0.0);
  u_reg.assign(d, 0.0);
}

ReferenceParams make_reference(const PolicyParams& p) { return ReferenceParams{p.w}; }

Dist next_token_dist(const PolicyParams& p, std::span<const int> context) {
  std::vector<int> active;
  features_into(p.fc, context, active);
  double logits[kVocabSize];
  logits_from(p.fc, p.w.data(), active, logits);
  Dist d;
  softmax(logits, d.data());
  return d;
}

namespace {

// One autoregressive step shared by the samplers: returns (token, untempered
// logprob of that token).
std::pair<int, double> step(const PolicyParams& p, const std::vector<int>& ctx,
                            const SampleOptions& opt, Rng& rng, std::vector<int>& scratch) {
  features_into(p.fc, ctx, scratch);
  double logits[kVocabSize];
  logits_from(p.fc, p.w.data(), scratch, logits);
  double probs[kVocabSize];
  double lse = softmax(logits, probs);
  int tok;
  if (opt.greedy) {
    tok = argmax(logits);
  } else if (opt.temperature == 1.0) {
    tok = sample_from(probs, rng);
  } else {
    double tempered[kVocabSize];
    for (int c = 0; c < kVocabSize; ++c) tempered[c] = logits[c] / opt.temperature;
    double tprobs[kVocabSize];
    softmax(tempered, tprobs);
    tok = sample_from(tprobs, rng);
  }
  return {tok, logits[tok] - lse};
}

}  // namespace

Episode sample_solution(const Vocab& vocab, const PolicyParams& p, const TaskInstance& task,
                        int max_len, const SampleOptions& opt, Rng& rng) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  if (!opt.greedy && !(opt.temperature > 0.0))
    throw std::invalid_argument("temperature must be positive");
  Episode e;
  e.task = task;
  std::vector<int> ctx = task.prompt;
  std::vector<int> scratch;
  while (static_cast<int>(e.solution.size()) < max_len) {
    auto [tok, lp] = step(p, ctx, opt, rng, scratch);
    e.solution.push_back(tok);
    e.old_logprobs.push_back(lp);
    ctx.push_back(tok);
    if (tok == kEos) break;
  }
  e.reward = reward(vocab, task, e.solution);
  return e;
}

Continuation sample_continuation(const Vocab& vocab, const PolicyParams& p,
                                 const TaskInstance& task, std::span<const int> partial,
                                 int max_len, const SampleOptions& opt, Rng& rng) {
  (void)vocab;
  if (!opt.greedy && !(opt.temperature > 0.0))
    throw std::invalid_argument("temperature must be positive");
  Continuation c;
  if (!partial.empty() && partial.back() == kEos) return c;
  std::vector<int> ctx;
  ctx.reserve(task.prompt.size() + partial.size() + 8);
  ctx.insert(ctx.end(), task.prompt.begin(), task.prompt.end());
  ctx.insert(ctx.end(), partial.begin(), partial.end());
  std::vector<int> scratch;
  int total = static_cast<int>(partial.size());
  while (total < max_len) {
    auto [tok, lp] = step(p, ctx, opt, rng, scratch);
    c.tokens.push_back(tok);
    c.logprobs.push_back(lp);
    ctx.push_back(tok);
    ++total;
    if (tok == kEos) break;
  }
  return c;
}

LogProbGrad logprob_and_grad(const PolicyParams& p, std::span<const int> context, int token) {
  if (token < 0 || token >= kVocabSize) throw std::invalid_argument("token id out of range");
  LogProbGrad g;
  features_into(p.fc, context, g.active);
  double logits[kVocabSize];
  logits_from(p.fc, p.w.data(), g.active, logits);
  double probs[kVocabSize];
  double lse = softmax(logits, probs);
  g.logprob = logits[token] - lse;
  for (int c = 0; c < kVocabSize; ++c) g.coeff[c] = (c == token ? 1.0 : 0.0) - probs[c];
  return g;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    kl += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return kl;
}

namespace {

// Shared KL plumbing: exact per-context KL(pi || ref) from logits.
struct KlParts {
  double kl;
  double p[kVocabSize];
  double dlogp[kVocabSize];  // log p - log q
};

KlParts kl_parts(const PolicyParams& p, const ReferenceParams& ref,
                 const std::vector<int>& active) {
  double lp[kVocabSize], lq[kVocabSize];
  logits_from(p.fc, p.w.data(), active, lp);
  logits_from(p.fc, ref.w.data(), active, lq);
  KlParts out;
  double q[kVocabSize];
  double lse_p = softmax(lp, out.p);
  double lse_q = softmax(lq, q);
  out.kl = 0.0;
  for (int c = 0; c < kVocabSize; ++c) {
    out.dlogp[c] = (lp[c] - lse_p) - (lq[c] - lse_q);
    out.kl += out.p[c] * out.dlogp[c];
  }
  return out;
}

}  // namespace

double kl_to_ref(const PolicyParams& p, const ReferenceParams& ref, std::span<const int> context) {
  std::vector<int> active;
  features_into(p.fc, context, active);
  return kl_parts(p, ref, active).kl;
}

double kl_to_ref_grad(const PolicyParams& p, const ReferenceParams& ref,
                      std::span<const int> context, double scale, std::vector<double>& grad) {
  std::vector<int> active;
  features_into(p.fc, context, active);
  KlParts parts = kl_parts(p, ref, active);
  for (int f : active) {
    double* g = grad.data() + static_cast<std::size_t>(f) * kVocabSize;
    for (int c = 0; c < kVocabSize; ++c) {
      if (!live_column(p.fc, f, c)) continue;
      g[c] += scale * parts.p[c] * (parts.dlogp[c] - parts.kl);
    }
  }
  return parts.kl;
}

double dot_features(const std::vector<double>& u, const FeatureConfig& fc,
                    std::span<const int> context) {
  std::vector<int> active;
  features_into(fc, context, active);
  double s = 0.0;
  for (int f : active) s += u[static_cast<std::size_t>(f)];
  return s;
}

double value(const PolicyParams& p, std::span<const int> context) {
  return dot_features(p.v, p.fc, context);
}

void save_params(const PolicyParams& p, const Vocab& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  int dim = p.fc.dim();
  out << "rlvparams 1\n";
  out << "modulus " << vocab.modulus << "\n";
  out << "window " << p.fc.window << "\n";
  out << "digit_tuple " << p.fc.digit_tuple << "\n";
  out << "residue_base " << p.fc.residue_base << "\n";
  out << "vocab " << kVocabSize << "\n";
  out << "heads 1 1 1\n";
  out << "W\n";
  for (int f = 0; f < dim; ++f) {
    const double* r = p.row(f);
    for (int c = 0; c < kVocabSize; ++c) {
      if (c) out.put(' ');
      out << fmt(r[c]);
    }
    out.put('\n');
  }
  auto head = [&](const char* name, const std::vector<double>& u) {
    out << name << "\n";
    for (int f = 0; f < dim; ++f) {
      if (f) out.put(' ');
      out << fmt(u[static_cast<std::size_t>(f)]);
    }
    out.put('\n');
  };
  head("V", p.v);
  head("U_BCE", p.u_bce);
  head("U_REG", p.u_reg);
  out << "END\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

PolicyParams load_params(const std::string& path, Vocab* vocab_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open params file: " + path);
  std::string word;
  auto expect = [&](const char* what) {
    if (!(in >> word) || word != what)
      throw std::runtime_error("params file: expected '" + std::string(what) + "', got '" + word + "'");
  };
  expect("rlvparams");
  int version, modulus, window, digit_tuple, residue_base, vocab_n, h_v, h_bce, h_reg;
  if (!(in >> version) || version != 1) throw std::runtime_error("unsupported params version");
  expect("modulus");
  in >> modulus;
  expect("window");
  in >> window;
  expect("digit_tuple");
  in >> digit_tuple;
  expect("residue_base");
  in >> residue_base;
  expect("vocab");
  in >> vocab_n;
  expect("heads");
  in >> h_v >> h_bce >> h_reg;
  if (!in) throw std::runtime_error("params file: malformed header");
  if (vocab_n != kVocabSize) throw std::runtime_error("params file: vocab size mismatch");
  if (window < 1 || digit_tuple < 0 || residue_base < 1)
    throw std::runtime_error("params file: bad feature config");
  Vocab vocab(modulus);
  PolicyParams p(FeatureConfig{window, digit_tuple, residue_base});
  std::size_t dim = static_cast<std::size_t>(p.fc.dim());
  expect("W");
  read_values(in, p.w, dim * kVocabSize);
  if (h_v) {
    expect("V");
    read_values(in, p.v, dim);
  }
  if (h_bce) {
    expect("U_BCE");
    read_values(in, p.u_bce, dim);
  }
  if (h_reg) {
    expect("U_REG");
    read_values(in, p.u_reg, dim);
  }
  expect("END");
  if (vocab_out) *vocab_out = vocab;
  return p;
}

}  // namespace rlv
