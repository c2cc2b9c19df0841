#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rlv/errors.hpp"
#include "rlv/policy.hpp"
#include "rlv/scaling.hpp"

namespace rlv {

// Minimal completion interface shared by the in-process policy and the
// remote endpoint, so budget forcing and the demos are backend-agnostic.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  // Continue `context` by at most max_new tokens, stopping after EOS.
  virtual std::vector<int> generate(std::span<const int> context, int max_new) = 0;
};

// Samples from the policy's softmax at a fixed temperature. Owns its RNG
// stream so a factory can mint independent backends.
class BuiltinBackend : public GenerationBackend {
 public:
  BuiltinBackend(const PolicyParams& params, double temperature, Rng rng);
  std::vector<int> generate(std::span<const int> context, int max_new) override;

 private:
  const PolicyParams& params_;
  double temperature_;
  Rng rng_;
};

struct RemoteSpec {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string path = "/v1/completions";
  std::string model = "default";
  int timeout_ms = 2000;     // connect and read
  int max_retries = 2;       // extra attempts after the first
  int backoff_base_ms = 100; // doubles per retry
};

// Speaks a one-shot completion protocol: request {model, prompt, max_tokens,
// temperature}, response {text}. Prompts and completions travel as
// space-separated token names. Transient failures (connect errors, 5xx) are
// retried with exponential backoff; exhaustion raises BackendError, as does
// a well-delivered but malformed response.
class RemoteBackend : public GenerationBackend {
 public:
  RemoteBackend(RemoteSpec spec, double temperature);
  ~RemoteBackend() override;
  std::vector<int> generate(std::span<const int> context, int max_new) override;
  int retries_used() const { return retries_used_; }

 private:
  struct Impl;
  RemoteSpec spec_;
  double temperature_;
  int retries_used_ = 0;
  std::unique_ptr<Impl> impl_;
};

// Adapts a backend to the GenerateFn used by budget forcing.
GenerateFn backend_generate_fn(GenerationBackend& backend);

}  // namespace rlv
