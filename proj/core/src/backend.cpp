#include "rlv/backend.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace rlv {

BuiltinBackend::BuiltinBackend(const PolicyParams& params, double temperature, Rng rng)
    : params_(params), temperature_(temperature), rng_(rng) {
  if (!(temperature > 0.0)) throw std::invalid_argument("backend temperature must be positive");
}

std::vector<int> BuiltinBackend::generate(std::span<const int> context, int max_new) {
  std::vector<int> ctx(context.begin(), context.end());
  std::vector<int> out;
  for (int i = 0; i < max_new; ++i) {
    Dist dist = next_token_dist(params_, ctx);
    if (temperature_ != 1.0) {  // p^(1/T) renormalized == softmax(logits/T)
      double total = 0.0;
      for (double& p : dist) total += (p = std::pow(p, 1.0 / temperature_));
      for (double& p : dist) p /= total;
    }
    double u = rng_.next_double();
    int token = kVocabSize - 1;
    double acc = 0.0;
    for (int c = 0; c < kVocabSize; ++c) {
      acc += dist[static_cast<std::size_t>(c)];
      if (u < acc) {
        token = c;
        break;
      }
    }
    out.push_back(token);
    ctx.push_back(token);
    if (token == kEos) break;
  }
  return out;
}

struct RemoteBackend::Impl {
  httplib::Client client;
  explicit Impl(const RemoteSpec& spec) : client(spec.host, spec.port) {
    client.set_connection_timeout(std::chrono::milliseconds(spec.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(spec.timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(spec.timeout_ms));
  }
};

RemoteBackend::RemoteBackend(RemoteSpec spec, double temperature)
    : spec_(std::move(spec)), temperature_(temperature), impl_(std::make_unique<Impl>(spec_)) {}

RemoteBackend::~RemoteBackend() = default;

std::vector<int> RemoteBackend::generate(std::span<const int> context, int max_new) {
  nlohmann::json body = {
      {"model", spec_.model},
      {"prompt", detokenize(context.data(), context.size())},
      {"max_tokens", max_new},
      {"temperature", temperature_},
  };
  std::string payload = body.dump();

  httplib::Result res;
  for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
    if (attempt > 0) {
      ++retries_used_;
      std::this_thread::sleep_for(
          std::chrono::milliseconds(spec_.backoff_base_ms << (attempt - 1)));
    }
    res = impl_->client.Post(spec_.path, payload, "application/json");
    if (res && res->status < 500) break;  // transient = no reply or 5xx
  }
  if (!res)
    throw BackendError("backend unreachable after " + std::to_string(spec_.max_retries) +
                       " retries: " + spec_.host + ":" + std::to_string(spec_.port));
  if (res->status != 200)
    throw BackendError("backend returned status " + std::to_string(res->status));

  nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("text") || !reply["text"].is_string())
    throw BackendError("malformed backend response: " + res->body.substr(0, 200));
  std::vector<int> tokens;
  try {
    tokenize_into(reply["text"].get<std::string>(), tokens);
  } catch (const std::invalid_argument& e) {
    throw BackendError(std::string("backend returned unknown tokens: ") + e.what());
  }
  if (tokens.size() > static_cast<std::size_t>(max_new))
    tokens.resize(static_cast<std::size_t>(max_new));
  return tokens;
}

GenerateFn backend_generate_fn(GenerationBackend& backend) {
  return [&backend](std::span<const int> context, int max_new) {
    return backend.generate(context, max_new);
  };
}

}  // namespace rlv
