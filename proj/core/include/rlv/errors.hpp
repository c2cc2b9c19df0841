#pragma once

#include <stdexcept>

namespace rlv {

// Configuration problems (syntax, unknown keys, bad values) — CLI exit 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or corrupt on-disk artifacts — CLI exit 3.
struct ArtifactError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Remote generation failures (unreachable, timeout, bad reply) — CLI exit 4.
struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rlv
