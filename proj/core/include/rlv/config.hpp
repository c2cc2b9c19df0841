#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rlv/errors.hpp"
#include "rlv/trainer.hpp"

namespace rlv {

// One `key = value` assignment and where it came from (file line, or a
// synthetic origin like "env RLV_..." / "--set").
struct KeyValue {
  std::string key;
  std::string value;
  std::string origin;
};

// Flat `key = value` config text: '#' starts a comment, blank lines are
// skipped, keys are dotted lowercase identifiers. Later assignments win
// within one source. Throws ConfigError with a line-numbered message.
std::vector<KeyValue> parse_config_text(std::string_view text);

// parse_config_text over a file; unreadable file -> ConfigError.
std::vector<KeyValue> parse_config_file(const std::string& path);

// Maps environment entries with the RLV_ prefix to config keys: strip the
// prefix, lowercase, "__" becomes ".". RLV_ROLLOUT__MAX_LEN=16 is
// rollout.max_len = 16. Entries are (name, value) pairs so tests can feed
// synthetic environments.
std::vector<KeyValue> env_overrides(
    std::span<const std::pair<std::string, std::string>> env);

// env_overrides over the process environment.
std::vector<KeyValue> process_env_overrides();

// `key=value` strings from --set flags; malformed -> ConfigError.
std::vector<KeyValue> cli_overrides(std::span<const std::string> sets);

// Merge sources (later sources take precedence: file, then env, then CLI),
// validate every key and value, and build the run configuration. `method`
// must be assigned by some source. Unknown keys and unparsable values raise
// ConfigError naming the key and its origin.
RunConfig run_config_from(std::span<const std::vector<KeyValue>> sources);

// Canonical echo: every key in a fixed order, `key = value`, one per line.
// Two configs are the same run iff their echoes are byte-identical.
std::string canonical_config(const RunConfig& cfg);

// FNV-1a 64-bit hash of the canonical echo, as 16 lowercase hex digits.
std::string run_id(const RunConfig& cfg);

}  // namespace rlv
