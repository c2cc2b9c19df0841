#include "rlv/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>

extern char** environ;

namespace rlv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key)
    if (!(std::islower(static_cast<unsigned char>(c)) ||
          std::isdigit(static_cast<unsigned char>(c)) || c == '_' || c == '.'))
      return false;
  return true;
}

template <typename T>
T parse_number(const KeyValue& kv) {
  T out{};
  std::string_view v = kv.value;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("config key '" + kv.key + "': bad value '" + kv.value + "' (" +
                      kv.origin + ")");
  return out;
}

template <typename Parser>
auto parse_named(const KeyValue& kv, Parser parser) {
  try {
    return parser(kv.value);
  } catch (const std::invalid_argument&) {
    throw ConfigError("config key '" + kv.key + "': bad value '" + kv.value + "' (" +
                      kv.origin + ")");
  }
}

struct KeySpec {
  std::string_view key;
  std::function<void(RunConfig&, const KeyValue&)> apply;
  std::function<std::string(const RunConfig&)> echo;
};

std::string fmt_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    std::vector<KeySpec> t;
    auto add_int = [&t](std::string_view key, int RunConfig::* f) {
      t.push_back({key,
                   [f](RunConfig& c, const KeyValue& kv) { c.*f = parse_number<int>(kv); },
                   [f](const RunConfig& c) { return std::to_string(c.*f); }});
    };
    auto add_double = [&t](std::string_view key, double RunConfig::* f) {
      t.push_back({key,
                   [f](RunConfig& c, const KeyValue& kv) { c.*f = parse_number<double>(kv); },
                   [f](const RunConfig& c) { return fmt_double(c.*f); }});
    };
    t.push_back({"method",
                 [](RunConfig& c, const KeyValue& kv) {
                   c.method = parse_named(kv, [](const std::string& v) { return parse_method(v); });
                 },
                 [](const RunConfig& c) { return std::string(method_name(c.method)); }});
    t.push_back({"seed",
                 [](RunConfig& c, const KeyValue& kv) {
                   c.seed = parse_number<std::uint64_t>(kv);
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    add_int("iterations", &RunConfig::iterations);
    add_int("batch.prompts", &RunConfig::batch_prompts);
    add_int("group.size", &RunConfig::group_size);
    add_int("rollout.max_len", &RunConfig::max_len);
    add_double("rollout.temperature", &RunConfig::temperature);
    add_double("clip.epsilon", &RunConfig::clip_epsilon);
    add_double("kl.beta", &RunConfig::kl_beta);
    add_double("lr.max", &RunConfig::lr_max);
    add_double("lr.head_max", &RunConfig::lr_head_max);
    add_double("ramp.fraction", &RunConfig::ramp_fraction);
    add_int("ppo.epochs", &RunConfig::ppo_epochs);
    t.push_back({"verify.mode",
                 [](RunConfig& c, const KeyValue& kv) {
                   c.verifier_mode = parse_named(
                       kv, [](const std::string& v) { return parse_verifier_mode(v); });
                 },
                 [](const RunConfig& c) {
                   return std::string(verifier_mode_name(c.verifier_mode));
                 }});
    add_double("verify.lambda_max", &RunConfig::lambda_max);
    add_int("vineppo.mc_samples", &RunConfig::vineppo_mc_samples);
    add_double("gae.gamma", &RunConfig::gae_gamma);
    add_double("gae.lambda", &RunConfig::gae_lambda);
    add_int("task.difficulty", &RunConfig::difficulty);
    t.push_back({"task.domain",
                 [](RunConfig& c, const KeyValue& kv) {
                   c.domain =
                       parse_named(kv, [](const std::string& v) { return parse_domain(v); });
                 },
                 [](const RunConfig& c) { return std::string(domain_name(c.domain)); }});
    add_int("task.modulus", &RunConfig::modulus);
    add_int("policy.window", &RunConfig::window);
    add_int("policy.digit_ngram", &RunConfig::digit_tuple);
    add_int("eval.heldout_tasks", &RunConfig::heldout_tasks);
    add_int("eval.probe_tasks", &RunConfig::probe_tasks);
    add_int("eval.probe_samples", &RunConfig::probe_samples);
    return t;
  }();
  return table;
}

const KeySpec* find_key(std::string_view key) {
  for (const KeySpec& spec : key_table())
    if (spec.key == key) return &spec;
  return nullptr;
}

}  // namespace

std::vector<KeyValue> parse_config_text(std::string_view text) {
  std::vector<KeyValue> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (std::size_t hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::string origin = "line " + std::to_string(line_no);
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(origin + ": expected 'key = value', got '" + std::string(line) + "'");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (!valid_key(key)) throw ConfigError(origin + ": invalid key '" + key + "'");
    if (value.empty()) throw ConfigError(origin + ": empty value for key '" + key + "'");
    out.push_back(KeyValue{std::move(key), std::move(value), std::move(origin)});
  }
  return out;
}

std::vector<KeyValue> parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<KeyValue> env_overrides(
    std::span<const std::pair<std::string, std::string>> env) {
  constexpr std::string_view kPrefix = "RLV_";
  std::vector<KeyValue> out;
  for (const auto& [name, value] : env) {
    if (name.rfind(kPrefix, 0) != 0) continue;
    std::string key;
    std::string_view rest = std::string_view(name).substr(kPrefix.size());
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (rest[i] == '_' && i + 1 < rest.size() && rest[i + 1] == '_') {
        key.push_back('.');
        ++i;
      } else {
        key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(rest[i]))));
      }
    }
    out.push_back(KeyValue{std::move(key), value, "env " + name});
  }
  std::sort(out.begin(), out.end(),
            [](const KeyValue& a, const KeyValue& b) { return a.key < b.key; });
  return out;
}

std::vector<KeyValue> process_env_overrides() {
  std::vector<std::pair<std::string, std::string>> env;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    std::size_t eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace_back(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
  }
  return env_overrides(env);
}

std::vector<KeyValue> cli_overrides(std::span<const std::string> sets) {
  std::vector<KeyValue> out;
  for (const std::string& s : sets) {
    std::size_t eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set expects key=value, got '" + s + "'");
    std::string key(trim(std::string_view(s).substr(0, eq)));
    std::string value(trim(std::string_view(s).substr(eq + 1)));
    if (!valid_key(key)) throw ConfigError("--set: invalid key '" + key + "'");
    if (value.empty()) throw ConfigError("--set: empty value for key '" + key + "'");
    out.push_back(KeyValue{std::move(key), std::move(value), "--set " + s});
  }
  return out;
}

RunConfig run_config_from(std::span<const std::vector<KeyValue>> sources) {
  RunConfig cfg;
  bool have_method = false;
  for (const std::vector<KeyValue>& source : sources) {
    for (const KeyValue& kv : source) {
      const KeySpec* spec = find_key(kv.key);
      if (!spec)
        throw ConfigError("unknown config key '" + kv.key + "' (" + kv.origin + ")");
      spec->apply(cfg, kv);
      if (kv.key == "method") have_method = true;
    }
  }
  if (!have_method) throw ConfigError("missing required key 'method'");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::string canonical_config(const RunConfig& cfg) {
  std::string out;
  for (const KeySpec& spec : key_table()) {
    out.append(spec.key);
    out.append(" = ");
    out.append(spec.echo(cfg));
    out.push_back('\n');
  }
  return out;
}

std::string run_id(const RunConfig& cfg) {
  std::string canon = canonical_config(cfg);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace rlv
