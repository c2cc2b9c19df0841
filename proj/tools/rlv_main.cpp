// Command-line front end: train, eval, sweep-n, budget-demo, bok, verify-probe.
#include <algorithm>
#include <charconv>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rlv/artifacts.hpp"
#include "rlv/config.hpp"
#include "rlv/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitArtifact = 3;
constexpr int kExitBackend = 4;

struct EvalFlags {
  std::string params_path;
  rlv::EvalSpec spec;
  std::string domain = "ADD_ONLY";
  std::string scorer = "GENERATIVE";

  void attach(CLI::App* cmd, bool with_scorer = true) {
    cmd->add_option("--params", params_path, "trained parameters file")->required();
    cmd->add_option("--tasks", spec.tasks, "eval tasks");
    cmd->add_option("--samples", spec.samples, "solutions per task");
    cmd->add_option("--difficulty", spec.difficulty, "operators per task");
    cmd->add_option("--domain", domain, "ADD_ONLY or MIXED");
    cmd->add_option("--temperature", spec.temperature, "sampling temperature");
    cmd->add_option("--max-len", spec.max_len, "solution token cap");
    cmd->add_option("--seed", spec.seed, "eval seed");
    cmd->add_option("--trials", spec.trials, "vote subsampling trials");
    if (with_scorer) cmd->add_option("--scorer", scorer, "verifier variant for scoring");
  }

  rlv::PolicyParams load(rlv::Vocab& vocab) {
    spec.domain = rlv::parse_domain(domain);
    spec.scorer = rlv::parse_scorer_kind(scorer);
    spec.validate();
    return rlv::load_params_artifact(params_path, vocab);
  }
};

double parse_double_or_config_error(const std::string& s, const std::string& what) {
  double out{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw rlv::ConfigError(what + ": bad number '" + s + "'");
  return out;
}

int run_bok(const std::string& path, int k) {
  // Each line: "<alpha> <score>"; sorted by score descending (input order
  // breaks ties) before the estimate.
  std::string text = rlv::read_text_file(path);
  std::vector<std::pair<double, double>> items;  // (alpha, score)
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = eol == std::string::npos ? text.size() : eol + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::size_t sp = line.find(' ');
    std::string where = path + " line " + std::to_string(line_no);
    if (sp == std::string::npos) throw rlv::ArtifactError(where + ": expected 'alpha score'");
    try {
      items.emplace_back(parse_double_or_config_error(line.substr(0, sp), where),
                         parse_double_or_config_error(line.substr(sp + 1), where));
    } catch (const rlv::ConfigError& e) {
      throw rlv::ArtifactError(e.what());
    }
  }
  if (items.empty()) throw rlv::ArtifactError(path + ": no alpha/score pairs");
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<double> alphas;
  alphas.reserve(items.size());
  for (const auto& [alpha, score] : items) alphas.push_back(alpha);
  double estimate = rlv::best_of_k_estimate(alphas, k);
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), estimate);
  (void)ec;
  std::cout << std::string(buf, end) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"featurized-policy RL with self-verification and test-time scaling"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train a policy and write run artifacts");
  std::string config_path, out_root = "runs";
  std::vector<std::string> sets;
  bool quiet = false;
  train_cmd->add_option("--config", config_path, "key = value config file");
  train_cmd->add_option("--set", sets, "override, e.g. --set method=GRPO")->take_all();
  train_cmd->add_option("--out", out_root, "artifacts root directory");
  train_cmd->add_flag("--quiet", quiet, "suppress the per-run summary");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "pass@1, verifier accuracy, strategy accuracies");
  EvalFlags eval_flags;
  eval_flags.attach(eval_cmd);

  // sweep-n
  auto* sweep_cmd = app.add_subcommand("sweep-n", "strategy accuracy across solution counts");
  EvalFlags sweep_flags;
  sweep_flags.attach(sweep_cmd);
  std::vector<int> n_grid{1, 2, 4, 8, 16};
  std::vector<std::string> strategy_names{"MAJORITY", "WEIGHTED", "BEST_OF_N"};
  sweep_cmd->add_option("--n", n_grid, "solution counts to evaluate")->take_all();
  sweep_cmd->add_option("--strategy", strategy_names, "strategies to evaluate")->take_all();

  // budget-demo
  auto* budget_cmd = app.add_subcommand("budget-demo", "budget forcing and adaptive length");
  EvalFlags budget_flags;
  budget_flags.attach(budget_cmd);
  std::vector<int> budgets{4, 6, 8, 10};
  int buffer = 2;
  double tau = 0.7;
  std::string backend_kind = "builtin";
  rlv::RemoteSpec remote;
  budget_cmd->add_option("--budgets", budgets, "increasing token budgets")->take_all();
  budget_cmd->add_option("--buffer", buffer, "reserved tokens before forcing");
  budget_cmd->add_option("--tau", tau, "adaptive confidence threshold");
  budget_cmd->add_option("--backend", backend_kind, "builtin or remote");
  budget_cmd->add_option("--host", remote.host, "remote host");
  budget_cmd->add_option("--port", remote.port, "remote port");
  budget_cmd->add_option("--path", remote.path, "remote completion path");
  budget_cmd->add_option("--model", remote.model, "remote model name");
  budget_cmd->add_option("--timeout-ms", remote.timeout_ms, "remote timeout");
  budget_cmd->add_option("--retries", remote.max_retries, "remote retry cap");

  // bok
  auto* bok_cmd = app.add_subcommand("bok", "unbiased best-of-k estimate from alpha/score pairs");
  std::string bok_path;
  int bok_k = 1;
  bok_cmd->add_option("--file", bok_path, "lines of 'alpha score'")->required();
  bok_cmd->add_option("--k", bok_k, "subset size")->required();

  // verify-probe
  auto* probe_cmd = app.add_subcommand("verify-probe", "verifier accuracy on a logged probe set");
  std::string probe_params, probe_log;
  std::vector<std::string> probe_scorers{"GENERATIVE"};
  int tail_iterations = 0;
  probe_cmd->add_option("--params", probe_params, "trained parameters file")->required();
  probe_cmd->add_option("--log", probe_log, "episodes.log from a training run")->required();
  probe_cmd->add_option("--scorer", probe_scorers, "verifier variants to probe")->take_all();
  probe_cmd->add_option("--tail", tail_iterations,
                        "use only the last N iterations of the log (0 = all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      std::vector<std::vector<rlv::KeyValue>> sources;
      if (!config_path.empty()) sources.push_back(rlv::parse_config_file(config_path));
      sources.push_back(rlv::process_env_overrides());
      sources.push_back(rlv::cli_overrides(sets));
      rlv::TrainOutcome outcome = rlv::run_train(sources, out_root);
      if (!quiet) {
        std::cout << "run_id " << outcome.id << "\n" << "dir " << outcome.paths.dir << "\n";
        if (!outcome.result.iterations.empty()) {
          const rlv::IterationRecord& last = outcome.result.iterations.back();
          std::cout << "final_heldout_pass1 " << last.heldout_pass1 << "\n"
                    << "final_verifier_acc " << last.verifier_acc << "\n";
        }
      }
    } else if (*eval_cmd) {
      rlv::Vocab vocab(10);
      rlv::PolicyParams params = eval_flags.load(vocab);
      std::cout << rlv::render_eval(rlv::run_eval(vocab, params, eval_flags.spec));
    } else if (*sweep_cmd) {
      rlv::Vocab vocab(10);
      rlv::PolicyParams params = sweep_flags.load(vocab);
      std::vector<rlv::Strategy> strategies;
      for (const std::string& name : strategy_names)
        strategies.push_back(rlv::parse_strategy(name));
      std::cout << rlv::sweep_csv(
          rlv::run_sweep_n(vocab, params, sweep_flags.spec, n_grid, strategies));
    } else if (*budget_cmd) {
      rlv::Vocab vocab(10);
      rlv::PolicyParams params = budget_flags.load(vocab);
      rlv::BackendFactory factory;
      if (backend_kind == "builtin") {
        factory = rlv::builtin_backend_factory(params, budget_flags.spec.temperature,
                                               budget_flags.spec.seed);
      } else if (backend_kind == "remote") {
        factory = rlv::remote_backend_factory(remote, budget_flags.spec.temperature);
      } else {
        throw rlv::ConfigError("--backend must be builtin or remote");
      }
      std::cout << rlv::render_budget(rlv::run_budget_demo(
          vocab, params, budget_flags.spec, budgets, buffer, tau, factory));
    } else if (*bok_cmd) {
      return run_bok(bok_path, bok_k);
    } else if (*probe_cmd) {
      rlv::Vocab vocab(10);
      rlv::PolicyParams params = rlv::load_params_artifact(probe_params, vocab);
      std::vector<rlv::EpisodeRecord> log =
          rlv::parse_episode_log(rlv::read_text_file(probe_log));
      std::vector<rlv::ScorerKind> kinds;
      for (const std::string& name : probe_scorers)
        kinds.push_back(rlv::parse_scorer_kind(name));
      std::cout << rlv::render_probe(
          rlv::run_verify_probe(vocab, params, log, kinds, tail_iterations));
    }
  } catch (const rlv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const rlv::ArtifactError& e) {
    std::cerr << "artifact error: " << e.what() << "\n";
    return kExitArtifact;
  } catch (const rlv::BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
