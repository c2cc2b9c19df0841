#pragma once

#include <string>
#include <vector>

#include "rlv/config.hpp"
#include "rlv/errors.hpp"
#include "rlv/trainer.hpp"

namespace rlv {

// Locations of the four files a training run leaves behind.
struct RunPaths {
  std::string dir;
  std::string params;    // final policy parameters
  std::string metrics;   // per-iteration CSV
  std::string episodes;  // line-per-episode TSV log
  std::string config;    // canonical config echo
};
RunPaths run_paths(const std::string& root, const std::string& id);

// Small file helpers; failures raise ArtifactError.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Per-iteration CSV: header plus one row per iteration, columns matching
// StepMetrics plus the held-out pass@1 and probe verifier accuracy.
std::string metrics_csv(const TrainResult& result);

// One logged episode. Token fields round-trip through token names; logprobs
// through shortest round-trip formatting, so parsing is exact.
struct EpisodeRecord {
  std::string run_id;
  int iteration = 0;
  int group_id = 0;
  std::vector<int> prompt;
  std::vector<int> solution;
  int reward = 0;
  std::vector<double> old_logprobs;
  double score = 0.0;
};

std::string format_episode_record(const EpisodeRecord& rec);
std::string episode_log(const std::string& id, const TrainResult& result);
std::vector<EpisodeRecord> parse_episode_log(const std::string& text);

// Rebuild the task from a logged prompt and re-check the logged reward.
int rescore_episode_record(const Vocab& vocab, const EpisodeRecord& rec);

// Write params/metrics/episodes/config under root/<run_id>/ and return the
// paths. Byte-identical for identical (config, seed).
RunPaths write_run_artifacts(const std::string& root, const RunConfig& cfg,
                             const TrainResult& result);

}  // namespace rlv
