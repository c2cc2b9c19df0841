#include "rlv/artifacts.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rlv/task.hpp"

namespace rlv {

namespace {

std::string fmt_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

double parse_double_or_throw(std::string_view s, const std::string& where) {
  double out{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ArtifactError(where + ": bad number '" + std::string(s) + "'");
  return out;
}

int parse_int_or_throw(std::string_view s, const std::string& where) {
  int out{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ArtifactError(where + ": bad integer '" + std::string(s) + "'");
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

std::vector<int> parse_tokens(std::string_view field, const std::string& where) {
  std::vector<int> out;
  for (std::string_view name : split(field, ' ')) {
    if (name.empty()) continue;
    try {
      out.push_back(parse_token(name));
    } catch (const std::invalid_argument&) {
      throw ArtifactError(where + ": unknown token '" + std::string(name) + "'");
    }
  }
  return out;
}

}  // namespace

RunPaths run_paths(const std::string& root, const std::string& id) {
  std::string dir = root + "/" + id;
  return RunPaths{dir, dir + "/params.txt", dir + "/metrics.csv", dir + "/episodes.log",
                  dir + "/config.txt"};
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ArtifactError("short write: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string metrics_csv(const TrainResult& result) {
  std::string out =
      "iteration,lr,lambda,pass1_batch,heldout_pass1,verifier_acc,clip_objective,"
      "mean_kl,verify_loss,value_loss,head_loss,verify_skipped\n";
  for (const IterationRecord& rec : result.iterations) {
    const StepMetrics& m = rec.metrics;
    out += std::to_string(m.iteration);
    for (double x : {m.lr, m.lambda, m.pass1_batch, rec.heldout_pass1, rec.verifier_acc,
                     m.clip_objective, m.mean_kl, m.verify_loss, m.value_loss, m.head_loss}) {
      out.push_back(',');
      out += fmt_double(x);
    }
    out.push_back(',');
    out += m.verify_skipped ? '1' : '0';
    out.push_back('\n');
  }
  return out;
}

std::string format_episode_record(const EpisodeRecord& rec) {
  std::string out = rec.run_id;
  out.push_back('\t');
  out += std::to_string(rec.iteration);
  out.push_back('\t');
  out += std::to_string(rec.group_id);
  out.push_back('\t');
  out += detokenize(rec.prompt.data(), rec.prompt.size());
  out.push_back('\t');
  out += detokenize(rec.solution.data(), rec.solution.size());
  out.push_back('\t');
  out += std::to_string(rec.reward);
  out.push_back('\t');
  for (std::size_t i = 0; i < rec.old_logprobs.size(); ++i) {
    if (i) out.push_back(' ');
    out += fmt_double(rec.old_logprobs[i]);
  }
  out.push_back('\t');
  out += fmt_double(rec.score);
  return out;
}

std::string episode_log(const std::string& id, const TrainResult& result) {
  std::string out;
  for (std::size_t i = 0; i < result.episodes.size(); ++i) {
    const Episode& e = result.episodes[i];
    EpisodeRecord rec{id,       result.episode_iteration[i], e.group_id, e.task.prompt,
                      e.solution, e.reward,                  e.old_logprobs,
                      result.episode_score[i]};
    out += format_episode_record(rec);
    out.push_back('\n');
  }
  return out;
}

std::vector<EpisodeRecord> parse_episode_log(const std::string& text) {
  std::vector<EpisodeRecord> out;
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    std::string where = "episode log line " + std::to_string(line_no);
    std::vector<std::string_view> fields = split(line, '\t');
    if (fields.size() != 8)
      throw ArtifactError(where + ": expected 8 tab-separated fields, got " +
                          std::to_string(fields.size()));
    EpisodeRecord rec;
    rec.run_id = std::string(fields[0]);
    rec.iteration = parse_int_or_throw(fields[1], where);
    rec.group_id = parse_int_or_throw(fields[2], where);
    rec.prompt = parse_tokens(fields[3], where);
    rec.solution = parse_tokens(fields[4], where);
    rec.reward = parse_int_or_throw(fields[5], where);
    for (std::string_view part : split(fields[6], ' '))
      if (!part.empty()) rec.old_logprobs.push_back(parse_double_or_throw(part, where));
    rec.score = parse_double_or_throw(fields[7], where);
    if (rec.old_logprobs.size() != rec.solution.size())
      throw ArtifactError(where + ": logprob count does not match solution length");
    if (rec.reward != 0 && rec.reward != 1)
      throw ArtifactError(where + ": reward must be 0 or 1");
    out.push_back(std::move(rec));
  }
  return out;
}

int rescore_episode_record(const Vocab& vocab, const EpisodeRecord& rec) {
  TaskInstance task;
  task.prompt = rec.prompt;
  task.ground_truth = eval_chain(vocab, rec.prompt);
  return reward(vocab, task, rec.solution);
}

RunPaths write_run_artifacts(const std::string& root, const RunConfig& cfg,
                             const TrainResult& result) {
  std::string id = run_id(cfg);
  RunPaths paths = run_paths(root, id);
  std::error_code ec;
  std::filesystem::create_directories(paths.dir, ec);
  if (ec) throw ArtifactError("cannot create run directory: " + paths.dir);
  Vocab vocab(cfg.modulus);
  save_params(result.params, vocab, paths.params);
  write_text_file(paths.metrics, metrics_csv(result));
  write_text_file(paths.episodes, episode_log(id, result));
  write_text_file(paths.config, canonical_config(cfg));
  return paths;
}

}  // namespace rlv
