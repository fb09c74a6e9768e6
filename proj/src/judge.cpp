#include "toolsup/judge.hpp"

#include <algorithm>
#include <cctype>
#include <thread>

#include <fmt/format.h>

#include "httplib.h"
#include "json.hpp"
#include "toolsup/error.hpp"

namespace toolsup::rewards {

namespace {

std::string normalize(const std::string& s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

}  // namespace

bool ExactMatchJudge::judge(const std::string&, const std::string& answer, const std::string& target) {
  return normalize(answer) == normalize(target);
}

std::string judge_prompt(const std::string& question, const std::string& answer, const std::string& target) {
  return fmt::format(
      "You are grading an answer to a visual question.\n"
      "Question: {}\n"
      "Reference answer: {}\n"
      "Model answer: {}\n"
      "Reply with exactly one word: \"match\" if the model answer is equivalent to the reference "
      "answer, otherwise \"no_match\".",
      question, target, answer);
}

HttpJudge::HttpJudge(std::string host, int port, std::string path, std::chrono::milliseconds timeout,
                     std::chrono::milliseconds min_interval)
    : host_(std::move(host)), port_(port), path_(std::move(path)), timeout_(timeout),
      min_interval_(min_interval) {}

bool HttpJudge::judge(const std::string& question, const std::string& answer, const std::string& target) {
  std::lock_guard lock(mutex_);
  const auto now = std::chrono::steady_clock::now();
  if (last_ != std::chrono::steady_clock::time_point{} && now - last_ < min_interval_) {
    std::this_thread::sleep_for(min_interval_ - (now - last_));
  }
  last_ = std::chrono::steady_clock::now();

  httplib::Client client(host_, port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());

  const nlohmann::json body = {{"prompt", judge_prompt(question, answer, target)},
                               {"question", question},
                               {"answer", answer},
                               {"target", target}};
  const auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::JudgeUnavailable,
                fmt::format("judge at {}:{} unreachable: {}", host_, port_, httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::JudgeUnavailable, fmt::format("judge replied with status {}", res->status));
  }
  const auto reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.is_object() || !reply.contains("verdict") || !reply["verdict"].is_string()) {
    throw Error(ErrorCode::JudgeUnavailable, "judge reply lacks a verdict");
  }
  const auto verdict = reply["verdict"].get<std::string>();
  if (verdict == "match") return true;
  if (verdict == "no_match") return false;
  throw Error(ErrorCode::JudgeUnavailable, fmt::format("unknown judge verdict '{}'", verdict));
}

}  // namespace toolsup::rewards
