#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>

namespace toolsup::rewards {

/// Binary answer oracle. Implementations must be safe to call concurrently.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual bool judge(const std::string& question, const std::string& answer,
                     const std::string& target) = 0;
};

/// Match after trimming, lowercasing and collapsing internal whitespace.
class ExactMatchJudge final : public Judge {
 public:
  bool judge(const std::string& question, const std::string& answer, const std::string& target) override;
};

/// Prompt sent to an external judging model.
std::string judge_prompt(const std::string& question, const std::string& answer, const std::string& target);

/// Forwards requests to an HTTP judging service:
///   POST {path}  {"prompt", "question", "answer", "target"}
///   -> {"verdict": "match" | "no_match"}
/// Requests are serialized and spaced by `min_interval`. Transport errors,
/// non-200 replies and malformed verdicts throw Error{JudgeUnavailable}.
class HttpJudge final : public Judge {
 public:
  HttpJudge(std::string host, int port, std::string path = "/judge",
            std::chrono::milliseconds timeout = std::chrono::seconds(30),
            std::chrono::milliseconds min_interval = std::chrono::milliseconds(0));

  bool judge(const std::string& question, const std::string& answer, const std::string& target) override;

 private:
  std::string host_;
  int port_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  std::chrono::milliseconds min_interval_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point last_{};
};

}  // namespace toolsup::rewards
