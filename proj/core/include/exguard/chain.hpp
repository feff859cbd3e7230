#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exguard/analysis.hpp"
#include "exguard/errors.hpp"
#include "exguard/knowledge_base.hpp"
#include "exguard/llm_client.hpp"
#include "exguard/prompts.hpp"

namespace exguard {

enum class CheckerKind { Static, Llm };
enum class Termination { Converged, LoopCapReached, Oscillation, LlmError };

std::string_view to_string(CheckerKind c);
std::string_view to_string(Termination t);
CheckerKind parse_checker_kind(std::string_view name);  // "static" | "llm"
Termination parse_termination(std::string_view name);

struct ChainConfig {
  PromptMode mode = PromptMode::Fine;
  std::size_t max_loops = 10;
  CheckerKind checker = CheckerKind::Static;
  bool oscillation_detection = true;
  std::string model = std::string(kDefaultModel);
  double temperature = 0.0;
  std::size_t max_tokens = 2048;
  std::size_t context_limit_chars = 64000;  // conversation budget before truncation

  void validate() const;  // throws Error when max_loops == 0
};

/// One request/response pair of the chain.
struct Exchange {
  std::string step;        // "generate", "rewrite", "list", "check"
  std::string prompt;
  std::string response;
  std::string extraction;  // how code was taken from the response: fenced, braces, raw

  friend bool operator==(const Exchange&, const Exchange&) = default;
};

struct ChainResult {
  std::string task_id;
  PromptMode mode = PromptMode::Fine;
  bool single_round = false;
  std::string final_code;
  std::size_t loop_count = 0;
  std::vector<std::size_t> unhandled_per_loop;
  Termination termination = Termination::Converged;
  std::vector<Exchange> transcript;
  std::optional<QualityLabel> quality;  // empty when no relevant API is used or the code does not parse
  std::string error;                    // set for LlmError

  friend bool operator==(const ChainResult&, const ChainResult&) = default;
};

/// Thrown when the deterministic checker cannot parse the current code. The
/// partial result keeps the transcript, including the offending response.
class ChainAborted : public Error {
 public:
  ChainAborted(const ParseError& cause, std::size_t loop, ChainResult partial)
      : Error("loop " + std::to_string(loop) + ": generated code does not parse: " + cause.what()),
        cause_(cause),
        partial_(std::move(partial)) {}
  const ParseError& cause() const noexcept { return cause_; }
  const ChainResult& partial() const noexcept { return partial_; }

 private:
  ParseError cause_;
  ChainResult partial_;
};

struct ExtractedCode {
  std::string code;
  std::string rule;  // "fenced", "braces" or "raw"
};

/// First fenced block; else the longest brace-balanced region (from the start
/// of its first line); else the whole response.
ExtractedCode extract_code(std::string_view response);

/// Whitespace runs collapsed to one space, ends trimmed.
std::string normalize_code(std::string_view code);

/// generate, then check/rewrite until nothing is unhandled, the loop cap is
/// hit, or a (code, unhandled) state recurs after a different one.
ChainResult run_chain(const CodingTask& task, const KnowledgeBase& kb, ChatClient& client,
                      const ChainConfig& config);

/// Generation plus at most one exception-prompt round in `config.mode`, as in
/// the prompt-granularity comparison. Direct stops after generation.
ChainResult run_single_round(const CodingTask& task, const KnowledgeBase& kb, ChatClient& client,
                             const ChainConfig& config);

/// {id, mode, kind, loop_count, unhandled_per_loop, termination, quality, error, final_code, transcript_ref}
std::string result_to_json(const ChainResult& r, std::string_view transcript_ref);
/// Throws SchemaViolation.
ChainResult result_from_json(std::string_view line);
std::string transcript_to_json(const ChainResult& r);

/// Line-delimited {id, text} records; blank lines skipped. Throws SchemaViolation.
std::vector<CodingTask> parse_task_corpus(std::string_view text);

/// Parses a Y/N answer by its first alphabetic token. Throws UnparseableVerdict.
bool parse_verdict(std::string_view response);

}  // namespace exguard
