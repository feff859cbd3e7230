#include "exguard/chain.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "json.hpp"
#include "text_util.hpp"

namespace exguard {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(CheckerKind c) { return c == CheckerKind::Static ? "static" : "llm"; }

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "Converged";
    case Termination::LoopCapReached: return "LoopCapReached";
    case Termination::Oscillation: return "Oscillation";
    case Termination::LlmError: return "LlmError";
  }
  return "?";
}

CheckerKind parse_checker_kind(std::string_view name) {
  if (name == "static") return CheckerKind::Static;
  if (name == "llm") return CheckerKind::Llm;
  throw Error("unknown checker '" + std::string(name) + "'");
}

Termination parse_termination(std::string_view name) {
  for (auto t : {Termination::Converged, Termination::LoopCapReached, Termination::Oscillation,
                 Termination::LlmError}) {
    if (to_string(t) == name) return t;
  }
  throw Error("unknown termination '" + std::string(name) + "'");
}

void ChainConfig::validate() const {
  if (max_loops == 0) throw Error("max_loops must be at least 1");
}

// ---------------------------------------------------------------- code extraction

ExtractedCode extract_code(std::string_view response) {
  if (const auto open = response.find("```"); open != std::string_view::npos) {
    auto body = response.find('\n', open);
    body = body == std::string_view::npos ? response.size() : body + 1;
    auto close = response.find("```", body);
    if (close == std::string_view::npos) close = response.size();
    auto code = response.substr(body, close - body);
    while (!code.empty() && detail::is_space(code.back())) code.remove_suffix(1);
    return {std::string(code), "fenced"};
  }

  std::size_t best_begin = 0, best_len = 0, region_begin = 0;
  int depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < response.size(); ++i) {
    const char c = response[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote || c == '\n') quote = 0;
      continue;
    }
    if (depth > 0 && (c == '"' || c == '\'')) {
      quote = c;
    } else if (c == '{') {
      if (depth++ == 0) region_begin = i;
    } else if (c == '}' && depth > 0) {
      if (--depth == 0) {
        const auto line_start = response.rfind('\n', region_begin);
        const auto begin = line_start == std::string_view::npos ? 0 : line_start + 1;
        if (i + 1 - begin > best_len) {
          best_begin = begin;
          best_len = i + 1 - begin;
        }
      }
    }
  }
  if (best_len > 0) return {std::string(response.substr(best_begin, best_len)), "braces"};
  return {std::string(detail::trim(response)), "raw"};
}

std::string normalize_code(std::string_view code) { return detail::collapse_whitespace(code); }

// ---------------------------------------------------------------- chain

namespace {

struct LlmFailure {
  std::string message;
};

class Conversation {
 public:
  Conversation(ChatClient& client, const ChainConfig& config, ChainResult& result)
      : client_(client), config_(config), result_(result) {}

  std::string send(std::string step, std::string prompt) {
    messages_.push_back({"user", prompt});
    truncate();
    ChatRequest req;
    req.messages = messages_;
    req.model = config_.model;
    req.temperature = config_.temperature;
    req.max_tokens = config_.max_tokens;
    std::string response;
    try {
      response = client_.complete(req);
    } catch (const Error& e) {
      messages_.pop_back();
      throw LlmFailure{e.what()};
    }
    messages_.push_back({"assistant", response});
    result_.transcript.push_back({std::move(step), std::move(prompt), response, {}});
    return response;
  }

  std::string send_for_code(std::string step, std::string prompt) {
    const auto response = send(std::move(step), std::move(prompt));
    auto extracted = extract_code(response);
    result_.transcript.back().extraction = extracted.rule;
    return std::move(extracted.code);
  }

 private:
  // Drops the oldest (assistant, user) pairs after the task prompt until the
  // conversation fits; the latest code and the new prompt always stay.
  void truncate() {
    auto total = [&] {
      std::size_t n = 0;
      for (const auto& m : messages_) n += m.content.size();
      return n;
    };
    while (messages_.size() > 3 && total() > config_.context_limit_chars) {
      messages_.erase(messages_.begin() + 1, messages_.begin() + 3);
    }
  }

  ChatClient& client_;
  const ChainConfig& config_;
  ChainResult& result_;
  std::vector<Message> messages_;
};

std::vector<UnhandledException> static_check(const std::string& code, const KnowledgeBase& kb, std::size_t loop,
                                             ChainResult& result) {
  try {
    return collect_unhandled(JavaSource::parse(code), kb);
  } catch (const ParseError& e) {
    result.final_code = code;
    throw ChainAborted(e, loop, result);
  }
}

// KB methods mentioned in a listing answer, in order of first mention.
std::vector<std::string> listed_apis(std::string_view response, const KnowledgeBase& kb) {
  std::vector<std::pair<std::size_t, std::string>> found;
  for (const auto& [fqn, entry] : kb.entries()) {
    auto pos = response.find(fqn);
    if (pos == std::string_view::npos) pos = response.find(entry.declaring_type + "." + entry.simple_name + "(");
    if (pos != std::string_view::npos) found.emplace_back(pos, fqn);
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

std::vector<UnhandledException> llm_check(Conversation& conv, const KnowledgeBase& kb) {
  const auto apis = listed_apis(conv.send("list", std::string(kListingPrompt)), kb);
  std::vector<UnhandledException> out;
  for (const auto& api : apis) {
    for (const auto& spec : kb_lookup(kb, api)) {
      const auto answer = conv.send("check", check_question(api, spec.exception));
      bool handled = false;
      try {
        handled = parse_verdict(answer);
      } catch (const UnparseableVerdict&) {
        handled = false;
      }
      const bool dup = std::any_of(out.begin(), out.end(), [&](const auto& u) {
        return u.fqn == api && u.exception == spec.exception;
      });
      if (!handled && !dup) out.push_back({api, spec.exception, spec.condition});
    }
  }
  return out;
}

using State = std::pair<std::string, std::set<std::pair<std::string, std::string>>>;

State state_of(const std::string& code, const std::vector<UnhandledException>& items) {
  State s{normalize_code(code), {}};
  for (const auto& u : items) s.second.insert({u.fqn, u.exception});
  return s;
}

void finish_quality(ChainResult& r, const KnowledgeBase& kb) {
  if (r.termination == Termination::LlmError) return;
  try {
    r.quality = analyze(JavaSource::parse(r.final_code), kb).label;
  } catch (const ParseError&) {
    r.quality.reset();
  }
}

}  // namespace

ChainResult run_chain(const CodingTask& task, const KnowledgeBase& kb, ChatClient& client,
                      const ChainConfig& config) {
  config.validate();
  ChainResult r;
  r.task_id = task.id;
  r.mode = config.mode;
  Conversation conv(client, config, r);
  std::size_t loop = 0;
  try {
    r.final_code = conv.send_for_code("generate", rephrase_task(task));
    std::vector<State> seen;
    for (loop = 1;; ++loop) {
      const auto unhandled = config.checker == CheckerKind::Static ? static_check(r.final_code, kb, loop, r)
                                                                  : llm_check(conv, kb);
      r.unhandled_per_loop.push_back(unhandled.size());
      r.loop_count = loop;
      if (unhandled.empty()) {
        r.termination = Termination::Converged;
        break;
      }
      if (config.mode == PromptMode::Direct || loop >= config.max_loops) {
        r.termination = Termination::LoopCapReached;
        break;
      }
      auto state = state_of(r.final_code, unhandled);
      if (config.oscillation_detection && !seen.empty() && state != seen.back() &&
          std::find(seen.begin(), seen.end(), state) != seen.end()) {
        r.termination = Termination::Oscillation;
        break;
      }
      seen.push_back(std::move(state));
      r.final_code = conv.send_for_code("rewrite", build_exception_prompt(config.mode, unhandled));
    }
  } catch (const LlmFailure& f) {
    r.termination = Termination::LlmError;
    r.error = "loop " + std::to_string(loop) + ": " + f.message;
  }
  finish_quality(r, kb);
  return r;
}

ChainResult run_single_round(const CodingTask& task, const KnowledgeBase& kb, ChatClient& client,
                             const ChainConfig& config) {
  ChainResult r;
  r.task_id = task.id;
  r.mode = config.mode;
  r.single_round = true;
  Conversation conv(client, config, r);
  std::size_t loop = 0;
  try {
    r.final_code = conv.send_for_code("generate", rephrase_task(task));
    loop = 1;
    auto unhandled = static_check(r.final_code, kb, loop, r);
    r.unhandled_per_loop.push_back(unhandled.size());
    r.loop_count = 1;
    const bool round = config.mode == PromptMode::General ||
                       (config.mode != PromptMode::Direct && !unhandled.empty());
    if (round) {
      r.final_code = conv.send_for_code("rewrite", build_exception_prompt(config.mode, unhandled));
      loop = 2;
      unhandled = static_check(r.final_code, kb, loop, r);
      r.unhandled_per_loop.push_back(unhandled.size());
      r.loop_count = 2;
    }
    r.termination = unhandled.empty() ? Termination::Converged : Termination::LoopCapReached;
  } catch (const LlmFailure& f) {
    r.termination = Termination::LlmError;
    r.error = "loop " + std::to_string(loop) + ": " + f.message;
  }
  finish_quality(r, kb);
  return r;
}

bool parse_verdict(std::string_view response) {
  auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  std::size_t i = 0;
  while (i < response.size() && !is_alpha(response[i])) ++i;
  std::string word;
  while (i < response.size() && is_alpha(response[i])) {
    char c = response[i++];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    word.push_back(c);
  }
  if (word == "y" || word == "yes") return true;
  if (word == "n" || word == "no") return false;
  throw UnparseableVerdict("cannot read a Y/N verdict from: " + std::string(response.substr(0, 80)));
}

// ---------------------------------------------------------------- records

std::string result_to_json(const ChainResult& r, std::string_view transcript_ref) {
  ordered_json j;
  j["id"] = r.task_id;
  j["mode"] = std::string(to_string(r.mode));
  j["kind"] = r.single_round ? "single_round" : "chain";
  j["loop_count"] = r.loop_count;
  j["unhandled_per_loop"] = r.unhandled_per_loop;
  j["termination"] = std::string(to_string(r.termination));
  j["quality"] = r.quality ? ordered_json(std::string(to_string(*r.quality))) : ordered_json(nullptr);
  j["error"] = r.error;
  j["final_code"] = r.final_code;
  j["transcript_ref"] = std::string(transcript_ref);
  return j.dump();
}

ChainResult result_from_json(std::string_view line) {
  try {
    const auto j = json::parse(line);
    ChainResult r;
    r.task_id = j.at("id").get<std::string>();
    r.mode = parse_prompt_mode(j.at("mode").get<std::string>());
    r.single_round = j.value("kind", std::string("chain")) == "single_round";
    r.loop_count = j.at("loop_count").get<std::size_t>();
    r.unhandled_per_loop = j.at("unhandled_per_loop").get<std::vector<std::size_t>>();
    r.termination = parse_termination(j.at("termination").get<std::string>());
    if (!j.at("quality").is_null()) r.quality = parse_quality_label(j.at("quality").get<std::string>());
    r.error = j.value("error", std::string());
    r.final_code = j.value("final_code", std::string());
    if (r.unhandled_per_loop.size() != r.loop_count) throw Error("unhandled_per_loop length differs from loop_count");
    return r;
  } catch (const json::exception& e) {
    throw SchemaViolation(std::string("bad result record (") + e.what() + ")", std::string(line));
  } catch (const SchemaViolation&) {
    throw;
  } catch (const Error& e) {
    throw SchemaViolation(std::string("bad result record (") + e.what() + ")", std::string(line));
  }
}

std::string transcript_to_json(const ChainResult& r) {
  ordered_json j;
  j["id"] = r.task_id;
  j["mode"] = std::string(to_string(r.mode));
  j["exchanges"] = ordered_json::array();
  for (const auto& e : r.transcript) {
    ordered_json x;
    x["step"] = e.step;
    x["prompt"] = e.prompt;
    x["response"] = e.response;
    if (!e.extraction.empty()) x["extraction"] = e.extraction;
    j["exchanges"].push_back(std::move(x));
  }
  return j.dump(2) + "\n";
}

std::vector<CodingTask> parse_task_corpus(std::string_view text) {
  std::vector<CodingTask> tasks;
  std::set<std::string> ids;
  for (auto line : detail::split_lines(text)) {
    if (detail::trim(line).empty()) continue;
    CodingTask t;
    try {
      const auto j = json::parse(line);
      t.id = j.at("id").get<std::string>();
      t.text = j.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw SchemaViolation(std::string("bad task record (") + e.what() + ")", std::string(line));
    }
    if (t.id.empty() || detail::trim(t.text).empty()) throw SchemaViolation("task needs id and text", std::string(line));
    if (!ids.insert(t.id).second) throw SchemaViolation("duplicate task id", std::string(line));
    tasks.push_back(std::move(t));
  }
  return tasks;
}

}  // namespace exguard
