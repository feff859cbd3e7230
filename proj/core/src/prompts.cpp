#include "exguard/prompts.hpp"

#include <algorithm>

#include "exguard/errors.hpp"
#include "text_util.hpp"

namespace exguard {

std::string_view to_string(PromptMode m) {
  switch (m) {
    case PromptMode::Direct: return "direct";
    case PromptMode::General: return "general";
    case PromptMode::Coarse: return "coarse";
    case PromptMode::Fine: return "fine";
  }
  return "?";
}

PromptMode parse_prompt_mode(std::string_view name) {
  for (auto m : {PromptMode::Direct, PromptMode::General, PromptMode::Coarse, PromptMode::Fine}) {
    if (to_string(m) == name) return m;
  }
  throw Error("unknown prompt mode '" + std::string(name) + "'");
}

std::string rephrase_task(std::string_view text) {
  const auto t = detail::trim(text);
  if (t.substr(0, kGenerationPrefix.size()) == kGenerationPrefix) return std::string(t);
  constexpr std::string_view how = "how to ";
  if (detail::iequals_prefix(t, how)) {
    auto rest = detail::trim(t.substr(how.size()));
    if (!rest.empty() && rest.back() == '?') rest.remove_suffix(1);
    return std::string(kGenerationPrefix) + " to " + std::string(rest);
  }
  return std::string(kGenerationPrefix) + " that " + std::string(t);
}

std::string build_exception_prompt(PromptMode mode, std::span<const UnhandledException> items) {
  switch (mode) {
    case PromptMode::Direct:
      throw Error("direct mode has no exception prompt");
    case PromptMode::General:
      return std::string(kGeneralPrompt);
    case PromptMode::Coarse: {
      if (items.empty()) throw EmptyItems("coarse prompt needs at least one exception");
      std::vector<std::string> seen;
      std::string out;
      for (const auto& it : items) {
        if (std::find(seen.begin(), seen.end(), it.exception) != seen.end()) continue;
        seen.push_back(it.exception);
        if (!out.empty()) out += ' ';
        out += "Please pay attention to " + it.exception + ".";
      }
      return out;
    }
    case PromptMode::Fine: {
      if (items.empty()) throw EmptyItems("fine prompt needs at least one exception");
      std::string out;
      for (const auto& it : items) {
        if (!out.empty()) out += ". ";
        if (it.condition.empty()) {
          out += "Please handle " + it.exception + " for " + it.fqn;
        } else {
          out += "Please check " + it.condition + " for " + it.fqn + ", otherwise throw " + it.exception;
        }
      }
      return out;
    }
  }
  throw Error("unknown prompt mode");
}

std::string check_question(std::string_view api, std::string_view exception) {
  return "Is the " + std::string(exception) + " handled for " + std::string(api) + " in the code snippets? (Y/N)";
}

CheckPrompts build_check_prompts(std::span<const std::string> apis, const KnowledgeBase& kb) {
  CheckPrompts p;
  p.listing = std::string(kListingPrompt);
  for (const auto& api : apis) {
    for (const auto& spec : kb_lookup(kb, api)) p.questions.push_back(check_question(api, spec.exception));
  }
  return p;
}

}  // namespace exguard
