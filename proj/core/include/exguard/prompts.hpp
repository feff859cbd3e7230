#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exguard/analysis.hpp"
#include "exguard/knowledge_base.hpp"

namespace exguard {

struct CodingTask {
  std::string id;
  std::string text;  // usually "How to ..."
};

enum class PromptMode { Direct, General, Coarse, Fine };

/// "direct", "general", "coarse", "fine".
std::string_view to_string(PromptMode m);
/// Throws Error for an unknown name.
PromptMode parse_prompt_mode(std::string_view name);

inline constexpr std::string_view kGenerationPrefix = "Please write a Java method";
inline constexpr std::string_view kGeneralPrompt = "Please pay attention to potential exceptions.";
inline constexpr std::string_view kListingPrompt =
    "What Java SDK & JDK methods are used in the method you provided? "
    "Please list the fully qualified names of the methods.";
inline constexpr std::string_view kLlmEvaPrompt = "Can the code handle all exceptions in good practice? (Y/N)?";

/// "How to X" becomes "Please write a Java method to X"; text already in that
/// form is kept; anything else becomes "Please write a Java method that <text>".
std::string rephrase_task(std::string_view text);
inline std::string rephrase_task(const CodingTask& task) { return rephrase_task(task.text); }

/// The rewrite instruction for one loop. Throws EmptyItems for Coarse/Fine
/// without items and Error for Direct.
std::string build_exception_prompt(PromptMode mode, std::span<const UnhandledException> items);

struct CheckPrompts {
  std::string listing;
  std::vector<std::string> questions;  // one per (api, exception)
};

/// "Is the <Exception> handled for <API> in the code snippets? (Y/N)" for every
/// spec of every api, in the given api order and KB spec order.
CheckPrompts build_check_prompts(std::span<const std::string> apis, const KnowledgeBase& kb);

std::string check_question(std::string_view api, std::string_view exception);

}  // namespace exguard
