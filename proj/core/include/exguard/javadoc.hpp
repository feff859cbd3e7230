#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "exguard/knowledge_base.hpp"

namespace exguard {

/// Parses "Throws: <Exception> - <condition>". Throws MalformedClause.
ExceptionSpec parse_throws_clause(std::string_view text);

/// Parses one stored documentation page (Javadoc HTML or its plain-text
/// rendering) into entries for the methods that document at least one Throws
/// clause. Throws PageStructureError when the page declares no method.
std::vector<ApiEntry> parse_api_page(std::string_view page);

/// Renders Javadoc HTML to text lines: block elements break lines, inline
/// whitespace collapses, <pre> keeps its line breaks, entities are decoded.
std::string html_to_text(std::string_view html);

bool looks_like_html(std::string_view page);

}  // namespace exguard
