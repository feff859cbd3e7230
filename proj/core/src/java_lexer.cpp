#include "java_lexer.hpp"

#include <algorithm>
#include <array>

#include "exguard/errors.hpp"
#include "text_util.hpp"

namespace exguard::detail {

namespace {

constexpr std::array<std::string_view, 50> kKeywords = {
    "abstract", "assert",     "boolean",   "break",     "byte",      "case",         "catch",
    "char",     "class",      "const",     "continue",  "default",   "do",           "double",
    "else",     "enum",       "extends",   "final",     "finally",   "float",        "for",
    "goto",     "if",         "implements", "import",   "instanceof", "int",         "interface",
    "long",     "native",     "new",       "package",   "private",   "protected",    "public",
    "return",   "short",      "static",    "strictfp",  "super",     "switch",       "synchronized",
    "this",     "throw",      "throws",    "transient", "try",       "void",         "volatile",
    "while"};

// Longest first; '>' is deliberately absent from every multi-char operator.
constexpr std::array<std::string_view, 20> kMultiPunct = {
    "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=",
    "<=",  "<<",  "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^="};

constexpr std::string_view kSinglePunct = "(){}[];,.@=<>!~?:+-*/&|^%";

}  // namespace

std::vector<std::size_t> compute_line_starts(std::string_view source) {
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i] == '\n') starts.push_back(i + 1);
  }
  return starts;
}

namespace {

[[noreturn]] void fail(const std::string& msg, std::size_t offset, const std::vector<std::size_t>& line_starts) {
  const auto it = std::upper_bound(line_starts.begin(), line_starts.end(), offset);
  const auto line = static_cast<std::size_t>(it - line_starts.begin());
  throw ParseError(msg, line, offset - line_starts[line - 1] + 1);
}

}  // namespace

std::vector<Token> tokenize(std::string_view src, const std::vector<std::size_t>& line_starts) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const auto n = src.size();

  while (i < n) {
    const char c = src[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      const auto end = src.find("*/", i + 2);
      if (end == std::string_view::npos) fail("unterminated comment", i, line_starts);
      i = end + 2;
      continue;
    }

    const auto start = i;
    if (c == '"' && src.substr(i, 3) == "\"\"\"") {
      std::size_t j = i + 3;
      while (true) {
        j = src.find("\"\"\"", j);
        if (j == std::string_view::npos) fail("unterminated text block", start, line_starts);
        if (src[j - 1] != '\\') break;
        ++j;
      }
      i = j + 3;
      tokens.push_back({TokenKind::Literal, src.substr(start, i - start), start});
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < n && src[j] != c) {
        if (src[j] == '\\') ++j;
        if (j < n && src[j] == '\n') fail("unterminated literal", start, line_starts);
        ++j;
      }
      if (j >= n) fail("unterminated literal", start, line_starts);
      i = j + 1;
      tokens.push_back({TokenKind::Literal, src.substr(start, i - start), start});
      continue;
    }
    const bool digit = c >= '0' && c <= '9';
    if (digit || (c == '.' && i + 1 < n && src[i + 1] >= '0' && src[i + 1] <= '9')) {
      const bool hex = c == '0' && i + 1 < n && (src[i + 1] == 'x' || src[i + 1] == 'X');
      std::size_t j = i + 1;
      while (j < n) {
        const char d = src[j];
        const bool exp = hex ? (d == 'p' || d == 'P') : (d == 'e' || d == 'E');
        if (exp && j + 1 < n && (src[j + 1] == '+' || src[j + 1] == '-')) {
          j += 2;
        } else if (is_ident_char(d)) {
          ++j;
        } else if (d == '.' && !(j + 1 < n && src[j + 1] == '.') &&
                   !(j + 1 < n && is_ident_char(src[j + 1]) && !(src[j + 1] >= '0' && src[j + 1] <= '9') &&
                     src[j + 1] != 'e' && src[j + 1] != 'E' && src[j + 1] != 'f' && src[j + 1] != 'F' &&
                     src[j + 1] != 'd' && src[j + 1] != 'D')) {
          ++j;
        } else {
          break;
        }
      }
      i = j;
      tokens.push_back({TokenKind::Literal, src.substr(start, i - start), start});
      continue;
    }
    if (is_ident_char(c)) {
      std::size_t j = i + 1;
      while (j < n && is_ident_char(src[j])) ++j;
      const auto word = src.substr(i, j - i);
      i = j;
      TokenKind kind = TokenKind::Identifier;
      if (word == "true" || word == "false" || word == "null") kind = TokenKind::Literal;
      else if (std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end()) kind = TokenKind::Keyword;
      tokens.push_back({kind, word, start});
      continue;
    }
    bool matched = false;
    for (auto p : kMultiPunct) {
      if (src.substr(i, p.size()) == p) {
        tokens.push_back({TokenKind::Punct, src.substr(i, p.size()), start});
        i += p.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (kSinglePunct.find(c) != std::string_view::npos) {
      tokens.push_back({TokenKind::Punct, src.substr(i, 1), start});
      ++i;
      continue;
    }
    fail(std::string("unexpected character '") + c + "'", i, line_starts);
  }
  tokens.push_back({TokenKind::End, src.substr(n, 0), n});
  return tokens;
}

}  // namespace exguard::detail
