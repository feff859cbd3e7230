#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace exguard::detail {

enum class TokenKind { Identifier, Keyword, Literal, Punct, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string_view text;
  std::size_t offset = 0;

  std::size_t end() const { return offset + text.size(); }
  bool is(std::string_view s) const { return (kind == TokenKind::Punct || kind == TokenKind::Keyword) && text == s; }
};

/// Tokenizes Java source. Comments and whitespace are dropped. `>` is always
/// emitted as a single-character token so that nested type arguments close
/// naturally; the parser re-joins adjacent `>` tokens into shift operators.
/// Throws ParseError on an unterminated literal or comment, or a stray character.
std::vector<Token> tokenize(std::string_view source, const std::vector<std::size_t>& line_starts);

std::vector<std::size_t> compute_line_starts(std::string_view source);

}  // namespace exguard::detail
