#pragma once

#include <string>
#include <string_view>

#include "fuzzyc/error.hpp"

namespace fuzzyc::lang {

enum class TokenKind {
  Identifier,
  Forall,
  Exists,
  In,
  Not,
  And,
  Or,
  Implies,
  Iff,
  Equals,
  LParen,
  RParen,
  Comma,
  Colon,
  End,
};

inline std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Forall: return "'forall'";
    case TokenKind::Exists: return "'exists'";
    case TokenKind::In: return "'in'";
    case TokenKind::Not: return "'not'";
    case TokenKind::And: return "'and'";
    case TokenKind::Or: return "'or'";
    case TokenKind::Implies: return "'implies'";
    case TokenKind::Iff: return "'iff'";
    case TokenKind::Equals: return "'='";
    case TokenKind::LParen: return "'('";
    case TokenKind::RParen: return "')'";
    case TokenKind::Comma: return "','";
    case TokenKind::Colon: return "':'";
    case TokenKind::End: return "end of input";
  }
  return "?";
}

struct Token {
  TokenKind kind = TokenKind::End;
  std::string lexeme;
  Position position;

  /// Identifier name; for quoted identifiers the backticks are stripped.
  std::string text() const {
    if (kind == TokenKind::Identifier && lexeme.size() >= 2 && lexeme.front() == '`') {
      return lexeme.substr(1, lexeme.size() - 2);
    }
    return lexeme;
  }
};

}  // namespace fuzzyc::lang
