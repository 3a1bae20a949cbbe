#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzyc/error.hpp"
#include "fuzzyc/lang/token.hpp"

namespace fuzzyc::lang {

namespace detail {

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

inline TokenKind keyword_kind(std::string_view word) {
  if (word == "forall") return TokenKind::Forall;
  if (word == "exists") return TokenKind::Exists;
  if (word == "in") return TokenKind::In;
  if (word == "not") return TokenKind::Not;
  if (word == "and") return TokenKind::And;
  if (word == "or") return TokenKind::Or;
  if (word == "implies") return TokenKind::Implies;
  if (word == "iff") return TokenKind::Iff;
  return TokenKind::Identifier;
}

}  // namespace detail

/// Splits constraint source into tokens. Whitespace separates tokens and is
/// not emitted; every token records its byte offset so the source can be
/// reassembled exactly. Identifiers may be wrapped in backticks to use
/// otherwise reserved words.
inline std::vector<Token> tokenize(std::string_view source, Position start = {}) {
  std::vector<Token> tokens;
  Position pos = start;
  std::size_t i = 0;

  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (source[i + k] == '\n') {
        ++pos.line;
        pos.column = 1;
      } else {
        ++pos.column;
      }
    }
    i += n;
    pos.offset = start.offset + i;
  };
  auto emit = [&](TokenKind kind, std::size_t len) {
    tokens.push_back(Token{kind, std::string(source.substr(i, len)), pos});
    advance(len);
  };

  while (i < source.size()) {
    const char c = source[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (detail::ident_start(c)) {
      std::size_t len = 1;
      while (i + len < source.size() && detail::ident_char(source[i + len])) ++len;
      emit(detail::keyword_kind(source.substr(i, len)), len);
      continue;
    }
    if (c == '`') {
      const auto close = source.find('`', i + 1);
      const auto newline = source.find('\n', i + 1);
      if (close == std::string_view::npos || (newline != std::string_view::npos && newline < close) || close == i + 1) {
        throw Error(ErrorCode::UnterminatedIdentifier, "quoted identifier is not closed", pos);
      }
      emit(TokenKind::Identifier, close - i + 1);
      continue;
    }
    const std::string_view rest = source.substr(i);
    if (rest.starts_with("<=>")) {
      emit(TokenKind::Iff, 3);
    } else if (rest.starts_with("=>")) {
      emit(TokenKind::Implies, 2);
    } else if (c == '=') {
      emit(TokenKind::Equals, 1);
    } else if (c == '&') {
      emit(TokenKind::And, 1);
    } else if (c == '|') {
      emit(TokenKind::Or, 1);
    } else if (c == '~') {
      emit(TokenKind::Not, 1);
    } else if (c == '(') {
      emit(TokenKind::LParen, 1);
    } else if (c == ')') {
      emit(TokenKind::RParen, 1);
    } else if (c == ',') {
      emit(TokenKind::Comma, 1);
    } else if (c == ':') {
      emit(TokenKind::Colon, 1);
    } else {
      std::string shown(1, c);
      if (static_cast<unsigned char>(c) >= 0x80) shown = "non-ASCII byte";
      throw Error(ErrorCode::IllegalCharacter, "'" + shown + "'", pos);
    }
  }
  return tokens;
}

}  // namespace fuzzyc::lang
