#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzyc/error.hpp"
#include "fuzzyc/lang/ast.hpp"
#include "fuzzyc/lang/lexer.hpp"
#include "fuzzyc/lang/token.hpp"

namespace fuzzyc::lang {

// Grammar, loosest binding first:
//
//   formula    := implies ( ('iff' | '<=>') implies )*
//   implies    := or ( ('implies' | '=>') implies )?        right-associative
//   or         := and ( ('or' | '|') and )*
//   and        := unary ( ('and' | '&') unary )*
//   unary      := ('not' | '~') unary | quantifier | primary
//   quantifier := ('forall' | 'exists') ident ('in' ident)? ':' formula
//   primary    := '(' formula ')' | term ( '=' term )?
//   term       := ident ( '(' term (',' term)* ')' )?
//
// A quantifier body extends as far right as possible.
class Parser {
 public:
  explicit Parser(std::span<const Token> tokens) : tokens_(tokens.begin(), tokens.end()) {
    Position end_pos;
    if (!tokens_.empty()) {
      end_pos = tokens_.back().position;
      end_pos.column += tokens_.back().lexeme.size();
      end_pos.offset += tokens_.back().lexeme.size();
    }
    tokens_.push_back(Token{TokenKind::End, "", end_pos});
  }

  Formula parse() {
    Formula f = formula();
    if (peek().kind != TokenKind::End) unexpected("end of formula");
    return f;
  }

 private:
  const Token& peek() const { return tokens_[cursor_]; }
  const Token& take() { return tokens_[cursor_ < tokens_.size() - 1 ? cursor_++ : cursor_]; }
  bool accept(TokenKind kind) {
    if (peek().kind != kind) return false;
    take();
    return true;
  }
  const Token& expect(TokenKind kind) {
    if (peek().kind != kind) unexpected(std::string(to_string(kind)));
    return take();
  }

  [[noreturn]] void unexpected(const std::string& expected) const {
    const Token& got = peek();
    const std::string shown = got.kind == TokenKind::End ? "end of input" : "'" + got.lexeme + "'";
    throw Error(ErrorCode::UnexpectedToken, "expected " + expected + ", got " + shown, got.position);
  }

  Formula formula() {
    Formula left = implication();
    while (peek().kind == TokenKind::Iff) {
      const Position pos = take().position;
      Formula right = implication();
      left = connective(ConnectiveOp::Iff, {std::move(left), std::move(right)}, pos);
    }
    return left;
  }

  Formula implication() {
    Formula left = disjunction();
    if (peek().kind == TokenKind::Implies) {
      const Position pos = take().position;
      Formula right = implication();
      return connective(ConnectiveOp::Implies, {std::move(left), std::move(right)}, pos);
    }
    return left;
  }

  Formula disjunction() {
    Formula left = conjunction();
    while (peek().kind == TokenKind::Or) {
      const Position pos = take().position;
      Formula right = conjunction();
      left = connective(ConnectiveOp::Or, {std::move(left), std::move(right)}, pos);
    }
    return left;
  }

  Formula conjunction() {
    Formula left = unary();
    while (peek().kind == TokenKind::And) {
      const Position pos = take().position;
      Formula right = unary();
      left = connective(ConnectiveOp::And, {std::move(left), std::move(right)}, pos);
    }
    return left;
  }

  Formula unary() {
    switch (peek().kind) {
      case TokenKind::Not: {
        const Position pos = take().position;
        return connective(ConnectiveOp::Not, {unary()}, pos);
      }
      case TokenKind::Forall:
      case TokenKind::Exists:
        return quantifier();
      default:
        return primary();
    }
  }

  Formula quantifier() {
    const Token& head = take();
    const Position pos = head.position;
    const auto kind = head.kind == TokenKind::Forall ? QuantifierKind::Forall : QuantifierKind::Exists;
    if (peek().kind != TokenKind::Identifier) {
      if (peek().kind == TokenKind::End) {
        throw Error(ErrorCode::DanglingQuantifier, "quantifier without a variable", pos);
      }
      unexpected("a bound variable");
    }
    std::string variable = take().text();
    std::optional<std::string> domain;
    if (accept(TokenKind::In)) domain = expect(TokenKind::Identifier).text();
    if (peek().kind != TokenKind::Colon) {
      if (peek().kind == TokenKind::End) {
        throw Error(ErrorCode::DanglingQuantifier, "quantifier over '" + variable + "' has no body", pos);
      }
      unexpected("':'");
    }
    take();
    if (peek().kind == TokenKind::End || peek().kind == TokenKind::RParen) {
      throw Error(ErrorCode::DanglingQuantifier, "quantifier over '" + variable + "' has no body", pos);
    }
    Formula body = formula();
    return quantified(kind, std::move(variable), std::move(body), std::move(domain), pos);
  }

  Formula primary() {
    if (peek().kind == TokenKind::LParen) {
      take();
      Formula inner = formula();
      expect(TokenKind::RParen);
      return inner;
    }
    if (peek().kind != TokenKind::Identifier) unexpected("an atom, '(' , 'not' or a quantifier");
    const Position pos = peek().position;
    Term left = term();
    if (accept(TokenKind::Equals)) {
      Term right = term();
      return equals(std::move(left), std::move(right), pos);
    }
    if (left.is_var()) unexpected("'(' or '=' after '" + left.var().name + "'");
    auto& fn = std::get<FunctionApp>(left.node);
    return atom(std::move(fn.symbol), std::move(fn.args), pos);
  }

  Term term() {
    const Token& name = expect(TokenKind::Identifier);
    const Position pos = name.position;
    std::string text = name.text();
    if (!accept(TokenKind::LParen)) return var(std::move(text), pos);
    std::vector<Term> args;
    args.push_back(term());
    while (accept(TokenKind::Comma)) args.push_back(term());
    expect(TokenKind::RParen);
    return app(std::move(text), std::move(args), pos);
  }

  std::vector<Token> tokens_;
  std::size_t cursor_ = 0;
};

inline Formula parse_formula(std::span<const Token> tokens) { return Parser(tokens).parse(); }

inline Formula parse_formula(std::string_view source, Position start = {}) {
  const auto tokens = tokenize(source, start);
  return Parser(tokens).parse();
}

}  // namespace fuzzyc::lang
