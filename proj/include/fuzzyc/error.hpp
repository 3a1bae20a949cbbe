#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fuzzyc {

/// Source location inside a constraint text. Lines and columns are 1-based,
/// `offset` is the 0-based byte offset.
struct Position {
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t offset = 0;

  std::string str() const { return std::to_string(line) + ":" + std::to_string(column); }
};

enum class ErrorCode {
  // fol-lang
  IllegalCharacter,
  UnterminatedIdentifier,
  UnexpectedToken,
  DanglingQuantifier,
  UnboundVariable,
  ShadowedVariable,
  UnknownSymbol,
  ArityMismatch,
  DomainMismatch,
  // semantics
  DomainError,
  MissingEqualityBinding,
  // autodiff
  ShapeMismatch,
  NonFiniteValue,
  SeedNotScalar,
  GraphBudgetExceeded,
  // models / grounding
  UnknownElement,
  EmptyDomain,
  BudgetExceeded,
  UnboundSymbol,
  // loss
  NegativeWeight,
  UnknownGroup,
  EmptyObjective,
  // io / config
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IllegalCharacter: return "IllegalCharacter";
    case ErrorCode::UnterminatedIdentifier: return "UnterminatedIdentifier";
    case ErrorCode::UnexpectedToken: return "UnexpectedToken";
    case ErrorCode::DanglingQuantifier: return "DanglingQuantifier";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::ShadowedVariable: return "ShadowedVariable";
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::DomainMismatch: return "DomainMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::MissingEqualityBinding: return "MissingEqualityBinding";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::SeedNotScalar: return "SeedNotScalar";
    case ErrorCode::GraphBudgetExceeded: return "GraphBudgetExceeded";
    case ErrorCode::UnknownElement: return "UnknownElement";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::UnboundSymbol: return "UnboundSymbol";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::UnknownGroup: return "UnknownGroup";
    case ErrorCode::EmptyObjective: return "EmptyObjective";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// The single exception type thrown by the library. `code()` identifies the
/// failure class; `position()` is set for errors tied to constraint source.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<Position> pos = std::nullopt)
      : std::runtime_error(format(code, message, pos)), code_(code), pos_(pos), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::optional<Position>& position() const noexcept { return pos_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(ErrorCode code, const std::string& message, const std::optional<Position>& pos) {
    std::string out(to_string(code));
    if (pos) out += " at " + pos->str();
    if (!message.empty()) out += ": " + message;
    return out;
  }

  ErrorCode code_;
  std::optional<Position> pos_;
  std::string detail_;
};

}  // namespace fuzzyc
