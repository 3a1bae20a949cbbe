#pragma once

#include <charconv>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzyc/error.hpp"
#include "fuzzyc/lang/ast.hpp"
#include "fuzzyc/lang/parser.hpp"
#include "fuzzyc/lang/printer.hpp"
#include "fuzzyc/lang/signature.hpp"

namespace fuzzyc::lang {

/// One formula line of a constraint file together with its tags.
struct ConstraintSpec {
  std::string name;
  Formula formula;
  std::string source;  // formula text as written
  double weight = 1.0;
  std::string group = "main";
  std::map<std::string, std::string> options;  // bracket tags: tnorm, forall, exists, eq, mapping
  std::size_t line = 0;
};

struct ConstraintFile {
  Signature signature;
  std::vector<ConstraintSpec> constraints;

  const ConstraintSpec* find(const std::string& name) const {
    for (const auto& c : constraints) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::size_t> parse_size(std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline bool is_word(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

/// "16" -> vector, "8x8" / "8x8x3" -> image.
inline DomainShape parse_shape(std::string_view text, Position pos) {
  const auto parts = split(text, 'x');
  std::vector<std::size_t> dims;
  for (const auto& p : parts) {
    auto v = parse_size(p);
    if (!v || *v == 0) throw Error(ErrorCode::ConfigError, "bad domain shape '" + std::string(text) + "'", pos);
    dims.push_back(*v);
  }
  if (dims.size() == 1) return DomainShape::vector(dims[0]);
  if (dims.size() == 2) return DomainShape::image(dims[0], dims[1], 1);
  if (dims.size() == 3) return DomainShape::image(dims[0], dims[1], dims[2]);
  throw Error(ErrorCode::ConfigError, "bad domain shape '" + std::string(text) + "'", pos);
}

// "name(A, B)" -> {name, [A, B]}
inline std::pair<std::string, std::vector<std::string>> parse_symbol_head(std::string_view text, Position pos) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw Error(ErrorCode::ConfigError, "expected name(Domain, ...) in '" + std::string(text) + "'", pos);
  }
  std::string name(trim(text.substr(0, open)));
  auto args = split(text.substr(open + 1, close - open - 1), ',');
  if (!is_word(name)) throw Error(ErrorCode::ConfigError, "bad symbol name '" + name + "'", pos);
  for (const auto& a : args) {
    if (!is_word(a)) throw Error(ErrorCode::ConfigError, "bad domain name '" + a + "'", pos);
  }
  return {name, args};
}

inline bool parse_declaration(std::string_view line, Position pos, Signature& sig) {
  const auto space = line.find_first_of(" \t");
  if (space == std::string_view::npos) return false;
  const std::string_view keyword = line.substr(0, space);
  const std::string_view rest = trim(line.substr(space));
  if (keyword == "domain") {
    const auto sp = rest.find_first_of(" \t");
    if (sp == std::string_view::npos) throw Error(ErrorCode::ConfigError, "expected 'domain <Name> <shape>'", pos);
    const std::string name(rest.substr(0, sp));
    if (!is_word(name)) throw Error(ErrorCode::ConfigError, "bad domain name '" + name + "'", pos);
    sig.add_domain(name, parse_shape(trim(rest.substr(sp)), pos));
    return true;
  }
  if (keyword == "predicate") {
    const auto close = rest.rfind(')');
    if (close == std::string_view::npos) throw Error(ErrorCode::ConfigError, "expected 'predicate p(D) given|learnable'", pos);
    auto [name, args] = parse_symbol_head(rest.substr(0, close + 1), pos);
    const std::string_view kind = trim(rest.substr(close + 1));
    PredicateKind pk = PredicateKind::Learnable;
    if (kind == "given") {
      pk = PredicateKind::Given;
    } else if (!kind.empty() && kind != "learnable") {
      throw Error(ErrorCode::ConfigError, "predicate kind must be 'given' or 'learnable'", pos);
    }
    try {
      sig.add_predicate(name, args, pk);
    } catch (const Error& e) {
      throw Error(e.code(), e.detail(), pos);
    }
    return true;
  }
  if (keyword == "function") {
    const auto arrow = rest.find("->");
    if (arrow == std::string_view::npos) throw Error(ErrorCode::ConfigError, "expected 'function f(D) -> E'", pos);
    auto [name, args] = parse_symbol_head(trim(rest.substr(0, arrow)), pos);
    const std::string out(trim(rest.substr(arrow + 2)));
    try {
      sig.add_function(name, args, out);
    } catch (const Error& e) {
      throw Error(e.code(), e.detail(), pos);
    }
    return true;
  }
  return false;
}

}  // namespace detail

/// Parses a constraint file.
///
///   # comment
///   domain Glyph 8x8            (vector: `16`, image: `HxW` or `HxWxC`)
///   predicate zero(Glyph) learnable
///   predicate isZero(Glyph) given
///   function next(Glyph) -> Glyph
///   [tnorm=product] weight=2 group=main name=sup0 : forall x: isZero(x) implies zero(x)
///
/// Bracket tags come first; `weight=`, `group=` and `name=` tags are
/// terminated by a ':' before the formula.
inline ConstraintFile parse_constraint_file(std::string_view text) {
  ConstraintFile file;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  while (offset <= text.size()) {
    auto end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(offset, end - offset);
    const std::size_t line_offset = offset;
    offset = end + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);

    std::size_t col = 0;
    auto skip_space = [&] {
      while (col < raw.size() && std::isspace(static_cast<unsigned char>(raw[col]))) ++col;
    };
    auto here = [&] { return Position{line_no, col + 1, line_offset + col}; };
    skip_space();
    if (col >= raw.size()) {
      if (end == text.size()) break;
      continue;
    }
    if (detail::parse_declaration(detail::trim(raw), here(), file.signature)) continue;

    ConstraintSpec spec;
    spec.line = line_no;
    while (col < raw.size() && raw[col] == '[') {
      const auto close = raw.find(']', col);
      if (close == std::string_view::npos) throw Error(ErrorCode::ConfigError, "unclosed '[' tag", here());
      const auto tag = raw.substr(col + 1, close - col - 1);
      const auto eq = tag.find('=');
      if (eq == std::string_view::npos) throw Error(ErrorCode::ConfigError, "tag must be [key=value]", here());
      spec.options[std::string(detail::trim(tag.substr(0, eq)))] = std::string(detail::trim(tag.substr(eq + 1)));
      col = close + 1;
      skip_space();
    }
    // key=value tags up to a ':' separator
    {
      std::size_t probe = col;
      std::map<std::string, std::string> tags;
      bool matched = false;
      while (true) {
        std::size_t k = probe;
        while (k < raw.size() && (std::isalnum(static_cast<unsigned char>(raw[k])) || raw[k] == '_')) ++k;
        const std::string_view key = raw.substr(probe, k - probe);
        if (k >= raw.size() || raw[k] != '=' || !(key == "weight" || key == "group" || key == "name")) break;
        std::size_t v = k + 1;
        while (v < raw.size() && !std::isspace(static_cast<unsigned char>(raw[v])) && raw[v] != ':') ++v;
        tags[std::string(key)] = std::string(raw.substr(k + 1, v - k - 1));
        probe = v;
        while (probe < raw.size() && std::isspace(static_cast<unsigned char>(raw[probe]))) ++probe;
        if (probe < raw.size() && raw[probe] == ':') {
          matched = true;
          ++probe;
          break;
        }
      }
      if (matched) {
        for (const auto& [key, value] : tags) {
          if (key == "weight") {
            auto w = detail::parse_double(value);
            if (!w) throw Error(ErrorCode::ConfigError, "weight '" + value + "' is not a number", here());
            if (*w < 0) throw Error(ErrorCode::NegativeWeight, "weight " + value, here());
            spec.weight = *w;
          } else if (key == "group") {
            spec.group = value;
          } else {
            spec.name = value;
          }
        }
        col = probe;
        skip_space();
      }
    }
    const std::string_view formula_text = detail::trim(raw.substr(col));
    spec.source = std::string(formula_text);
    spec.formula = parse_formula(formula_text, here());
    if (spec.name.empty()) spec.name = "c" + std::to_string(file.constraints.size() + 1);
    file.constraints.push_back(std::move(spec));
    if (end == text.size()) break;
  }
  return file;
}

inline ConstraintFile load_constraint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_constraint_file(buf.str());
}

/// Renders declarations and constraints back into constraint-file syntax.
inline std::string print_constraint_file(const ConstraintFile& file) {
  std::ostringstream out;
  for (const auto& [name, shape] : file.signature.domains()) out << "domain " << name << " " << shape.str() << "\n";
  auto args = [](const std::vector<std::string>& ds) {
    std::string s;
    for (std::size_t i = 0; i < ds.size(); ++i) s += (i ? ", " : "") + ds[i];
    return s;
  };
  for (const auto& [name, p] : file.signature.predicates()) {
    out << "predicate " << name << "(" << args(p.arg_domains) << ") "
        << (p.kind == PredicateKind::Given ? "given" : "learnable") << "\n";
  }
  for (const auto& [name, f] : file.signature.functions()) {
    out << "function " << name << "(" << args(f.arg_domains) << ") -> " << f.output_domain << "\n";
  }
  for (const auto& c : file.constraints) {
    for (const auto& [k, v] : c.options) out << "[" << k << "=" << v << "] ";
    std::ostringstream w;
    w.precision(17);
    w << c.weight;
    out << "weight=" << w.str() << " group=" << c.group << " name=" << c.name << " : " << print(c.formula) << "\n";
  }
  return out.str();
}

}  // namespace fuzzyc::lang
