#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fuzzyc/error.hpp"
#include "fuzzyc/tensor.hpp"

namespace fuzzyc::models {

/// Crisp truth values of the given predicates, one dense table per
/// predicate indexed by element tuples. Undeclared entries are false.
class GivenTable {
 public:
  struct Entry {
    std::vector<std::size_t> domain_sizes;
    std::vector<double> values;  // row-major over the element tuple
  };

  void declare(const std::string& predicate, std::vector<std::size_t> domain_sizes) {
    std::size_t n = 1;
    for (auto s : domain_sizes) n *= s;
    entries_[predicate] = Entry{std::move(domain_sizes), std::vector<double>(n, 0.0)};
  }

  bool has(const std::string& predicate) const { return entries_.count(predicate) > 0; }
  const Entry& entry(const std::string& predicate) const {
    auto it = entries_.find(predicate);
    if (it == entries_.end()) throw Error(ErrorCode::UnknownSymbol, "no given table for '" + predicate + "'");
    return it->second;
  }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  void set(const std::string& predicate, std::span<const std::size_t> element, double value) {
    if (value != 0.0 && value != 1.0) {
      throw Error(ErrorCode::ConfigError, "given value for '" + predicate + "' must be 0 or 1");
    }
    auto it = entries_.find(predicate);
    if (it == entries_.end()) throw Error(ErrorCode::UnknownSymbol, "no given table for '" + predicate + "'");
    it->second.values[offset(predicate, it->second, element)] = value;
  }

  double eval(const std::string& predicate, std::span<const std::size_t> element) const {
    const auto& e = entry(predicate);
    return e.values[offset(predicate, e, element)];
  }

  /// Declares `target` as the complement of `source`: target(x) = 1 - source(x).
  void complement(const std::string& target, const std::string& source) {
    Entry e = entry(source);
    for (auto& v : e.values) v = 1.0 - v;
    entries_[target] = std::move(e);
  }

  /// Rows of `element-id,predicate,value`; binary ids are written `a:b`.
  /// Predicates must be declared first. Lines starting with '#' and a
  /// non-numeric header line are skipped.
  void load_csv(std::string_view text) {
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cells;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (cells.size() != 3) throw Error(ErrorCode::ConfigError, "given table line " + std::to_string(line_no) + ": expected 3 columns");
      if (line_no == 1 && !cells[0].empty() && !std::isdigit(static_cast<unsigned char>(cells[0][0]))) continue;
      std::vector<std::size_t> element;
      std::stringstream ids(cells[0]);
      std::string id;
      while (std::getline(ids, id, ':')) {
        try {
          element.push_back(std::stoul(id));
        } catch (const std::exception&) {
          throw Error(ErrorCode::ConfigError, "given table line " + std::to_string(line_no) + ": bad element id '" + cells[0] + "'");
        }
      }
      double v = 0.0;
      try {
        v = std::stod(cells[2]);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "given table line " + std::to_string(line_no) + ": bad value");
      }
      set(cells[1], element, v);
    }
  }

  void load_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    load_csv(buf.str());
  }

  /// Writes the true entries only.
  std::string to_csv() const {
    std::ostringstream out;
    out << "element,predicate,value\n";
    for (const auto& [name, e] : entries_) {
      std::vector<std::size_t> idx(e.domain_sizes.size(), 0);
      for (std::size_t flat = 0; flat < e.values.size(); ++flat) {
        std::size_t rest = flat;
        for (std::size_t k = idx.size(); k-- > 0;) {
          idx[k] = rest % e.domain_sizes[k];
          rest /= e.domain_sizes[k];
        }
        if (e.values[flat] == 0.0) continue;
        for (std::size_t k = 0; k < idx.size(); ++k) out << (k ? ":" : "") << idx[k];
        out << "," << name << ",1\n";
      }
    }
    return out.str();
  }

 private:
  static std::size_t offset(const std::string& predicate, const Entry& e, std::span<const std::size_t> element) {
    if (element.size() != e.domain_sizes.size()) {
      throw Error(ErrorCode::ArityMismatch, "'" + predicate + "' takes " + std::to_string(e.domain_sizes.size()) +
                                                " element(s), got " + std::to_string(element.size()));
    }
    std::size_t flat = 0;
    for (std::size_t k = 0; k < element.size(); ++k) {
      if (element[k] >= e.domain_sizes[k]) {
        throw Error(ErrorCode::UnknownElement,
                    "element " + std::to_string(element[k]) + " is outside the domain of '" + predicate + "'");
      }
      flat = flat * e.domain_sizes[k] + element[k];
    }
    return flat;
  }

  std::map<std::string, Entry> entries_;
};

}  // namespace fuzzyc::models
