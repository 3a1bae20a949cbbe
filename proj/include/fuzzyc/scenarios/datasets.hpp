#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fuzzyc/grounding/domain.hpp"
#include "fuzzyc/models/given.hpp"
#include "fuzzyc/random.hpp"

namespace fuzzyc::scenarios {

/// Training and held-out samples with their given tables and ground-truth
/// labels (per domain).
struct Dataset {
  grounding::DomainMap train;
  grounding::DomainMap test;
  models::GivenTable train_givens;
  models::GivenTable test_givens;
  std::map<std::string, std::vector<int>> train_labels;
  std::map<std::string, std::vector<int>> test_labels;
  /// Married couples (married scenario only), as index pairs into `train`.
  std::vector<std::pair<std::size_t, std::size_t>> couples;
  /// Training elements whose label is observed (married scenario only).
  std::vector<bool> labeled;
};

// ---------------------------------------------------------------------------
// Three-class 8x8 glyphs

inline constexpr std::size_t kGlyphSide = 8;
inline constexpr std::size_t kGlyphClasses = 3;

inline const std::array<std::array<const char*, 6>, kGlyphClasses>& glyph_templates() {
  static const std::array<std::array<const char*, 6>, kGlyphClasses> t = {{
      {" #### ", "##  ##", "##  ##", "##  ##", "##  ##", " #### "},
      {"  ##  ", " ###  ", "  ##  ", "  ##  ", "  ##  ", " #### "},
      {" #### ", "##  ##", "   ## ", "  ##  ", " ##   ", "######"},
  }};
  return t;
}

struct GlyphOptions {
  std::size_t train_per_class = 500;
  std::size_t test_per_class = 200;
  int max_shift = 1;         // template offset jitter in pixels
  double min_intensity = 0.75;
  double noise = 0.03;       // std. dev. of additive pixel noise
};

/// One jittered glyph of `cls`, row-major in [0,1].
inline std::vector<double> make_glyph(std::size_t cls, const GlyphOptions& opts, Rng& rng) {
  std::vector<double> img(kGlyphSide * kGlyphSide, 0.0);
  const int span = 2 * opts.max_shift + 1;
  const int dy = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(span))) - opts.max_shift;
  const int dx = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(span))) - opts.max_shift;
  const double intensity = uniform(rng, opts.min_intensity, 1.0);
  const auto& tpl = glyph_templates()[cls];
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      if (tpl[static_cast<std::size_t>(r)][c] != '#') continue;
      const int y = 1 + r + dy, x = 1 + c + dx;
      if (y < 0 || x < 0 || y >= static_cast<int>(kGlyphSide) || x >= static_cast<int>(kGlyphSide)) continue;
      img[static_cast<std::size_t>(y) * kGlyphSide + static_cast<std::size_t>(x)] = intensity;
    }
  }
  for (auto& p : img) p = std::clamp(p + opts.noise * normal(rng), 0.0, 1.0);
  return img;
}

namespace detail {

inline void glyph_split(const std::string& domain, std::size_t per_class, const GlyphOptions& opts, Rng& rng,
                        grounding::DomainMap& domains, models::GivenTable& givens, std::vector<int>& labels) {
  static const char* kNames[kGlyphClasses] = {"isZero", "isOne", "isTwo"};
  const std::size_t n = per_class * kGlyphClasses;
  std::vector<double> values;
  values.reserve(n * kGlyphSide * kGlyphSide);
  labels.clear();
  // classes interleaved so that prefixes of the domain stay balanced
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i % kGlyphClasses;
    const auto img = make_glyph(cls, opts, rng);
    values.insert(values.end(), img.begin(), img.end());
    labels.push_back(static_cast<int>(cls));
  }
  domains[domain] = grounding::Domain(domain, lang::DomainShape::image(kGlyphSide, kGlyphSide, 1),
                                      Tensor({n, kGlyphSide * kGlyphSide}, std::move(values)));
  for (std::size_t c = 0; c < kGlyphClasses; ++c) givens.declare(kNames[c], {n});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t e[1] = {i};
    givens.set(kNames[labels[i]], e, 1.0);
  }
}

}  // namespace detail

/// Domain `Glyph` with given predicates isZero / isOne / isTwo.
inline Dataset make_glyph_dataset(std::uint64_t seed, const GlyphOptions& opts = {}) {
  Dataset d;
  Rng train_rng(derive_seed(seed, {1}));
  Rng test_rng(derive_seed(seed, {2}));
  detail::glyph_split("Glyph", opts.train_per_class, opts, train_rng, d.train, d.train_givens, d.train_labels["Glyph"]);
  detail::glyph_split("Glyph", opts.test_per_class, opts, test_rng, d.test, d.test_givens, d.test_labels["Glyph"]);
  return d;
}

// ---------------------------------------------------------------------------
// Married / Republican

struct MarriedOptions {
  std::size_t people = 200;     // half of them Republican
  std::size_t dims = 4;
  double separation = 0.8;      // class mean offset along the party direction
  double labeled_fraction = 0.2;
};

/// Domain `People`; given predicates Married (symmetric, couples of the
/// same party), isRep / isDem on the labeled fifth. Label 1 is Republican.
/// The held-out set is the unlabeled part of the same population, so
/// `test` is left empty.
inline Dataset make_married_dataset(std::uint64_t seed, const MarriedOptions& opts = {}) {
  Dataset d;
  Rng rng(derive_seed(seed, {3}));
  const std::size_t n = opts.people;
  if (n < 4 || n % 4 != 0) throw Error(ErrorCode::ConfigError, "married scenario needs a population divisible by 4");

  std::vector<double> direction(opts.dims);
  double norm = 0.0;
  for (auto& v : direction) {
    v = normal(rng);
    norm += v * v;
  }
  for (auto& v : direction) v /= std::sqrt(norm);

  std::vector<int> party(n);
  for (std::size_t i = 0; i < n; ++i) party[i] = i < n / 2 ? 1 : 0;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[uniform_index(rng, i + 1)]);
  std::vector<int> shuffled(n);
  for (std::size_t i = 0; i < n; ++i) shuffled[i] = party[order[i]];
  party = shuffled;

  std::vector<double> features(n * opts.dims);
  for (std::size_t i = 0; i < n; ++i) {
    const double sign = party[i] == 1 ? 1.0 : -1.0;
    for (std::size_t k = 0; k < opts.dims; ++k) features[i * opts.dims + k] = sign * opts.separation * direction[k] + normal(rng);
  }
  d.train["People"] = grounding::Domain("People", lang::DomainShape::vector(opts.dims), Tensor({n, opts.dims}, std::move(features)));
  d.train_labels["People"] = party;

  auto& g = d.train_givens;
  g.declare("Married", {n, n});
  g.declare("isRep", {n});
  g.declare("isDem", {n});
  for (int p : {1, 0}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (party[i] == p) members.push_back(i);
    }
    for (std::size_t i = members.size(); i-- > 1;) std::swap(members[i], members[uniform_index(rng, i + 1)]);
    for (std::size_t k = 0; k + 1 < members.size(); k += 2) {
      const std::size_t a = members[k], b = members[k + 1];
      const std::size_t ab[2] = {a, b}, ba[2] = {b, a};
      g.set("Married", ab, 1.0);
      g.set("Married", ba, 1.0);
      d.couples.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  std::sort(d.couples.begin(), d.couples.end());

  d.labeled.assign(n, false);
  std::vector<std::size_t> pick(n);
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  for (std::size_t i = n; i-- > 1;) std::swap(pick[i], pick[uniform_index(rng, i + 1)]);
  const auto labeled = static_cast<std::size_t>(std::llround(opts.labeled_fraction * static_cast<double>(n)));
  for (std::size_t k = 0; k < labeled; ++k) {
    const std::size_t i = pick[k];
    d.labeled[i] = true;
    const std::size_t e[1] = {i};
    g.set(party[i] == 1 ? "isRep" : "isDem", e, 1.0);
  }
  return d;
}

}  // namespace fuzzyc::scenarios
