#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rieszlab/construction.hpp"
#include "rieszlab/errors.hpp"
#include "rieszlab/exact.hpp"
#include "rieszlab/spectral.hpp"
#include "rieszlab/trigpoly.hpp"

namespace rieszlab {

/// Finite stage-K cutting-and-stacking tower over one realization.
///
/// The space is laid out so that level i of the stage-K column is the
/// interval [i w, (i+1) w) with w = nu(B_K); the map shifts level i to level
/// i+1 and is undefined on the top level. Intermediate bases B_j are unions
/// of levels; base_levels[j] holds their indices, obtained by unrolling
///   B_j = union_i T^{i h_j + s_j(i)} B_{j+1}.
/// All geometry is exact rational, so correlation queries and the spectral
/// recursion check below are exact.
struct Tower {
  std::size_t stage = 0;  // K
  std::vector<BigInt> heights;
  std::vector<StageGeometry> geometry;  // stages 0..K-1
  Rational base_width{1};               // nu(B_K)
  Rational total_mass{1};               // h_K * nu(B_K) = 1 + spacer mass
  std::vector<std::vector<BigInt>> base_levels;  // sorted level indices of B_j, j = 0..K

  const BigInt &height() const { return heights[stage]; }

  std::pair<Rational, Rational> level_interval(const BigInt &i) const {
    if (i < 0 || i >= height()) throw RangeError("level index out of range");
    return {Rational(i) * base_width, Rational(i + 1) * base_width};
  }

  /// Largest shift n with T^n defined on all of B_j inside this tower
  /// contract: n < h_K - h_j.
  BigInt max_window(std::size_t j) const {
    if (j > stage) throw RangeError("stage out of range");
    return heights[stage] - heights[j];
  }
};

inline Tower build_tower(const OrnsteinParams &params, const SpacerRealization &omega,
                         std::size_t K, std::size_t level_budget = 1u << 20) {
  if (K > params.stages()) throw RangeError("tower stage exceeds configured stages");
  Tower t;
  t.stage = K;
  t.heights = heights(params);
  t.heights.resize(K + 1);

  BigInt columns = 1;
  for (std::size_t k = 0; k < K; ++k) {
    t.geometry.push_back(spacers_from_realization(params, omega, k));
    columns *= params.cuts[k];
    if (columns > BigInt(level_budget))
      throw ResourceError("tower base decomposition exceeds level budget");
  }
  t.base_width = Rational(1, columns);
  t.total_mass = Rational(t.heights[K]) * t.base_width;

  // Unroll base index sets downwards from B_K = {level 0}.
  t.base_levels.assign(K + 1, {});
  t.base_levels[K] = {BigInt(0)};
  for (std::size_t j = K; j-- > 0;) {
    const StageGeometry &g = t.geometry[j];
    std::vector<BigInt> levels;
    levels.reserve(t.base_levels[j + 1].size() * static_cast<std::size_t>(g.cuts));
    for (std::int64_t i = 0; i < g.cuts; ++i) {
      const BigInt d = BigInt(i) * g.height + g.partial_sums[static_cast<std::size_t>(i)];
      for (const BigInt &e : t.base_levels[j + 1]) levels.push_back(d + e);
    }
    std::sort(levels.begin(), levels.end());
    if (std::adjacent_find(levels.begin(), levels.end()) != levels.end())
      throw InvariantError("base columns overlap at stage " + std::to_string(j));
    t.base_levels[j] = std::move(levels);
  }
  return t;
}

namespace detail {

/// Count-based correlation table of a level set: counts[n] = #{e : e and
/// e+n both in the set}. Pairs that would pass the undefined top level are
/// clipped by construction, which is the tower's contract.
class LevelCorrelation {
 public:
  explicit LevelCorrelation(const std::vector<BigInt> &levels) : size_(levels.size()) {
    for (std::size_t a = 0; a < levels.size(); ++a)
      for (std::size_t b = a + 1; b < levels.size(); ++b) ++counts_[levels[b] - levels[a]];
  }

  Rational sigma(const BigInt &n) const {
    if (n == 0) return Rational(1);
    const BigInt a = abs_big(n);
    auto it = counts_.find(a);
    const long c = it == counts_.end() ? 0 : it->second;
    return Rational(c, size_);
  }

 private:
  std::map<BigInt, long> counts_;
  std::size_t size_;
};

}  // namespace detail

/// sigma_hat_{f_j}(n) = nu(B_j intersect T^{-n} B_j) / nu(B_j) for
/// 0 <= n <= window, exact rationals. Contract: window < h_K - h_j.
inline CorrelationSeq correlation(const Tower &t, std::size_t j, std::int64_t window) {
  if (j > t.stage) throw RangeError("stage out of range");
  if (window < 0 || BigInt(window) >= t.max_window(j))
    throw RangeError("window too large for stage " + std::to_string(j) +
                     " (needs n < h_K - h_j = " + t.max_window(j).str() + ")");
  detail::LevelCorrelation table(t.base_levels[j]);
  CorrelationSeq seq;
  seq.window = window;
  seq.provenance = CorrelationSeq::Provenance::tower;
  seq.values.reserve(static_cast<std::size_t>(window) + 1);
  for (std::int64_t n = 0; n <= window; ++n) seq.values.push_back(table.sigma(BigInt(n)));
  return seq;
}

/// Residual of the spectral recursion d sigma_j = |P_j|^2 d sigma_{j+1} on
/// the window: max_n |sigma_j(n) - sum_m c_j(m) sigma_{j+1}(n-m)| with c_j
/// the exact autocorrelation of the stage-j polynomial. Both sides are
/// exact rationals; the identity holds combinatorially, so the residual is
/// expected to be exactly zero.
struct RecursionReport {
  std::size_t stage = 0;
  std::int64_t window = 0;
  Rational max_residual{0};
  bool zero = true;
};

inline RecursionReport recursion_check(const Tower &t, std::size_t j, std::int64_t window) {
  if (j >= t.stage) throw RangeError("recursion_check needs j < K");
  if (window < 0 || BigInt(window) >= t.max_window(j))
    throw RangeError("window too large for stage " + std::to_string(j));
  const SparseTrigPoly cj = modulus_squared(stage_polynomial(t.geometry[j], PkForm::ornstein));
  detail::LevelCorrelation upper(t.base_levels[j]);
  detail::LevelCorrelation lower(t.base_levels[j + 1]);

  RecursionReport report;
  report.stage = j;
  report.window = window;
  for (std::int64_t n = 0; n <= window; ++n) {
    const Rational lhs = upper.sigma(BigInt(n));
    Rational rhs = 0;
    for (const auto &[lag, c] : cj.terms()) rhs += c.re * lower.sigma(BigInt(n) - lag);
    Rational residual = lhs - rhs;
    if (residual < 0) residual = -residual;
    if (residual > report.max_residual) report.max_residual = residual;
  }
  report.zero = report.max_residual == 0;
  return report;
}

}  // namespace rieszlab
