#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "rieszlab/construction.hpp"
#include "rieszlab/errors.hpp"
#include "rieszlab/exact.hpp"

namespace rieszlab {

/// Sparse trigonometric polynomial sum_f c(f) z^f with exact coefficients
/// and arbitrary-precision frequencies.
///
/// The actual coefficient of z^f is sqrt(scale_sq()) * term(f). Stage
/// polynomials carry scale_sq = 1/p_k and unit stored terms, which keeps
/// every squared modulus inside rational arithmetic; the square root only
/// materializes at grid evaluation.
class SparseTrigPoly {
 public:
  SparseTrigPoly() = default;
  explicit SparseTrigPoly(Rational scale_sq) : scale_sq_(std::move(scale_sq)) {
    if (scale_sq_ <= 0) throw ValidationError("scale_sq must be positive");
  }

  static SparseTrigPoly constant(Rational c) {
    SparseTrigPoly p;
    p.add_term(BigInt(0), RationalComplex(std::move(c)));
    return p;
  }

  void add_term(BigInt freq, RationalComplex c) {
    if (c.is_zero()) return;
    auto it = terms_.find(freq);
    if (it == terms_.end()) {
      terms_.emplace(std::move(freq), std::move(c));
    } else {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  const std::map<BigInt, RationalComplex> &terms() const { return terms_; }
  const Rational &scale_sq() const { return scale_sq_; }
  std::size_t term_count() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  RationalComplex term(const BigInt &freq) const {
    auto it = terms_.find(freq);
    return it == terms_.end() ? RationalComplex() : it->second;
  }

  /// max |frequency|.
  BigInt degree_span() const {
    if (terms_.empty()) return BigInt(0);
    const BigInt lo = abs_big(terms_.begin()->first);
    const BigInt hi = abs_big(terms_.rbegin()->first);
    return lo > hi ? lo : hi;
  }

  /// max frequency - min frequency.
  BigInt frequency_width() const {
    if (terms_.empty()) return BigInt(0);
    return terms_.rbegin()->first - terms_.begin()->first;
  }

  /// Composition with z -> z^m (frequencies multiplied by m).
  SparseTrigPoly dilated(const BigInt &m) const {
    SparseTrigPoly out(scale_sq_);
    for (const auto &[f, c] : terms_) out.terms_.emplace(f * m, c);
    return out;
  }

  /// Exact sum of stored terms; equals the value at z = 1 up to the scale.
  RationalComplex term_sum() const {
    RationalComplex s;
    for (const auto &[f, c] : terms_) s += c;
    return s;
  }

  friend SparseTrigPoly operator+(const SparseTrigPoly &a, const SparseTrigPoly &b) {
    if (a.scale_sq_ != b.scale_sq_)
      throw ValidationError("adding polynomials with different scales");
    SparseTrigPoly out(a.scale_sq_);
    out.terms_ = a.terms_;
    for (const auto &[f, c] : b.terms_) out.add_term(f, c);
    return out;
  }

 private:
  std::map<BigInt, RationalComplex> terms_;
  Rational scale_sq_{1};
};

/// Polynomial product (frequency-domain convolution); scales multiply.
inline SparseTrigPoly convolve(const SparseTrigPoly &a, const SparseTrigPoly &b) {
  SparseTrigPoly out(a.scale_sq() * b.scale_sq());
  for (const auto &[fa, ca] : a.terms())
    for (const auto &[fb, cb] : b.terms()) out.add_term(fa + fb, ca * cb);
  return out;
}

/// Autocorrelation |p|^2: coefficient at n is sum_f c(f) conj(c(f-n)), with
/// the scale folded in so the result is an exact rational polynomial.
/// Output is Hermitian and has scale_sq = 1.
inline SparseTrigPoly modulus_squared(const SparseTrigPoly &p) {
  SparseTrigPoly out;
  for (const auto &[f1, c1] : p.terms())
    for (const auto &[f2, c2] : p.terms())
      out.add_term(f1 - f2, p.scale_sq() * (c1 * c2.conj()));
  return out;
}

enum class PkForm { spacer, ornstein };

/// Stage polynomial of the construction, exactly p_k terms of squared
/// modulus 1/p_k. The spacer form uses exponents -(j h_k + s_k(j)); the
/// offset (ornstein) form uses j (h_k + t_k) + x_{k,j}. The two frequency
/// sets are mirror images, so both give the same |P_k| on the circle.
inline SparseTrigPoly stage_polynomial(const StageGeometry &g, PkForm form) {
  SparseTrigPoly p(Rational(1, g.cuts));
  for (std::int64_t j = 0; j < g.cuts; ++j) {
    BigInt e;
    if (form == PkForm::spacer)
      e = -(BigInt(j) * g.height + g.partial_sums[static_cast<std::size_t>(j)]);
    else
      e = BigInt(j) * (g.height + g.spacer_scale) + g.offsets[static_cast<std::size_t>(j)];
    p.add_term(std::move(e), RationalComplex::one());
  }
  if (p.term_count() != static_cast<std::size_t>(g.cuts))
    throw InvariantError("stage polynomial lost terms (colliding exponents)");
  return p;
}

/// phi_m-style autocorrelation of an offset distribution:
/// coeffs(n) = sum_s xi(s) xi(s+n), all nonnegative, summing to 1 when the
/// support is fully covered. `stage` tags provenance; nullopt marks a
/// detected limit object.
struct PhiFunction {
  std::map<BigInt, Rational> coeffs;
  std::optional<std::size_t> stage;
  bool truncated = false;

  Rational coefficient_sum() const {
    Rational s = 0;
    for (const auto &[n, c] : coeffs) s += c;
    return s;
  }

  Rational at(const BigInt &n) const {
    auto it = coeffs.find(n);
    return it == coeffs.end() ? Rational(0) : it->second;
  }

  SparseTrigPoly to_poly() const {
    SparseTrigPoly p;
    for (const auto &[n, c] : coeffs) p.add_term(n, RationalComplex(c));
    return p;
  }
};

/// Exact coefficients of phi = |sum_s xi(s) z^s|^2. For uniform xi the
/// closed form (t+1-|n|)/(t+1)^2 avoids tabulating huge supports; `window`
/// truncates to |n| <= window (marked truncated when coefficients are lost).
inline PhiFunction phi_of_distribution(const Distribution &xi, const BigInt &t,
                                       std::optional<std::int64_t> window = std::nullopt,
                                       std::optional<std::size_t> stage = std::nullopt) {
  PhiFunction phi;
  phi.stage = stage;
  if (xi.is_uniform()) {
    const BigInt tp1 = t + 1;
    BigInt max_n = t;
    if (window && BigInt(*window) < t) {
      max_n = *window;
      phi.truncated = true;
    }
    if (!window && t > BigInt(1'000'000))
      throw ResourceError("uniform phi with |X| = " + tp1.str() + " needs a window");
    for (BigInt n = -max_n; n <= max_n; ++n)
      phi.coeffs.emplace(n, Rational(tp1 - abs_big(n), tp1 * tp1));
    return phi;
  }
  for (const auto &[s1, w1] : xi.atoms())
    for (const auto &[s2, w2] : xi.atoms()) {
      const BigInt n = s2 - s1;
      if (window && abs_big(n) > BigInt(*window)) {
        phi.truncated = true;
        continue;
      }
      phi.coeffs[n] += w1 * w2;
    }
  return phi;
}

/// The two polynomials of the degenerate-case bound, composed with z -> z^M:
///   F(z) = |p^{-1/2} sum_{k=1}^{p-1} z^k|^2   (autocorrelation profile)
///   G(z) =  p^{-1}   sum_{k=1}^{p-1} z^k      (mean polynomial)
/// F's exact coefficients are (p-1-|n|)/p on |n| <= p-2; the dilation moves
/// every frequency to a multiple of M and nothing else.
struct IncompleteSumPolys {
  SparseTrigPoly squared;  // F_p(z^M), scale 1, rational coefficients
  SparseTrigPoly mean;     // G_p(z^M), scale 1, rational coefficients
};

inline IncompleteSumPolys incomplete_sum_polys(std::int64_t p, const BigInt &dilation) {
  if (p < 2) throw ValidationError("incomplete_sum_polys: p must be >= 2");
  if (dilation < 1) throw ValidationError("incomplete_sum_polys: dilation must be >= 1");
  SparseTrigPoly base(Rational(1, p));
  for (std::int64_t k = 1; k <= p - 1; ++k) base.add_term(BigInt(k), RationalComplex::one());
  SparseTrigPoly mean;
  for (std::int64_t k = 1; k <= p - 1; ++k) mean.add_term(BigInt(k), RationalComplex(Rational(1, p)));
  return {modulus_squared(base).dilated(dilation), mean.dilated(dilation)};
}

}  // namespace rieszlab
