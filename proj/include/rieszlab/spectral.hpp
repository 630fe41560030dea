#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "rieszlab/construction.hpp"
#include "rieszlab/errors.hpp"
#include "rieszlab/parallel.hpp"
#include "rieszlab/trigpoly.hpp"

namespace rieszlab {

namespace detail {

/// Shared table of the N-th roots of unity, cached per grid size.
inline std::shared_ptr<const std::vector<std::complex<double>>> twiddles(std::size_t N) {
  static std::mutex mutex;
  static std::vector<std::pair<std::size_t, std::shared_ptr<const std::vector<std::complex<double>>>>>
      cache;
  std::scoped_lock lock(mutex);
  for (const auto &[n, table] : cache)
    if (n == N) return table;
  auto table = std::make_shared<std::vector<std::complex<double>>>();
  table->reserve(N);
  for (std::size_t j = 0; j < N; ++j) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(N);
    table->push_back({std::cos(angle), std::sin(angle)});
  }
  if (cache.size() >= 8) cache.erase(cache.begin());
  cache.emplace_back(N, table);
  return table;
}

}  // namespace detail

/// Samples sum_f c(f) z^f at z = exp(2 pi i j / N), j = 0..N-1.
/// Frequencies reduce mod N exactly, so arbitrarily large exponents alias
/// onto the grid without precision loss.
inline std::vector<std::complex<double>> grid_eval(const SparseTrigPoly &p, std::size_t N) {
  if (N < 1) throw ValidationError("grid_eval: N must be >= 1");
  const double scale = std::sqrt(to_double(p.scale_sq()));
  struct Term {
    std::uint64_t freq_mod;
    std::complex<double> coeff;
  };
  std::vector<Term> terms;
  terms.reserve(p.term_count());
  for (const auto &[f, c] : p.terms())
    terms.push_back({floor_mod_u64(f, N), scale * c.to_complex()});

  const auto table = detail::twiddles(N);
  std::vector<std::complex<double>> values(N);
  const std::size_t chunk = std::max<std::size_t>(N / 64, 1024);
  parallel_for((N + chunk - 1) / chunk, [&](std::size_t ci) {
    const std::size_t begin = ci * chunk, end = std::min(N, begin + chunk);
    for (std::size_t j = begin; j < end; ++j) {
      std::complex<double> v = 0;
      for (const Term &t : terms) v += t.coeff * (*table)[(t.freq_mod * j) % N];
      values[j] = v;
    }
  });
  return values;
}

enum class DensityKind { squared, root };

/// Nonnegative samples of a partial Riesz product on the uniform N-grid.
struct GridDensity {
  std::size_t grid_size = 0;
  DensityKind kind = DensityKind::squared;
  std::vector<std::size_t> stages;  // the subsequence of included stages
  std::vector<double> values;
  bool aliasing_risk = false;

  double mean() const { return grid_mean(values); }
  double sup() const {
    double m = 0;
    for (double v : values) m = std::max(m, v);
    return m;
  }

  static GridDensity ones(std::size_t N, DensityKind kind = DensityKind::root) {
    GridDensity d;
    d.grid_size = N;
    d.kind = kind;
    d.values.assign(N, 1.0);
    return d;
  }
};

struct RieszProduct {
  GridDensity root;
  GridDensity squared;
  double root_mean = 1.0;
  double squared_mean = 1.0;
  double root_sup = 1.0;
  double squared_sup = 1.0;
};

/// Default grid: max(2^14, next power of two above 4x the smallest factor's
/// span), capped at 2^22.
inline std::size_t default_grid_size(const BigInt &smallest_span) {
  const std::size_t cap = std::size_t(1) << 22;
  BigInt want = 4 * smallest_span;
  if (want > BigInt(cap)) return cap;
  std::size_t n = next_pow2(want.convert_to<std::size_t>());
  return std::max<std::size_t>(n, std::size_t(1) << 14);
}

/// Pointwise product of |P_{n_i}| (root) and |P_{n_i}|^2 (squared) over the
/// given stage geometries, with grid means and sup norms. N below twice the
/// total frequency span of the squared product sets aliasing_risk.
inline RieszProduct riesz_partial(const std::vector<StageGeometry> &stages, std::size_t N) {
  RieszProduct out;
  out.root.grid_size = out.squared.grid_size = N;
  out.root.kind = DensityKind::root;
  out.squared.kind = DensityKind::squared;
  out.root.values.assign(N, 1.0);
  out.squared.values.assign(N, 1.0);

  BigInt total_span = 0;
  for (const StageGeometry &g : stages) {
    out.root.stages.push_back(g.stage);
    out.squared.stages.push_back(g.stage);
    const SparseTrigPoly p = stage_polynomial(g, PkForm::ornstein);
    total_span += p.frequency_width();
    const auto vals = grid_eval(p, N);
    for (std::size_t j = 0; j < N; ++j) {
      const double m = std::abs(vals[j]);
      out.root.values[j] *= m;
      out.squared.values[j] *= m * m;
    }
  }
  const bool risk = BigInt(N) <= 2 * total_span;
  out.root.aliasing_risk = out.squared.aliasing_risk = risk;
  out.root_mean = out.root.mean();
  out.squared_mean = out.squared.mean();
  out.root_sup = out.root.sup();
  out.squared_sup = out.squared.sup();
  return out;
}

/// Doubles N until the root-kind mean moves by less than `tol` (the squared
/// kind is a trig polynomial and needs no refinement once N > 2 span).
struct ConvergedRiesz {
  RieszProduct product;
  std::size_t grid_size = 0;
  bool converged = false;
  double last_change = 0.0;
};

inline ConvergedRiesz riesz_partial_converged(const std::vector<StageGeometry> &stages,
                                              std::size_t start_N, double tol = 1e-6,
                                              std::size_t cap = std::size_t(1) << 22) {
  ConvergedRiesz out;
  std::size_t N = std::max<std::size_t>(next_pow2(start_N), 1 << 10);
  out.product = riesz_partial(stages, N);
  out.grid_size = N;
  double prev = out.product.root_mean;
  while (N < cap) {
    N *= 2;
    RieszProduct refined = riesz_partial(stages, N);
    out.last_change = std::abs(refined.root_mean - prev);
    prev = refined.root_mean;
    out.product = std::move(refined);
    out.grid_size = N;
    if (out.last_change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

/// Window of Fourier coefficients sigma_hat(n), |n| <= window. Real and
/// symmetric for every product of squared moduli, so only n >= 0 is stored.
struct CorrelationSeq {
  enum class Provenance { convolution, tower };
  std::int64_t window = 0;
  std::vector<Rational> values;  // index n = 0..window
  Provenance provenance = Provenance::convolution;
  bool exact = true;

  const Rational &at(std::int64_t n) const {
    const std::size_t idx = static_cast<std::size_t>(n < 0 ? -n : n);
    if (idx >= values.size()) throw RangeError("correlation index outside window");
    return values[idx];
  }
};

/// Exact coefficients of prod |P_{n_i}|^2 on |n| <= window by iterated
/// sparse convolution. Intermediate lags are pruned only when they provably
/// cannot re-enter the window (|m| > window + sum of remaining spans);
/// everything kept is exact rational arithmetic.
inline CorrelationSeq product_fourier_coeffs(const std::vector<StageGeometry> &stages,
                                             std::int64_t window,
                                             std::size_t term_budget = 1'000'000) {
  if (window < 0) throw ValidationError("window must be >= 0");
  std::vector<SparseTrigPoly> factors;
  factors.reserve(stages.size());
  for (const StageGeometry &g : stages)
    factors.push_back(modulus_squared(stage_polynomial(g, PkForm::ornstein)));

  std::vector<BigInt> remaining_span(factors.size() + 1, BigInt(0));
  for (std::size_t i = factors.size(); i-- > 0;)
    remaining_span[i] = remaining_span[i + 1] + factors[i].degree_span();

  SparseTrigPoly acc = SparseTrigPoly::constant(Rational(1));
  for (std::size_t i = 0; i < factors.size(); ++i) {
    SparseTrigPoly next;
    const BigInt keep = BigInt(window) + remaining_span[i + 1];
    for (const auto &[fa, ca] : acc.terms())
      for (const auto &[fb, cb] : factors[i].terms()) {
        BigInt lag = fa + fb;
        if (abs_big(lag) > keep) continue;
        next.add_term(std::move(lag), ca * cb);
      }
    if (next.term_count() > term_budget)
      throw ResourceError("convolution exceeded term budget (" +
                          std::to_string(next.term_count()) + " terms)");
    acc = std::move(next);
  }

  CorrelationSeq seq;
  seq.window = window;
  seq.provenance = CorrelationSeq::Provenance::convolution;
  seq.values.reserve(static_cast<std::size_t>(window) + 1);
  for (std::int64_t n = 0; n <= window; ++n) {
    const RationalComplex c = acc.term(BigInt(n));
    const RationalComplex c_neg = acc.term(BigInt(-n));
    if (!c.is_real() || !(c_neg == c.conj()))
      throw InvariantError("product coefficients lost Hermitian symmetry");
    seq.values.push_back(c.re);
  }
  return seq;
}

/// DFT coefficient (1/N) sum_j v_j exp(-2 pi i n j / N) of grid samples;
/// cross-check path for the exact convolution route.
inline std::complex<double> grid_fourier_coeff(std::span<const double> values, std::int64_t n) {
  const std::size_t N = values.size();
  const auto table = detail::twiddles(N);
  const std::uint64_t n_mod = static_cast<std::uint64_t>(((n % static_cast<std::int64_t>(N)) +
                                                          static_cast<std::int64_t>(N)) %
                                                         static_cast<std::int64_t>(N));
  std::vector<double> re(N), im(N);
  for (std::size_t j = 0; j < N; ++j) {
    const std::complex<double> w = (*table)[(n_mod * j) % N];  // exp(+i theta)
    re[j] = values[j] * w.real();
    im[j] = -values[j] * w.imag();
  }
  return {pairwise_sum(re) / static_cast<double>(N), pairwise_sum(im) / static_cast<double>(N)};
}

/// Boolean mask over the N-grid with its masked mean functional
/// (1/N) sum_{j in F} Q_j, i.e. the integral of Q over F.
struct MaskedFunctional {
  enum class Kind { full_torus, f_epsilon, custom };
  std::size_t grid_size = 0;
  Kind kind = Kind::custom;
  double epsilon = 0.0;
  std::vector<std::uint8_t> mask;

  std::size_t count() const {
    std::size_t c = 0;
    for (auto b : mask) c += b;
    return c;
  }
  double fraction() const {
    return grid_size == 0 ? 0.0 : static_cast<double>(count()) / static_cast<double>(grid_size);
  }
  /// (1/N) sum over masked points of Q.
  double integral(std::span<const double> q) const {
    if (q.size() != mask.size()) throw ValidationError("mask/grid size mismatch");
    std::vector<double> masked(q.size());
    for (std::size_t j = 0; j < q.size(); ++j) masked[j] = mask[j] ? q[j] : 0.0;
    return grid_mean(masked);
  }

  static MaskedFunctional full_torus(std::size_t N) {
    MaskedFunctional f;
    f.grid_size = N;
    f.kind = Kind::full_torus;
    f.mask.assign(N, 1);
    return f;
  }
};

}  // namespace rieszlab
