#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "rieszlab/construction.hpp"
#include "rieszlab/errors.hpp"
#include "rieszlab/parallel.hpp"
#include "rieszlab/rng.hpp"
#include "rieszlab/spectral.hpp"
#include "rieszlab/trigpoly.hpp"

namespace rieszlab {

struct KBOptions {
  std::size_t replicas = 10'000;
  std::uint64_t seed = 1;
  /// Points with 1 - phi_m(z) below this are reported as degenerate and
  /// excluded from the ratio.
  double degenerate_tol = 1e-6;
  std::size_t batches = 16;
  /// Full enumeration of the offset tuple replaces sampling when
  /// |X_m|^(p_m - 1) fits this budget.
  std::size_t enumeration_budget = 1'000'000;
};

struct KBPointStats {
  std::size_t z_index = 0;
  double one_minus_phi = 0;
  double mean_abs_dev = 0;     // E | |P_m(z)|^2 - 1 |
  double mean_abs_dev_se = 0;  // batch standard error (0 on the exact path)
  double var_tau = 0;          // empirical var(tau_1(z)) = 1 - |mean tau|^2
  double var_tau_se = 0;
  double var_tau_formula = 0;  // 1 - phi_m(z), the exact identity
  double ratio = 0;            // mean_abs_dev / (apq_norm (1-phi)^2)
  double ratio_se = 0;
  bool degenerate = false;
};

struct KBStats {
  std::size_t stage = 0;
  std::int64_t cuts = 0;
  std::size_t replicas = 0;
  std::size_t grid_size = 0;
  bool exact_enumeration = false;
  Rational apq_norm{0};  // sum_{p != q} |a_pq|^2 = (p-1)(p-2)/p^2
  std::vector<KBPointStats> points;
  double min_ratio = 0;
  std::size_t argmin = 0;  // index into points
  bool all_degenerate = false;
  std::string note;
};

namespace detail {

struct KBGridContext {
  std::size_t N = 0;
  std::uint64_t step_mod = 0;  // (h_m + t_m) mod N
  std::shared_ptr<const std::vector<std::complex<double>>> table;

  std::complex<double> offset_value(const BigInt &x, std::size_t j) const {
    return (*table)[(floor_mod_u64(x, N) * j) % N];
  }
  /// |P_m(z_j)|^2 for one offset tuple (x_0 = 0 implicit).
  double stage_poly_sq(std::span<const BigInt> offsets, std::int64_t cuts, std::size_t j) const {
    std::complex<double> s = (*table)[0];
    for (std::int64_t p = 1; p < cuts; ++p) {
      const std::uint64_t f = (static_cast<std::uint64_t>(p) * step_mod +
                               floor_mod_u64(offsets[static_cast<std::size_t>(p) - 1], N)) %
                              N;
      s += (*table)[(f * j) % N];
    }
    return std::norm(s) / static_cast<double>(cuts);
  }
};

inline double batch_se(std::span<const double> per_replica, std::size_t batches) {
  const std::size_t R = per_replica.size();
  if (R < 2 * batches || batches < 2) return 0.0;
  const std::size_t width = R / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b)
    means[b] = grid_mean(per_replica.subspan(b * width, width));
  const double m = grid_mean(means);
  double var = 0;
  for (double x : means) var += (x - m) * (x - m);
  var /= static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

}  // namespace detail

/// Spread `count` grid indices over (0, N) avoiding points where
/// 1 - phi(z) < tol (there the KB denominator vanishes).
inline std::vector<std::size_t> select_z_points(std::span<const double> one_minus_phi,
                                                std::size_t count, double tol) {
  const std::size_t N = one_minus_phi.size();
  std::vector<std::size_t> out;
  std::vector<std::uint8_t> taken(N, 0);
  for (std::size_t i = 0; i < count && out.size() < count; ++i) {
    std::size_t j = (N * (2 * i + 1)) / (2 * count);
    std::size_t probes = 0;
    while (probes < N && (taken[j] || one_minus_phi[j] < tol)) {
      j = (j + 1) % N;
      ++probes;
    }
    if (probes >= N) break;
    taken[j] = 1;
    out.push_back(j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Monte Carlo / exact-enumeration estimates of the Khintchine-Bonami chain
/// at stage m: E||P_m(z)|^2 - 1| against its lower-bound denominator
/// ((p-1)(p-2)/p^2)(1 - phi_m(z))^2, plus the variance identity
/// var(tau_1(z)) = 1 - phi_m(z). The empirical constant is min over z of
/// the ratio; it is an output, never an input.
inline KBStats kb_ratio(const OrnsteinParams &params, std::size_t m, std::size_t grid_N,
                        const std::vector<std::size_t> &z_indices, const KBOptions &opt) {
  if (m >= params.stages()) throw RangeError("stage out of range");
  const std::int64_t p = params.cuts[m];
  const BigInt t = params.spacer_scale[m];
  const auto h = heights(params);

  KBStats stats;
  stats.stage = m;
  stats.cuts = p;
  stats.replicas = opt.replicas;
  stats.grid_size = grid_N;
  stats.apq_norm = Rational(BigInt(p - 1) * (p - 2), BigInt(p) * p);

  detail::KBGridContext ctx;
  ctx.N = grid_N;
  ctx.step_mod = floor_mod_u64(h[m] + t, grid_N);
  ctx.table = detail::twiddles(grid_N);

  const PhiFunction phi = phi_of_distribution(params.xi[m], t, std::nullopt, m);
  const auto phi_vals = grid_eval(phi.to_poly(), grid_N);

  // Exact path: every offset tuple, weighted by the product measure.
  const BigInt support = params.xi[m].support_size(t);
  bool enumerate = false;
  if (support <= BigInt(opt.enumeration_budget)) {
    const BigInt tuples = bigint_pow(support, static_cast<unsigned>(p - 1));
    enumerate = tuples <= BigInt(opt.enumeration_budget);
  }
  stats.exact_enumeration = enumerate;

  std::vector<std::vector<BigInt>> replica_offsets;
  std::vector<double> replica_weight;
  if (enumerate) {
    std::vector<BigInt> values;
    std::vector<double> weights;
    if (params.xi[m].is_uniform()) {
      const double w = 1.0 / to_double(support);
      for (BigInt s = -t / 2; s <= t / 2; ++s) {
        values.push_back(s);
        weights.push_back(w);
      }
    } else {
      for (const auto &[s, w] : params.xi[m].atoms()) {
        values.push_back(s);
        weights.push_back(to_double(w));
      }
    }
    const std::size_t S = values.size();
    const std::size_t coords = static_cast<std::size_t>(p - 1);
    std::vector<std::size_t> idx(coords, 0);
    for (;;) {
      std::vector<BigInt> tuple(coords);
      double w = 1.0;
      for (std::size_t c = 0; c < coords; ++c) {
        tuple[c] = values[idx[c]];
        w *= weights[idx[c]];
      }
      replica_offsets.push_back(std::move(tuple));
      replica_weight.push_back(w);
      std::size_t c = 0;
      while (c < coords && ++idx[c] == S) idx[c++] = 0;
      if (c == coords) break;
    }
    stats.replicas = replica_offsets.size();
  } else {
    replica_offsets.resize(opt.replicas);
    parallel_for(opt.replicas, [&](std::size_t r) {
      auto rng = make_stream(opt.seed, m, r);
      std::vector<BigInt> tuple;
      tuple.reserve(static_cast<std::size_t>(p - 1));
      for (std::int64_t i = 0; i + 1 < p; ++i)
        tuple.push_back(params.xi[m].sample(rng, t));
      replica_offsets[r] = std::move(tuple);
    });
    replica_weight.assign(opt.replicas, 1.0 / static_cast<double>(opt.replicas));
  }

  const std::size_t R = replica_offsets.size();
  stats.points.resize(z_indices.size());
  parallel_for(z_indices.size(), [&](std::size_t zi) {
    const std::size_t j = z_indices[zi];
    KBPointStats &pt = stats.points[zi];
    pt.z_index = j;
    const double phi_z = std::max(0.0, phi_vals[j].real());
    pt.one_minus_phi = 1.0 - phi_z;
    pt.var_tau_formula = pt.one_minus_phi;

    std::vector<double> dev(R);
    std::vector<double> tau_re(R), tau_im(R);
    for (std::size_t r = 0; r < R; ++r) {
      const auto &tuple = replica_offsets[r];
      dev[r] = std::abs(ctx.stage_poly_sq(tuple, p, j) - 1.0);
      const auto tau = tuple.empty() ? (*ctx.table)[0] : ctx.offset_value(tuple[0], j);
      tau_re[r] = tau.real();
      tau_im[r] = tau.imag();
    }
    if (enumerate) {
      std::vector<double> weighted(R);
      for (std::size_t r = 0; r < R; ++r) weighted[r] = dev[r] * replica_weight[r];
      pt.mean_abs_dev = pairwise_sum(weighted);
      for (std::size_t r = 0; r < R; ++r) weighted[r] = tau_re[r] * replica_weight[r];
      const double mu_re = pairwise_sum(weighted);
      for (std::size_t r = 0; r < R; ++r) weighted[r] = tau_im[r] * replica_weight[r];
      const double mu_im = pairwise_sum(weighted);
      pt.var_tau = 1.0 - (mu_re * mu_re + mu_im * mu_im);
    } else {
      pt.mean_abs_dev = grid_mean(dev);
      pt.mean_abs_dev_se = detail::batch_se(dev, opt.batches);
      const double mu_re = grid_mean(tau_re), mu_im = grid_mean(tau_im);
      pt.var_tau = 1.0 - (mu_re * mu_re + mu_im * mu_im);
      // Variance SE from batches of the same per-replica draws.
      const std::size_t B = opt.batches;
      if (R >= 2 * B && B >= 2) {
        const std::size_t width = R / B;
        std::vector<double> vb(B);
        for (std::size_t b = 0; b < B; ++b) {
          const double br = grid_mean(std::span(tau_re).subspan(b * width, width));
          const double bi = grid_mean(std::span(tau_im).subspan(b * width, width));
          vb[b] = 1.0 - (br * br + bi * bi);
        }
        const double vm = grid_mean(vb);
        double var = 0;
        for (double x : vb) var += (x - vm) * (x - vm);
        pt.var_tau_se = std::sqrt(var / static_cast<double>(B - 1) / static_cast<double>(B));
      }
    }

    pt.degenerate = pt.one_minus_phi < opt.degenerate_tol;
    if (!pt.degenerate) {
      const double denom = to_double(stats.apq_norm) * pt.one_minus_phi * pt.one_minus_phi;
      pt.ratio = pt.mean_abs_dev / denom;
      pt.ratio_se = pt.mean_abs_dev_se / denom;
    }
  });

  stats.all_degenerate = true;
  bool first = true;
  for (std::size_t i = 0; i < stats.points.size(); ++i) {
    if (stats.points[i].degenerate) continue;
    stats.all_degenerate = false;
    if (first || stats.points[i].ratio < stats.min_ratio) {
      stats.min_ratio = stats.points[i].ratio;
      stats.argmin = i;
      first = false;
    }
  }
  if (stats.all_degenerate)
    stats.note = "degenerate case (1 - phi vanishes at every tested z); use the "
                 "degenerate-case bound instead";
  return stats;
}

/// Masked-integral form of the KB step: the averaged functionals
///   lhs     = E int_F Q ||P_m|^2 - 1| d lambda
///   bracket = E int_F Q (1 - phi_m)   d lambda
/// with Q the root product over `subsequence` per replica. The chain gives
/// lhs >= K' bracket^2 for some absolute K' > 0; implied_constant reports
/// the observed quotient.
struct KBMaskedForm {
  double lhs = 0;
  double bracket = 0;
  double implied_constant = 0;
  std::size_t replicas = 0;
};

inline KBMaskedForm kb_masked_form(const OrnsteinParams &params, std::size_t m,
                                   const std::vector<std::size_t> &subsequence,
                                   const MaskedFunctional &mask, std::size_t grid_N,
                                   std::size_t replicas, std::uint64_t seed) {
  if (m >= params.stages()) throw RangeError("stage out of range");
  for (std::size_t s : subsequence)
    if (s >= m) throw ValidationError("subsequence stages must precede m");
  const PhiFunction phi = phi_of_distribution(params.xi[m], params.spacer_scale[m], std::nullopt, m);
  const auto phi_vals = grid_eval(phi.to_poly(), grid_N);
  std::vector<double> one_minus_phi(grid_N);
  for (std::size_t j = 0; j < grid_N; ++j)
    one_minus_phi[j] = 1.0 - std::max(0.0, phi_vals[j].real());

  std::vector<double> lhs_r(replicas), bracket_r(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    const SpacerRealization omega = sample_realization(params, seed, r);
    std::vector<double> q(grid_N, 1.0);
    for (std::size_t s : subsequence) {
      const auto vals = grid_eval(
          stage_polynomial(spacers_from_realization(params, omega, s), PkForm::ornstein), grid_N);
      for (std::size_t j = 0; j < grid_N; ++j) q[j] *= std::abs(vals[j]);
    }
    const auto pm = grid_eval(
        stage_polynomial(spacers_from_realization(params, omega, m), PkForm::ornstein), grid_N);
    std::vector<double> dev(grid_N), br(grid_N);
    for (std::size_t j = 0; j < grid_N; ++j) {
      dev[j] = q[j] * std::abs(std::norm(pm[j]) - 1.0);
      br[j] = q[j] * one_minus_phi[j];
    }
    lhs_r[r] = mask.integral(dev);
    bracket_r[r] = mask.integral(br);
  });

  KBMaskedForm out;
  out.replicas = replicas;
  out.lhs = grid_mean(lhs_r);
  out.bracket = grid_mean(bracket_r);
  out.implied_constant = out.bracket > 1e-12 ? out.lhs / (out.bracket * out.bracket) : 0.0;
  return out;
}

}  // namespace rieszlab
