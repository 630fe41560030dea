#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rieszlab/errors.hpp"
#include "rieszlab/exact.hpp"
#include "rieszlab/rng.hpp"

namespace rieszlab {

/// Offset distribution xi_k on X_k = {-t_k/2, ..., t_k/2}.
///
/// `uniform` means uniform over all of X_k and is kept in closed form: with
/// the classic preset t_k = h_{k-1} the support is far too large to tabulate.
class Distribution {
 public:
  enum class Kind { uniform, table };

  static Distribution uniform() { return Distribution(Kind::uniform, {}); }

  static Distribution table(std::vector<std::pair<BigInt, Rational>> atoms) {
    return Distribution(Kind::table, std::move(atoms));
  }

  static Distribution point_mass(BigInt at = BigInt(0)) {
    return table({{std::move(at), Rational(1)}});
  }

  Kind kind() const { return kind_; }
  bool is_uniform() const { return kind_ == Kind::uniform; }
  const std::vector<std::pair<BigInt, Rational>> &atoms() const { return atoms_; }

  /// max_s xi(s), given the stage's spacer scale t.
  Rational max_weight(const BigInt &t) const {
    if (kind_ == Kind::uniform) return Rational(1, t + 1);
    Rational m = 0;
    for (const auto &[s, w] : atoms_)
      if (w > m) m = w;
    return m;
  }

  /// Support size |X| for uniform, atom count for tables.
  BigInt support_size(const BigInt &t) const {
    return kind_ == Kind::uniform ? BigInt(t + 1) : BigInt(atoms_.size());
  }

  /// Structural checks: exact normalization and support inside X_k.
  void check(const BigInt &t, std::size_t stage, std::vector<std::string> &errors) const {
    if (kind_ == Kind::uniform) return;
    const BigInt half = t / 2;
    Rational sum = 0;
    for (const auto &[s, w] : atoms_) {
      if (w <= 0)
        errors.push_back("xi_" + std::to_string(stage) + ": weight at " + s.str() +
                         " is not positive");
      if (s < -half || s > half)
        errors.push_back("xi_" + std::to_string(stage) + ": atom " + s.str() +
                         " outside X = {-" + half.str() + ",...," + half.str() + "}");
      sum += w;
    }
    if (sum != 1)
      errors.push_back("xi_" + std::to_string(stage) + ": weights sum to " + sum.str() +
                       ", not 1");
  }

  BigInt sample(std::mt19937_64 &rng, const BigInt &t) const {
    if (kind_ == Kind::uniform) return uniform_bigint(rng, t) - t / 2;
    if (!sampler_) sampler_.emplace(make_sampler());
    return sampler_->sample(rng);
  }

 private:
  Distribution(Kind kind, std::vector<std::pair<BigInt, Rational>> atoms)
      : kind_(kind), atoms_(std::move(atoms)) {}

  DiscreteSampler make_sampler() const {
    std::vector<BigInt> values;
    std::vector<Rational> weights;
    values.reserve(atoms_.size());
    weights.reserve(atoms_.size());
    for (const auto &[s, w] : atoms_) {
      values.push_back(s);
      weights.push_back(w);
    }
    return DiscreteSampler(std::move(values), weights);
  }

  Kind kind_;
  std::vector<std::pair<BigInt, Rational>> atoms_;  // sorted not required, values unique
  mutable std::optional<DiscreteSampler> sampler_;
};

/// Deterministic data of the construction: cuts p_k >= 2, even spacer scales
/// t_k >= 0, deterministic top spacers x_{k,p_k} >= 0, and one offset
/// distribution per stage. Together these fix the probability space.
struct OrnsteinParams {
  std::vector<std::int64_t> cuts;    // p_k
  std::vector<BigInt> spacer_scale;  // t_k
  std::vector<BigInt> top_spacers;   // x_{k,p_k}
  std::vector<Distribution> xi;

  std::size_t stages() const { return cuts.size(); }
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> errors;
  std::size_t horizon = 0;
  /// Partial sum of t_k/h_k + x_{k,p_k}/(p_k h_k) over the horizon.
  Rational finiteness_partial_sum{0};
  double finiteness_tail_ratio = 0.0;
  bool finiteness_divergence_suspected = false;
  Rational inv_cut_sq_partial_sum{0};
  bool bounded_cut_divergent = false;
  std::string note;
};

/// Heights h_0..h_K: h_0 = 1, h_{k+1} = p_k (h_k + t_k) + x_{k,p_k}.
inline std::vector<BigInt> heights(const OrnsteinParams &params) {
  std::vector<BigInt> h;
  h.reserve(params.stages() + 1);
  h.emplace_back(1);
  for (std::size_t k = 0; k < params.stages(); ++k)
    h.push_back(BigInt(params.cuts[k]) * (h.back() + params.spacer_scale[k]) +
                params.top_spacers[k]);
  return h;
}

inline ValidationReport validate_params(const OrnsteinParams &params, std::size_t horizon) {
  ValidationReport report;
  const std::size_t K = params.stages();
  if (params.spacer_scale.size() != K || params.top_spacers.size() != K ||
      params.xi.size() != K) {
    report.errors.push_back("sequence lengths disagree");
    report.ok = false;
    return report;
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (params.cuts[k] < 2)
      report.errors.push_back("p_" + std::to_string(k) + " = " +
                              std::to_string(params.cuts[k]) + " < 2");
    if (params.spacer_scale[k] < 0)
      report.errors.push_back("t_" + std::to_string(k) + " negative");
    if (params.spacer_scale[k] % 2 != 0)
      report.errors.push_back("t_" + std::to_string(k) + " = " + params.spacer_scale[k].str() +
                              " is odd; X_k = {-t/2,...,t/2} needs even t");
    if (params.top_spacers[k] < 0)
      report.errors.push_back("x_{" + std::to_string(k) + ",p} negative");
    params.xi[k].check(params.spacer_scale[k], k, report.errors);
  }
  report.ok = report.errors.empty();
  if (!report.ok) return report;

  const std::size_t H = std::min(horizon, K);
  report.horizon = H;
  const auto h = heights(params);
  std::vector<Rational> terms;
  terms.reserve(H);
  for (std::size_t k = 0; k < H; ++k) {
    const Rational term = Rational(params.spacer_scale[k], h[k]) +
                          Rational(params.top_spacers[k], BigInt(params.cuts[k]) * h[k]);
    report.finiteness_partial_sum += term;
    terms.push_back(term);
  }
  // Tail heuristic: ratios of consecutive nonzero terms near or above 1
  // suggest the series will not converge. Reported, never proved.
  double worst_ratio = 0.0;
  const std::size_t tail = H > 6 ? H - 4 : H / 2;
  for (std::size_t k = tail; k + 1 < H; ++k) {
    if (terms[k] == 0) continue;
    const double ratio = to_double(terms[k + 1]) / to_double(terms[k]);
    worst_ratio = std::max(worst_ratio, ratio);
  }
  report.finiteness_tail_ratio = worst_ratio;
  report.finiteness_divergence_suspected = worst_ratio >= 1.0 - 1e-9;

  std::int64_t max_head = 2, max_tail = 2;
  for (std::size_t k = 0; k < H; ++k) {
    report.inv_cut_sq_partial_sum += Rational(1, BigInt(params.cuts[k]) * params.cuts[k]);
    if (k < H / 2)
      max_head = std::max(max_head, params.cuts[k]);
    else
      max_tail = std::max(max_tail, params.cuts[k]);
  }
  // Cuts that stop growing over the horizon make sum 1/p_k^2 diverge.
  report.bounded_cut_divergent = (H >= 2) && (max_tail <= max_head);
  if (report.bounded_cut_divergent)
    report.note = "sum 1/p_k^2 divergent over horizon: singular by bounded-cut criterion";
  return report;
}

/// One sampled point of the offset probability space: offsets[k] holds
/// x_{k,1}, ..., x_{k,p_k-1}.
struct SpacerRealization {
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  std::vector<std::vector<BigInt>> offsets;
};

/// Draws all offsets, one derived stream per (stage, replica); a pure
/// function of (params, seed, replica) regardless of worker count.
inline SpacerRealization sample_realization(const OrnsteinParams &params, std::uint64_t seed,
                                            std::uint64_t replica = 0) {
  SpacerRealization omega;
  omega.seed = seed;
  omega.replica = replica;
  omega.offsets.resize(params.stages());
  for (std::size_t k = 0; k < params.stages(); ++k) {
    auto rng = make_stream(seed, k, replica);
    const std::size_t count = static_cast<std::size_t>(params.cuts[k]) - 1;
    omega.offsets[k].reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      omega.offsets[k].push_back(params.xi[k].sample(rng, params.spacer_scale[k]));
  }
  return omega;
}

inline std::vector<SpacerRealization> sample_realizations(const OrnsteinParams &params,
                                                          std::uint64_t seed, std::size_t count) {
  std::vector<SpacerRealization> out;
  out.reserve(count);
  for (std::size_t r = 0; r < count; ++r) out.push_back(sample_realization(params, seed, r));
  return out;
}

/// Stage-k geometry induced by one realization: offsets with the boundary
/// conventions x_{k,0} = 0 and x_{k,p_k} = top spacer, the spacer counts
/// a_i = t_k + x_{k,i} - x_{k,i-1}, and their partial sums s(0..p_k).
struct StageGeometry {
  std::size_t stage = 0;
  std::int64_t cuts = 0;
  BigInt spacer_scale;
  BigInt height;       // h_k
  BigInt next_height;  // h_{k+1}
  std::vector<BigInt> offsets;       // x_{k,0..p_k}
  std::vector<BigInt> spacers;       // a_1..a_{p_k}
  std::vector<BigInt> partial_sums;  // s(0)..s(p_k)
};

inline StageGeometry spacers_from_realization(const OrnsteinParams &params,
                                              const SpacerRealization &omega, std::size_t k) {
  if (k >= params.stages()) throw RangeError("stage out of range");
  if (omega.offsets.size() <= k ||
      omega.offsets[k].size() != static_cast<std::size_t>(params.cuts[k]) - 1)
    throw ValidationError("realization does not match params at stage " + std::to_string(k));

  StageGeometry g;
  g.stage = k;
  g.cuts = params.cuts[k];
  g.spacer_scale = params.spacer_scale[k];
  const auto h = heights(params);
  g.height = h[k];
  g.next_height = h[k + 1];

  const BigInt half = g.spacer_scale / 2;
  g.offsets.reserve(static_cast<std::size_t>(g.cuts) + 1);
  g.offsets.emplace_back(0);
  for (const BigInt &x : omega.offsets[k]) {
    if (x < -half || x > half)
      throw ValidationError("offset " + x.str() + " outside X at stage " + std::to_string(k));
    g.offsets.push_back(x);
  }
  g.offsets.push_back(params.top_spacers[k]);

  g.partial_sums.emplace_back(0);
  BigInt total = 0;
  for (std::size_t i = 1; i < g.offsets.size(); ++i) {
    BigInt a = g.spacer_scale + g.offsets[i] - g.offsets[i - 1];
    if (a < 0) throw InvariantError("negative spacer count at stage " + std::to_string(k));
    total += a;
    g.spacers.push_back(std::move(a));
    g.partial_sums.push_back(total);
  }
  if (total != BigInt(g.cuts) * g.spacer_scale + params.top_spacers[k])
    throw InvariantError("spacer sum identity failed at stage " + std::to_string(k));
  if (g.next_height != BigInt(g.cuts) * g.height + total)
    throw InvariantError("height recursion mismatch at stage " + std::to_string(k));
  return g;
}

inline std::vector<StageGeometry> all_stage_geometries(const OrnsteinParams &params,
                                                       const SpacerRealization &omega) {
  std::vector<StageGeometry> out;
  out.reserve(params.stages());
  for (std::size_t k = 0; k < params.stages(); ++k)
    out.push_back(spacers_from_realization(params, omega, k));
  return out;
}

}  // namespace rieszlab
