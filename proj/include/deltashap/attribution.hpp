#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "deltashap/imputation.hpp"
#include "deltashap/predictor.hpp"
#include "deltashap/random.hpp"
#include "deltashap/timeseries.hpp"

namespace deltashap {

inline constexpr std::size_t kDefaultPermutations = 25;
inline constexpr std::size_t kDefaultExactCap = 20;

// N orderings of the observed set, drawn by Fisher-Yates from a seeded
// counter-based stream. Regenerating from the same (observed, N, seed) gives
// the same permutations.
class PermutationPlan {
 public:
  // Throws ContractViolation when n == 0.
  PermutationPlan(const ObservedSet& observed, std::size_t n,
                  std::uint64_t seed);

  std::size_t size() const { return permutations_.size(); }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::vector<std::size_t>>& permutations() const {
    return permutations_;
  }
  const ObservedSet& observed() const { return observed_; }

 private:
  ObservedSet observed_;
  std::uint64_t seed_;
  std::vector<std::vector<std::size_t>> permutations_;
};

enum class NormalizationStatus {
  applied,
  skipped_zero_delta,
  skipped_degenerate_sum,
  sign_mismatch_fallback,
  // No rescaling step exists for this method (exact Shapley, FO/AFO, random).
  not_applicable,
};

std::string to_string(NormalizationStatus status);

struct AttributionResult {
  std::string method = "deltashap";
  double delta = 0.0;
  std::vector<double> raw;  // phi-hat, before normalization
  std::vector<double> phi;  // reported attributions
  ObservedSet observed;
  NormalizationStatus status = NormalizationStatus::not_applicable;
  std::size_t model_eval_count = 0;
  // Provenance, echoed into serialized records.
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
  BaselineKind baseline = BaselineKind::forward_fill;
};

struct NormalizedAttribution {
  std::vector<double> phi;
  NormalizationStatus status;
};

// Rescales raw estimates so they sum to delta, with guards:
//   delta == 0               -> zeros, skipped_zero_delta
//   |sum raw| < 1e-12        -> raw unchanged, skipped_degenerate_sum
//   sign(sum raw) != sign(d) -> raw + (delta - sum)/|observed| on observed
//                               features, sign_mismatch_fallback
//   otherwise                -> raw * delta / sum, applied
NormalizedAttribution normalize(std::span<const double> raw, double delta,
                                const ObservedSet& observed);

// f(window) - f(window with its final step replaced by the baseline row).
double prediction_delta(const Predictor& model, const Window& window,
                        const BaselineStrategy& strategy);

// v(S) = f(substitute(window, S)) - f(substitute(window, {})).
double subset_value(const Predictor& model, const Window& window,
                    std::span<const std::size_t> subset,
                    const BaselineStrategy& strategy);

// Permutation-sampled Shapley attribution of the prediction change at the
// final step.
//
// For every permutation the |F_obs|+1 nested prefixes are scored once and the
// marginal contribution of the feature entering at position i is
// v(prefix_{i+1}) - v(prefix_i). Together with f(window) and f(empty) this
// costs N*(|F_obs|+1)+2 model evaluations, issued as one batch. Marginals are
// accumulated in (permutation, position) order, so results are bit-identical
// for a given plan.
AttributionResult deltashap(const Predictor& model, const Window& window,
                            const PermutationPlan& plan,
                            const BaselineStrategy& strategy);

// Convenience overload building the plan from (n, seed).
AttributionResult deltashap(const Predictor& model, const Window& window,
                            std::size_t n, std::uint64_t seed,
                            const BaselineStrategy& strategy);

// Exact Shapley values over the observed final-step features by subset
// enumeration:
//   phi_j = (1/m) sum_{S in F_obs \ {j}} C(m-1,|S|)^{-1} [v(S+j) - v(S)].
// Costs 2^m + 1 evaluations. Throws BudgetExceeded when m > cap.
AttributionResult exact_shapley(const Predictor& model, const Window& window,
                                const BaselineStrategy& strategy,
                                std::size_t cap = kDefaultExactCap);

enum class OcclusionKind { zero, training_sample };

std::string to_string(OcclusionKind kind);

struct OcclusionConfig {
  OcclusionKind kind = OcclusionKind::zero;
  // Per-feature pool of training values (AFO only).
  std::vector<std::vector<double>> pool;
  std::size_t n_draws = 10;
};

// Builds the AFO pool from every observed cell of a dataset.
std::vector<std::vector<double>> training_value_pool(const Dataset& ds);

// FO / AFO magnitude scores: |f(window) - f(window with final-step feature j
// replaced)|, averaged over n_draws pool samples for AFO. Scored for observed
// features only; unobserved features get 0. Throws ConfigError when AFO is
// asked to replace a feature whose pool is empty.
std::vector<double> feature_occlusion(const Predictor& model,
                                      const Window& window,
                                      const OcclusionConfig& config,
                                      CounterRng& rng);

// Uniform(-1, 1) scores on observed features, 0 elsewhere.
std::vector<double> random_attribution(const ObservedSet& observed,
                                       std::size_t feature_count,
                                       CounterRng& rng);

}  // namespace deltashap
