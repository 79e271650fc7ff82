#include "deltashap/attribution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "deltashap/errors.hpp"

namespace deltashap {

namespace {

// Largest batch handed to the model in one call during exact enumeration.
constexpr std::size_t kExactChunk = 4096;

int sign_of(double x) { return (x > 0) - (x < 0); }

}  // namespace

PermutationPlan::PermutationPlan(const ObservedSet& observed, std::size_t n,
                                 std::uint64_t seed)
    : observed_(observed), seed_(seed) {
  if (n == 0) throw ContractViolation("number of permutations must be >= 1");
  CounterRng rng(seed);
  permutations_.reserve(n);
  for (std::size_t p = 0; p < n; ++p) {
    std::vector<std::size_t> order = observed.indices();
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t k = rng.below(i);
      std::swap(order[i - 1], order[k]);
    }
    permutations_.push_back(std::move(order));
  }
}

std::string to_string(NormalizationStatus status) {
  switch (status) {
    case NormalizationStatus::applied:
      return "applied";
    case NormalizationStatus::skipped_zero_delta:
      return "skipped_zero_delta";
    case NormalizationStatus::skipped_degenerate_sum:
      return "skipped_degenerate_sum";
    case NormalizationStatus::sign_mismatch_fallback:
      return "sign_mismatch_fallback";
    case NormalizationStatus::not_applicable:
      return "not_applicable";
  }
  return "not_applicable";
}

NormalizedAttribution normalize(std::span<const double> raw, double delta,
                                const ObservedSet& observed) {
  NormalizedAttribution out{std::vector<double>(raw.size(), 0.0),
                            NormalizationStatus::applied};
  if (delta == 0.0) {
    out.status = NormalizationStatus::skipped_zero_delta;
    return out;
  }
  double sum = 0.0;
  for (std::size_t j : observed.indices()) sum += raw[j];

  if (std::abs(sum) < 1e-12) {
    out.phi.assign(raw.begin(), raw.end());
    out.status = NormalizationStatus::skipped_degenerate_sum;
    return out;
  }
  if (sign_of(sum) != sign_of(delta)) {
    const double shift = (delta - sum) / static_cast<double>(observed.size());
    for (std::size_t j : observed.indices()) out.phi[j] = raw[j] + shift;
    out.status = NormalizationStatus::sign_mismatch_fallback;
    return out;
  }
  const double factor = delta / sum;
  for (std::size_t j : observed.indices()) out.phi[j] = raw[j] * factor;
  return out;
}

double prediction_delta(const Predictor& model, const Window& window,
                        const BaselineStrategy& strategy) {
  const BaselineRow baseline = baseline_row(window, strategy);
  const std::vector<Window> batch{
      window, substitute(window, std::span<const std::size_t>{}, baseline)};
  const auto f = model.predict_batch(batch);
  return f[0] - f[1];
}

double subset_value(const Predictor& model, const Window& window,
                    std::span<const std::size_t> subset,
                    const BaselineStrategy& strategy) {
  const BaselineRow baseline = baseline_row(window, strategy);
  const std::vector<Window> batch{
      substitute(window, subset, baseline),
      substitute(window, std::span<const std::size_t>{}, baseline)};
  const auto f = model.predict_batch(batch);
  return f[0] - f[1];
}

AttributionResult deltashap(const Predictor& model, const Window& window,
                            const PermutationPlan& plan,
                            const BaselineStrategy& strategy) {
  const ObservedSet observed = derive_observed_set(window);
  if (!(plan.observed() == observed)) {
    throw ContractViolation(
        "permutation plan was drawn for a different observed set");
  }
  const std::size_t d = window.feature_count();
  const std::size_t m = observed.size();
  const std::size_t n = plan.size();
  const BaselineRow baseline = baseline_row(window, strategy);

  // Layout: [window, empty, perm0 prefix0..m, perm1 prefix0..m, ...]
  std::vector<Window> batch;
  batch.reserve(2 + n * (m + 1));
  batch.push_back(window);
  std::vector<std::uint8_t> keep(d, 0);
  batch.push_back(substitute_mask(window, keep, baseline));
  for (const auto& order : plan.permutations()) {
    std::fill(keep.begin(), keep.end(), 0);
    batch.push_back(substitute_mask(window, keep, baseline));
    for (std::size_t j : order) {
      keep[j] = 1;
      batch.push_back(substitute_mask(window, keep, baseline));
    }
  }
  const auto f = model.predict_batch(batch);

  AttributionResult result;
  result.method = "deltashap";
  result.observed = observed;
  result.delta = f[0] - f[1];
  result.raw.assign(d, 0.0);
  result.model_eval_count = batch.size();
  result.permutations = n;
  result.seed = plan.seed();
  result.baseline = strategy.kind;

  const double f_empty = f[1];
  const double inv_n = 1.0 / static_cast<double>(n);
  std::size_t cursor = 2;
  for (const auto& order : plan.permutations()) {
    double v_prev = f[cursor] - f_empty;
    for (std::size_t pos = 0; pos < m; ++pos) {
      const double v_next = f[cursor + pos + 1] - f_empty;
      result.raw[order[pos]] += inv_n * (v_next - v_prev);
      v_prev = v_next;
    }
    cursor += m + 1;
  }

  auto normalized = normalize(result.raw, result.delta, observed);
  result.phi = std::move(normalized.phi);
  result.status = normalized.status;
  return result;
}

AttributionResult deltashap(const Predictor& model, const Window& window,
                            std::size_t n, std::uint64_t seed,
                            const BaselineStrategy& strategy) {
  const PermutationPlan plan(derive_observed_set(window), n, seed);
  return deltashap(model, window, plan, strategy);
}

AttributionResult exact_shapley(const Predictor& model, const Window& window,
                                const BaselineStrategy& strategy,
                                std::size_t cap) {
  const ObservedSet observed = derive_observed_set(window);
  const std::size_t m = observed.size();
  if (m > cap || m >= 63) {
    throw BudgetExceeded(
        "exact Shapley over " + std::to_string(m) +
        " observed features needs 2^" + std::to_string(m) + " + 1 = " +
        (m < 63 ? std::to_string((std::uint64_t{1} << m) + 1)
                : std::string("more than 2^63")) +
        " model evaluations; the cap is " + std::to_string(cap) +
        " observed features (2^" + std::to_string(cap) + ")");
  }
  const std::size_t d = window.feature_count();
  const BaselineRow baseline = baseline_row(window, strategy);
  const std::size_t subsets = std::size_t{1} << m;

  const double f_full = model.predict(window);
  std::vector<double> f_subset(subsets);
  std::vector<std::uint8_t> keep(d, 0);
  std::vector<Window> batch;
  for (std::size_t start = 0; start < subsets; start += kExactChunk) {
    const std::size_t stop = std::min(subsets, start + kExactChunk);
    batch.clear();
    for (std::size_t s = start; s < stop; ++s) {
      for (std::size_t i = 0; i < m; ++i) {
        keep[observed[i]] = static_cast<std::uint8_t>((s >> i) & 1U);
      }
      batch.push_back(substitute_mask(window, keep, baseline));
    }
    const auto f = model.predict_batch(batch);
    std::copy(f.begin(), f.end(), f_subset.begin() + start);
  }

  AttributionResult result;
  result.method = "exact";
  result.observed = observed;
  result.delta = f_full - f_subset[0];
  result.raw.assign(d, 0.0);
  result.model_eval_count = subsets + 1;
  result.baseline = strategy.kind;
  result.status = NormalizationStatus::not_applicable;

  if (m > 0) {
    // inv_binom[s] = 1 / C(m-1, s)
    std::vector<double> inv_binom(m, 1.0);
    double c = 1.0;
    for (std::size_t s = 0; s < m; ++s) {
      inv_binom[s] = 1.0 / c;
      c = c * static_cast<double>(m - 1 - s) / static_cast<double>(s + 1);
    }
    const double f_empty = f_subset[0];
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t bit = std::size_t{1} << i;
      double acc = 0.0;
      for (std::size_t s = 0; s < subsets; ++s) {
        if (s & bit) continue;
        const double v_without = f_subset[s] - f_empty;
        const double v_with = f_subset[s | bit] - f_empty;
        const auto size = static_cast<std::size_t>(std::popcount(s));
        acc += inv_binom[size] * (v_with - v_without);
      }
      result.raw[observed[i]] = acc / static_cast<double>(m);
    }
  }
  result.phi = result.raw;
  return result;
}

std::string to_string(OcclusionKind kind) {
  return kind == OcclusionKind::zero ? "fo" : "afo";
}

std::vector<std::vector<double>> training_value_pool(const Dataset& ds) {
  std::vector<std::vector<double>> pool(ds.schema.feature_count());
  for (const auto& inst : ds.instances) {
    const Window& w = inst.window;
    for (std::size_t t = 0; t < w.window_length(); ++t) {
      for (std::size_t j = 0; j < w.feature_count() && j < pool.size(); ++j) {
        if (w.observed(t, j) && std::isfinite(w.value(t, j))) {
          pool[j].push_back(w.value(t, j));
        }
      }
    }
  }
  return pool;
}

std::vector<double> feature_occlusion(const Predictor& model,
                                      const Window& window,
                                      const OcclusionConfig& config,
                                      CounterRng& rng) {
  const ObservedSet observed = derive_observed_set(window);
  const std::size_t d = window.feature_count();
  const std::size_t last = window.window_length() - 1;
  const bool sampled = config.kind == OcclusionKind::training_sample;
  const std::size_t draws = sampled ? config.n_draws : 1;
  if (sampled) {
    if (draws == 0) throw ConfigError("AFO needs n_draws >= 1");
    for (std::size_t j : observed.indices()) {
      if (j >= config.pool.size() || config.pool[j].empty()) {
        throw ConfigError("AFO training pool for feature " +
                          std::to_string(j) + " is empty");
      }
    }
  }

  std::vector<Window> batch;
  batch.reserve(1 + observed.size() * draws);
  batch.push_back(window);
  for (std::size_t j : observed.indices()) {
    for (std::size_t k = 0; k < draws; ++k) {
      double replacement = 0.0;
      if (sampled) {
        const auto& pool = config.pool[j];
        replacement = pool[rng.below(pool.size())];
      }
      batch.push_back(window.with_cell(last, j, replacement, true));
    }
  }
  const auto f = model.predict_batch(batch);

  std::vector<double> scores(d, 0.0);
  std::size_t cursor = 1;
  for (std::size_t j : observed.indices()) {
    double acc = 0.0;
    for (std::size_t k = 0; k < draws; ++k) acc += std::abs(f[0] - f[cursor++]);
    scores[j] = acc / static_cast<double>(draws);
  }
  return scores;
}

std::vector<double> random_attribution(const ObservedSet& observed,
                                       std::size_t feature_count,
                                       CounterRng& rng) {
  std::vector<double> scores(feature_count, 0.0);
  for (std::size_t j : observed.indices()) {
    scores[j] = 2.0 * rng.uniform() - 1.0;
  }
  return scores;
}

}  // namespace deltashap
