#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deltashap/attribution.hpp"
#include "deltashap/imputation.hpp"
#include "deltashap/predictor.hpp"
#include "deltashap/timeseries.hpp"

namespace deltashap {

enum class RemovalDirection { most_salient, least_salient };

std::string to_string(RemovalDirection direction);

inline constexpr double kDefaultRemovalFraction = 0.25;

struct RemovalPolicy {
  double p = kDefaultRemovalFraction;
  RemovalDirection direction = RemovalDirection::most_salient;

  // Adaptive per-instance budget:
  //   most_salient:  ceil(p * m)
  //   least_salient: (D - m) + ceil(p * m)
  // Throws ConfigError unless p is in (0, 1].
  std::size_t budget(std::size_t observed_count,
                     std::size_t feature_count) const;
};

// most_salient: observed features by descending |phi|.
// least_salient: unobserved features (ascending index), then observed ones by
// ascending |phi|. Ties go to the lower feature index in both directions.
std::vector<std::size_t> rank_features(std::span<const double> phi,
                                       const ObservedSet& observed,
                                       RemovalDirection direction);

// Replaces the final-step values of the first k features of `order` with the
// baseline row and clears their mask bits. Throws ContractViolation when k
// exceeds order.size(); callers truncate `order` to the removal budget.
Window remove_k(const Window& window, std::span<const std::size_t> order,
                std::size_t k, const BaselineRow& baseline);

struct RemovalCurve {
  RemovalDirection direction = RemovalDirection::most_salient;
  // f(X_0), ..., f(X_K) after 0..K cumulative removals.
  std::vector<double> predictions;
  // cumulative[k] = sum_{i<k} |f(X_i) - f(X_{i+1})|; cumulative[0] = 0.
  std::vector<double> cumulative;

  std::size_t budget() const { return predictions.size() - 1; }
};

// Scores the K+1 windows of a removal path in one batch.
RemovalCurve removal_curve(const Predictor& model, const Window& window,
                           std::span<const std::size_t> order,
                           const BaselineStrategy& strategy);

// Cumulative prediction difference along the most-salient path (cpd) or
// preservation along the least-salient path (cpp), for a budget of K
// features. K may not exceed the number of features the path can remove
// (|F_obs| for cpd, D for cpp).
double cpd(const Predictor& model, const Window& window,
           std::span<const double> phi, std::size_t k,
           const BaselineStrategy& strategy);
double cpp(const Predictor& model, const Window& window,
           std::span<const double> phi, std::size_t k,
           const BaselineStrategy& strategy);

// Mean of CPD (CPP) over k = 1..K. Throws ContractViolation for K = 0.
double aupd(const Predictor& model, const Window& window,
            std::span<const double> phi, std::size_t k,
            const BaselineStrategy& strategy);
double aupp(const Predictor& model, const Window& window,
            std::span<const double> phi, std::size_t k,
            const BaselineStrategy& strategy);

// Area under a curve's cumulative values, (1/K) sum_{k=1..K} cumulative[k].
double curve_area(const RemovalCurve& curve);

// Mann-Whitney AUC with ties counted 1/2. Throws UndefinedMetric unless both
// classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

// Average precision: sum over distinct score thresholds of
// (R_n - R_{n-1}) * P_n, no interpolation. Throws UndefinedMetric without a
// positive label.
double apr(std::span<const double> scores, std::span<const int> labels);

// Per-direction dataset results.
struct DirectionReport {
  RemovalDirection direction = RemovalDirection::most_salient;
  // Per instance: adaptive budget, CPD/CPP at the budget, and AUPD/AUPP
  // (nullopt when the budget is 0).
  std::vector<std::size_t> budgets;
  std::vector<double> cumulative_at_budget;
  std::vector<std::optional<double>> area;
  // Mean of `area` over instances with a budget >= 1.
  double mean_area = 0.0;
  // Index k = 0..K_max. Instances whose budget is below k keep their
  // maximal-removal prediction.
  std::vector<double> auc_by_k;
  std::vector<double> apr_by_k;
  std::vector<double> mean_cumulative_by_k;
  // (1/K) sum_{k=1..K} |AUC_0 - AUC_k| and the APR counterpart.
  double auc_area = 0.0;
  double apr_area = 0.0;
};

struct EvalReport {
  std::string method;
  double p = kDefaultRemovalFraction;
  DirectionReport most;   // deletion: AUPD, AUAUCD, AUAPRD
  DirectionReport least;  // preservation: AUPP, AUAUCP, AUAPRP
  // Metric evaluations; the CLI adds the attribution cost.
  std::size_t model_evals = 0;
  // Excluded from serialized reports so those stay byte-reproducible.
  double wall_clock_seconds = 0.0;

  double aupd() const { return most.mean_area; }
  double auaucd() const { return most.auc_area; }
  double auaprd() const { return most.apr_area; }
  double aupp() const { return least.mean_area; }
  double auaucp() const { return least.auc_area; }
  double auaprp() const { return least.apr_area; }
};

// Evaluates one attribution method over a prepared dataset. phis[i] holds the
// attributions for ds.instances[i]. k_max defaults to the largest adaptive
// budget of each direction. Throws UndefinedMetric for single-class labels.
EvalReport dataset_degradation(const Predictor& model, const Dataset& prepared,
                               std::span<const std::vector<double>> phis,
                               double p, const BaselineStrategy& strategy,
                               std::optional<std::size_t> k_max = std::nullopt,
                               const std::string& method = "");

}  // namespace deltashap
