#include "deltashap/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "deltashap/errors.hpp"
#include "deltashap/parallel.hpp"

namespace deltashap {

std::string to_string(RemovalDirection direction) {
  return direction == RemovalDirection::most_salient ? "most_salient"
                                                     : "least_salient";
}

std::size_t RemovalPolicy::budget(std::size_t observed_count,
                                  std::size_t feature_count) const {
  if (!(p > 0.0 && p <= 1.0)) {
    throw ConfigError("removal fraction p must lie in (0, 1]");
  }
  const auto top = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(observed_count)));
  if (direction == RemovalDirection::most_salient) return top;
  return (feature_count - observed_count) + top;
}

std::vector<std::size_t> rank_features(std::span<const double> phi,
                                       const ObservedSet& observed,
                                       RemovalDirection direction) {
  std::vector<std::size_t> order = observed.indices();
  const auto magnitude = [&](std::size_t j) { return std::abs(phi[j]); };
  if (direction == RemovalDirection::most_salient) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return magnitude(a) > magnitude(b);
                     });
    return order;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return magnitude(a) < magnitude(b);
                   });
  std::vector<std::size_t> ranked;
  ranked.reserve(phi.size());
  for (std::size_t j = 0; j < phi.size(); ++j) {
    if (!observed.contains(j)) ranked.push_back(j);
  }
  ranked.insert(ranked.end(), order.begin(), order.end());
  return ranked;
}

Window remove_k(const Window& window, std::span<const std::size_t> order,
                std::size_t k, const BaselineRow& baseline) {
  if (k > order.size()) {
    throw ContractViolation("cannot remove " + std::to_string(k) +
                            " features with a budget of " +
                            std::to_string(order.size()));
  }
  const std::size_t last = window.window_length() - 1;
  Window out = window;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = order[i];
    out = out.with_cell(last, j, baseline.values[j], false);
  }
  return out;
}

RemovalCurve removal_curve(const Predictor& model, const Window& window,
                           std::span<const std::size_t> order,
                           const BaselineStrategy& strategy) {
  const BaselineRow baseline = baseline_row(window, strategy);
  const std::size_t last = window.window_length() - 1;
  std::vector<Window> path;
  path.reserve(order.size() + 1);
  path.push_back(window);
  for (std::size_t j : order) {
    path.push_back(path.back().with_cell(last, j, baseline.values[j], false));
  }
  RemovalCurve curve;
  curve.predictions = model.predict_batch(path);
  curve.cumulative.assign(path.size(), 0.0);
  for (std::size_t k = 1; k < path.size(); ++k) {
    curve.cumulative[k] =
        curve.cumulative[k - 1] +
        std::abs(curve.predictions[k - 1] - curve.predictions[k]);
  }
  return curve;
}

double curve_area(const RemovalCurve& curve) {
  const std::size_t k = curve.budget();
  if (k == 0) throw ContractViolation("area needs a budget of at least 1");
  double sum = 0.0;
  for (std::size_t i = 1; i <= k; ++i) sum += curve.cumulative[i];
  return sum / static_cast<double>(k);
}

namespace {

RemovalCurve direction_curve(const Predictor& model, const Window& window,
                             std::span<const double> phi, std::size_t k,
                             const BaselineStrategy& strategy,
                             RemovalDirection direction) {
  if (phi.size() != window.feature_count()) {
    throw ShapeError("attribution length does not match D");
  }
  auto order = rank_features(phi, derive_observed_set(window), direction);
  if (k > order.size()) {
    throw ContractViolation("budget " + std::to_string(k) + " exceeds the " +
                            std::to_string(order.size()) +
                            " removable features");
  }
  order.resize(k);
  return removal_curve(model, window, order, strategy);
}

}  // namespace

double cpd(const Predictor& model, const Window& window,
           std::span<const double> phi, std::size_t k,
           const BaselineStrategy& strategy) {
  return direction_curve(model, window, phi, k, strategy,
                         RemovalDirection::most_salient)
      .cumulative.back();
}

double cpp(const Predictor& model, const Window& window,
           std::span<const double> phi, std::size_t k,
           const BaselineStrategy& strategy) {
  return direction_curve(model, window, phi, k, strategy,
                         RemovalDirection::least_salient)
      .cumulative.back();
}

double aupd(const Predictor& model, const Window& window,
            std::span<const double> phi, std::size_t k,
            const BaselineStrategy& strategy) {
  if (k == 0) throw ContractViolation("AUPD needs K >= 1");
  return curve_area(direction_curve(model, window, phi, k, strategy,
                                    RemovalDirection::most_salient));
}

double aupp(const Predictor& model, const Window& window,
            std::span<const double> phi, std::size_t k,
            const BaselineStrategy& strategy) {
  if (k == 0) throw ContractViolation("AUPP needs K >= 1");
  return curve_area(direction_curve(model, window, phi, k, strategy,
                                    RemovalDirection::least_salient));
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::size_t positives = 0;
  for (int y : labels) positives += y == 1;
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetric("AUC needs both classes");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of mid-ranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) rank_sum += mid_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(positives);
  const double nn = static_cast<double>(negatives);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double apr(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::size_t positives = 0;
  for (int y : labels) positives += y == 1;
  if (positives == 0) throw UndefinedMetric("APR needs a positive label");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) {
      tp += labels[idx[j]] == 1;
      ++j;
    }
    const double recall =
        static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(j);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

namespace {

DirectionReport evaluate_direction(const Predictor& model,
                                   const Dataset& prepared,
                                   std::span<const std::vector<double>> phis,
                                   const RemovalPolicy& policy,
                                   const BaselineStrategy& strategy,
                                   std::optional<std::size_t> k_max,
                                   std::size_t& evals) {
  const std::size_t n = prepared.instances.size();
  const std::size_t d = prepared.schema.feature_count();
  std::vector<RemovalCurve> curves(n);
  parallel_for(n, [&](std::size_t i) {
    const Window& w = prepared.instances[i].window;
    const ObservedSet observed = derive_observed_set(w);
    auto order = rank_features(phis[i], observed, policy.direction);
    order.resize(policy.budget(observed.size(), d));
    curves[i] = removal_curve(model, w, order, strategy);
  });

  DirectionReport report;
  report.direction = policy.direction;
  std::size_t largest = 0;
  std::size_t counted = 0;
  double area_sum = 0.0;
  for (const auto& curve : curves) {
    const std::size_t b = curve.budget();
    evals += curve.predictions.size();
    largest = std::max(largest, b);
    report.budgets.push_back(b);
    report.cumulative_at_budget.push_back(curve.cumulative.back());
    if (b == 0) {
      report.area.push_back(std::nullopt);
    } else {
      const double a = curve_area(curve);
      report.area.push_back(a);
      area_sum += a;
      ++counted;
    }
  }
  report.mean_area = counted ? area_sum / static_cast<double>(counted) : 0.0;

  const std::size_t kmax = k_max.value_or(largest);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = prepared.instances[i].label;
  std::vector<double> scores(n);
  for (std::size_t k = 0; k <= kmax; ++k) {
    double cumulative = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t step = std::min(k, curves[i].budget());
      scores[i] = curves[i].predictions[step];
      cumulative += curves[i].cumulative[step];
    }
    report.auc_by_k.push_back(auc(scores, labels));
    report.apr_by_k.push_back(apr(scores, labels));
    report.mean_cumulative_by_k.push_back(
        n ? cumulative / static_cast<double>(n) : 0.0);
  }
  if (kmax > 0) {
    double auc_sum = 0.0;
    double apr_sum = 0.0;
    for (std::size_t k = 1; k <= kmax; ++k) {
      auc_sum += std::abs(report.auc_by_k[0] - report.auc_by_k[k]);
      apr_sum += std::abs(report.apr_by_k[0] - report.apr_by_k[k]);
    }
    report.auc_area = auc_sum / static_cast<double>(kmax);
    report.apr_area = apr_sum / static_cast<double>(kmax);
  }
  return report;
}

}  // namespace

EvalReport dataset_degradation(const Predictor& model, const Dataset& prepared,
                               std::span<const std::vector<double>> phis,
                               double p, const BaselineStrategy& strategy,
                               std::optional<std::size_t> k_max,
                               const std::string& method) {
  if (phis.size() != prepared.instances.size()) {
    throw ShapeError("need one attribution vector per instance");
  }
  for (const auto& phi : phis) {
    if (phi.size() != prepared.schema.feature_count()) {
      throw ShapeError("attribution length does not match D");
    }
  }
  const auto start = std::chrono::steady_clock::now();
  EvalReport report;
  report.method = method;
  report.p = p;
  report.most = evaluate_direction(
      model, prepared, phis, {p, RemovalDirection::most_salient}, strategy,
      k_max, report.model_evals);
  report.least = evaluate_direction(
      model, prepared, phis, {p, RemovalDirection::least_salient}, strategy,
      k_max, report.model_evals);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

}  // namespace deltashap
