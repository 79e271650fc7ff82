#pragma once

// Test-only oracles. None of these call into the attribution, imputation or
// metrics code they are used to check; they rebuild windows by hand and call
// the model directly.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "deltashap/predictor.hpp"
#include "deltashap/timeseries.hpp"

namespace deltashap::testing {

// Latest value observed strictly before the final step, else `fill`.
inline std::vector<double> oracle_forward_baseline(
    const Window& w, const std::vector<double>& fill) {
  const std::size_t d = w.feature_count();
  std::vector<double> out = fill;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t t = 0; t + 1 < w.window_length(); ++t) {
      if (w.observed(t, j)) out[j] = w.value(t, j);
    }
  }
  return out;
}

// Final row = observed value for features in `present`, baseline otherwise.
inline Window oracle_partial_window(const Window& w,
                                    const std::vector<bool>& present,
                                    const std::vector<double>& baseline) {
  std::vector<double> values(w.values().begin(), w.values().end());
  std::vector<std::uint8_t> mask(w.mask().begin(), w.mask().end());
  const std::size_t d = w.feature_count();
  const std::size_t last = (w.window_length() - 1) * d;
  for (std::size_t j = 0; j < d; ++j) {
    if (!present[j]) values[last + j] = baseline[j];
  }
  return Window(w.window_length(), d, std::move(values), std::move(mask),
                w.end_time());
}

// Shapley values by enumerating all m! arrival orders of the observed
// final-step features of a prepared window.
inline std::vector<double> oracle_permutation_enumeration(
    const Predictor& model, const Window& prepared,
    const std::vector<double>& baseline) {
  const std::size_t d = prepared.feature_count();
  const std::size_t last = prepared.window_length() - 1;
  std::vector<std::size_t> players;
  for (std::size_t j = 0; j < d; ++j) {
    if (prepared.observed(last, j)) players.push_back(j);
  }
  std::vector<double> phi(d, 0.0);
  std::size_t orders = 0;
  do {
    std::vector<bool> present(d, false);
    double before = model.predict(oracle_partial_window(prepared, present,
                                                        baseline));
    for (std::size_t j : players) {
      present[j] = true;
      const double after =
          model.predict(oracle_partial_window(prepared, present, baseline));
      phi[j] += after - before;
      before = after;
    }
    ++orders;
  } while (std::next_permutation(players.begin(), players.end()));
  for (auto& p : phi) p /= static_cast<double>(orders);
  return phi;
}

// AUC by enumerating all positive/negative pairs, ties worth 1/2.
inline double oracle_pairwise_auc(const std::vector<double>& scores,
                                  const std::vector<int>& labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (labels[a] != 1) continue;
    for (std::size_t b = 0; b < scores.size(); ++b) {
      if (labels[b] != 0) continue;
      pairs += 1.0;
      if (scores[a] > scores[b]) wins += 1.0;
      if (scores[a] == scores[b]) wins += 0.5;
    }
  }
  return wins / pairs;
}

}  // namespace deltashap::testing
