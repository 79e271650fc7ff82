#pragma once

// Shared test fixtures. Frozen values come from derive_fixtures.py.

#include <cmath>
#include <limits>
#include <vector>

#include "deltashap/imputation.hpp"
#include "deltashap/predictor.hpp"
#include "deltashap/random.hpp"
#include "deltashap/timeseries.hpp"

namespace deltashap::testing {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// D=4, W=3 interaction fixture.
inline InteractionSyntheticModel interaction_d4_model() {
  return InteractionSyntheticModel(
      3, -0.2, {0.8, -0.6, 0.5, 0.3},
      {{0, 1, 0.7}, {1, 2, -0.5}, {0, 3, 0.4}}, {0.3, 0.0, -0.2, 0.1});
}

inline Window interaction_d4_raw() {
  return Window(3, 4,
                {0.2, -0.4, 1.0, 0.5,   //
                 0.6, kNaN, 0.1, -0.3,  //
                 1.1, -0.9, 0.4, 0.8},
                {1, 1, 1, 1,  //
                 1, 0, 1, 1,  //
                 1, 1, 1, 1},
                2);
}

inline BaselineStrategy forward_fill(std::size_t d) {
  return BaselineStrategy(BaselineKind::forward_fill,
                          std::vector<double>(d, 0.0));
}

// Frozen by derive_fixtures.py.
inline constexpr double kD4FullPrediction = 0.820391178306438;
inline constexpr double kD4EmptyPrediction = 0.569546223939229;
inline constexpr double kD4Delta = 0.250844954367209;
inline const std::vector<double> kD4ExactPhi = {
    0.04289223401439859, 0.014196778563103862, 0.04976172154715983,
    0.14399422024254674};

// D=6, W=3 interaction fixture; every feature observed at the final step.
inline InteractionSyntheticModel interaction_d6_model() {
  return InteractionSyntheticModel(
      3, 0.1, {1.2, -0.9, 0.7, -0.5, 0.35, 0.2},
      {{0, 1, 0.45}, {2, 3, -0.4}, {1, 4, 0.3}, {0, 5, -0.25}},
      {0.4, -0.3, 0.0, 0.2, 0.0, -0.1});
}

inline Window interaction_d6_raw() {
  return Window(3, 6,
                {0.3, -0.2, kNaN, 0.8, 1.1, kNaN,   //
                 0.5, kNaN, -0.6, 0.9, kNaN, 0.2,   //
                 1.4, -0.7, 0.9, -0.4, 0.6, 1.3},
                {1, 1, 0, 1, 1, 0,  //
                 1, 0, 1, 1, 0, 1,  //
                 1, 1, 1, 1, 1, 1},
                2);
}

// Interaction model with D features and arbitrary pairs, coefficients drawn
// from rng. Used for randomized property checks.
inline InteractionSyntheticModel random_interaction_model(std::size_t w,
                                                          std::size_t d,
                                                          CounterRng& rng) {
  std::vector<double> linear(d);
  std::vector<double> history(d);
  for (auto& c : linear) c = 2.0 * rng.uniform() - 1.0;
  for (auto& h : history) h = 0.5 * (2.0 * rng.uniform() - 1.0);
  std::vector<PairTerm> pairs;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      if (rng.uniform() < 0.5) {
        pairs.push_back({a, b, 2.0 * rng.uniform() - 1.0});
      }
    }
  }
  return InteractionSyntheticModel(w, 0.3 * rng.normal(), std::move(linear),
                                   std::move(pairs), std::move(history));
}

// Raw window with N(0,1) cells, each observed with probability obs_prob.
// `final_all_observed` forces the last row to be fully observed.
inline Window random_raw_window(std::size_t w, std::size_t d, double obs_prob,
                                CounterRng& rng,
                                bool final_all_observed = false) {
  std::vector<double> values(w * d);
  std::vector<std::uint8_t> mask(w * d);
  for (std::size_t t = 0; t < w; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      const bool obs =
          (final_all_observed && t + 1 == w) || rng.uniform() < obs_prob;
      mask[t * d + j] = obs;
      values[t * d + j] = obs ? rng.normal() : kNaN;
    }
  }
  return Window(w, d, std::move(values), std::move(mask), w - 1);
}

}  // namespace deltashap::testing
