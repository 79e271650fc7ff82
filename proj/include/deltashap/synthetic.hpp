#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "deltashap/predictor.hpp"
#include "deltashap/timeseries.hpp"

namespace deltashap {

enum class LabelMode { bernoulli, threshold };

std::string to_string(LabelMode mode);
LabelMode parse_label_mode(const std::string& name);

// Synthetic monitoring data with a known scoring function.
//
// Each feature follows a stationary AR(1) latent process
//   x_t = a_j x_{t-1} + sqrt(1 - a_j^2) eps_t,  eps_t ~ N(0, 1).
// Labels come from the ground-truth scorer applied to the fully observed
// latents; the observation mask is drawn afterwards, cell by cell.
struct SyntheticSpec {
  std::size_t feature_count = 6;
  std::size_t window_length = 6;
  std::size_t instances = 500;
  // One entry per feature, or a single entry applied to all. In (0, 1].
  std::vector<double> observation_prob{0.7};
  // One entry per feature, or a single entry. In [0, 1).
  std::vector<double> ar_coefficient{0.8};
  // "interaction" or "linear" (see builtin_scorer).
  std::string scorer = "interaction";
  LabelMode labeling = LabelMode::bernoulli;
  // Probability of flipping each label after it is drawn.
  double label_noise = 0.0;
  std::uint64_t seed = 0;
};

struct GeneratedData {
  Dataset dataset;  // raw: NaN + mask=false at unobserved cells
  // Observed feature with the largest |logit-scale Shapley contribution| of
  // the ground-truth scorer at the final step; nullopt when nothing is
  // observed there.
  std::vector<std::optional<std::size_t>> drivers;
  double positive_rate = 0.0;
};

// Throws ConfigError for an invalid spec and DegenerateLabels (with a hint to
// change the seed, size or noise) when every label lands in one class.
GeneratedData generate(const SyntheticSpec& spec);

// Built-in ground-truth scorers with fixed coefficients:
//   linear[j]  = (+/-) (2.0 - 1.5 j / (D-1)), alternating sign
//   pairs      = (0,1) 0.3 and (2,3) -0.25 when D allows
//   history    = 0.5 on feature 0, -0.3 on feature 1
// "interaction" is an InteractionSyntheticModel; "linear" is a sigmoid
// LinearLogitModel with the same final-step and history weights spread
// evenly over the earlier rows.
std::unique_ptr<Predictor> builtin_scorer(const std::string& id,
                                          std::size_t window_length,
                                          std::size_t feature_count);

// Exact Shapley values of the interaction scorer's logit over the observed
// final-step features of a prepared window (closed form: linear terms plus
// half of each pairwise term's change).
std::vector<double> logit_contributions(const InteractionSyntheticModel& model,
                                        const Window& prepared,
                                        const std::vector<double>& baseline);

// Median of the observed values of each feature; 0 when never observed.
std::vector<double> observed_medians(const Dataset& ds);

}  // namespace deltashap
