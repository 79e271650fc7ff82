#pragma once

#include <span>
#include <string>
#include <vector>

#include "deltashap/timeseries.hpp"

namespace deltashap {

enum class BaselineKind { forward_fill, zero, population };

// "forward_fill" | "zero" | "population"
std::string to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(const std::string& name);

// How unobserved cells are filled, and what an "unobserved" final step looks
// like. Carries the schema's population fallback so every operation that
// needs a baseline takes a single argument.
struct BaselineStrategy {
  BaselineKind kind = BaselineKind::forward_fill;
  std::vector<double> population_fill;

  BaselineStrategy() = default;
  BaselineStrategy(BaselineKind k, const FeatureSchema& schema)
      : kind(k), population_fill(schema.population_fill()) {}
  BaselineStrategy(BaselineKind k, std::vector<double> fill)
      : kind(k), population_fill(std::move(fill)) {}
};

// Counterfactual final-step row standing in for "nothing observed at T".
struct BaselineRow {
  std::vector<double> values;
  // True when no history was available (W = 1) and every entry came from
  // the population fallback.
  bool history_missing = false;
};

// Fills every masked-out cell, scanning forward in time. Observed cells and
// the mask are left untouched:
//   forward_fill -> latest earlier observed value of the feature, falling
//                   back to population_fill when there is none;
//   zero         -> 0;
//   population   -> population_fill[j].
Window prepare_window(const Window& raw, const BaselineStrategy& strategy);
Dataset prepare_dataset(const Dataset& raw, const BaselineStrategy& strategy);

// Under forward_fill, entry j is the latest value of feature j observed
// strictly before T (population_fill[j] if none). For a prepared window this
// equals row T-1 of the prepared values.
BaselineRow baseline_row(const Window& window,
                         const BaselineStrategy& strategy);

// Final-step features in `subset` keep their values; every other final-step
// feature takes the baseline value. `subset` must be ascending and contained
// in the observed set, otherwise ContractViolation.
Window substitute(const Window& window, std::span<const std::size_t> subset,
                  const BaselineRow& baseline);

// Same, with the subset given as a D-length membership mask. Unchecked fast
// path used by the estimators after they have validated the observed set.
Window substitute_mask(const Window& window,
                       std::span<const std::uint8_t> keep,
                       const BaselineRow& baseline);

}  // namespace deltashap
