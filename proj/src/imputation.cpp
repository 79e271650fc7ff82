#include "deltashap/imputation.hpp"

#include <cmath>
#include <limits>

#include "deltashap/errors.hpp"

namespace deltashap {

namespace {

void check_fill(const Window& w, const BaselineStrategy& strategy) {
  if (strategy.kind != BaselineKind::zero &&
      strategy.population_fill.size() != w.feature_count()) {
    throw ShapeError("population_fill has " +
                     std::to_string(strategy.population_fill.size()) +
                     " entries for D=" + std::to_string(w.feature_count()));
  }
}

}  // namespace

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::forward_fill:
      return "forward_fill";
    case BaselineKind::zero:
      return "zero";
    case BaselineKind::population:
      return "population";
  }
  return "forward_fill";
}

BaselineKind parse_baseline_kind(const std::string& name) {
  if (name == "forward_fill") return BaselineKind::forward_fill;
  if (name == "zero") return BaselineKind::zero;
  if (name == "population") return BaselineKind::population;
  throw ConfigError("unknown baseline '" + name +
                    "' (expected forward_fill, zero or population)");
}

Window prepare_window(const Window& raw, const BaselineStrategy& strategy) {
  check_fill(raw, strategy);
  const std::size_t w_len = raw.window_length();
  const std::size_t d = raw.feature_count();
  std::vector<double> values(raw.values().begin(), raw.values().end());
  std::vector<std::uint8_t> mask(raw.mask().begin(), raw.mask().end());

  for (std::size_t j = 0; j < d; ++j) {
    double carried = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t t = 0; t < w_len; ++t) {
      const std::size_t c = t * d + j;
      if (mask[c]) {
        carried = values[c];
        continue;
      }
      switch (strategy.kind) {
        case BaselineKind::forward_fill:
          values[c] =
              std::isnan(carried) ? strategy.population_fill[j] : carried;
          break;
        case BaselineKind::zero:
          values[c] = 0.0;
          break;
        case BaselineKind::population:
          values[c] = strategy.population_fill[j];
          break;
      }
    }
  }
  return Window(w_len, d, std::move(values), std::move(mask), raw.end_time());
}

Dataset prepare_dataset(const Dataset& raw, const BaselineStrategy& strategy) {
  Dataset out;
  out.schema = raw.schema;
  out.max_sequence_length = raw.max_sequence_length;
  out.instances.reserve(raw.instances.size());
  for (const auto& inst : raw.instances) {
    out.instances.push_back(
        {prepare_window(inst.window, strategy), inst.label, inst.instance_id});
  }
  return out;
}

BaselineRow baseline_row(const Window& window,
                         const BaselineStrategy& strategy) {
  check_fill(window, strategy);
  const std::size_t d = window.feature_count();
  const std::size_t last = window.window_length() - 1;
  BaselineRow row;
  row.values.assign(d, 0.0);
  row.history_missing = last == 0;

  switch (strategy.kind) {
    case BaselineKind::zero:
      break;
    case BaselineKind::population:
      row.values = strategy.population_fill;
      break;
    case BaselineKind::forward_fill:
      for (std::size_t j = 0; j < d; ++j) {
        row.values[j] = strategy.population_fill[j];
        for (std::size_t t = last; t-- > 0;) {
          if (window.observed(t, j)) {
            row.values[j] = window.value(t, j);
            break;
          }
        }
      }
      break;
  }
  return row;
}

Window substitute(const Window& window, std::span<const std::size_t> subset,
                  const BaselineRow& baseline) {
  const std::size_t d = window.feature_count();
  if (baseline.values.size() != d) {
    throw ShapeError("baseline row length does not match D");
  }
  const std::size_t last = window.window_length() - 1;
  std::vector<std::uint8_t> keep(d, 0);
  for (std::size_t j : subset) {
    if (j >= d || !window.observed(last, j)) {
      throw ContractViolation("feature " + std::to_string(j) +
                              " is not observed at the final step");
    }
    keep[j] = 1;
  }
  return substitute_mask(window, keep, baseline);
}

Window substitute_mask(const Window& window,
                       std::span<const std::uint8_t> keep,
                       const BaselineRow& baseline) {
  const std::size_t d = window.feature_count();
  const auto current = window.final_row();
  std::vector<double> row(d);
  for (std::size_t j = 0; j < d; ++j) {
    row[j] = keep[j] ? current[j] : baseline.values[j];
  }
  return window.with_final_row(row);
}

}  // namespace deltashap
