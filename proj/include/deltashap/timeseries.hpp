#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace deltashap {

// Feature naming plus the per-feature fallback values used when a feature
// has never been observed (see imputation.hpp).
class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws ContractViolation unless names are non-empty, unique, and
  // population_fill has one entry per name.
  FeatureSchema(std::vector<std::string> names,
                std::vector<double> population_fill);

  // Schema with names f0..f{D-1} and zero fallbacks.
  static FeatureSchema with_default_names(std::size_t feature_count);

  std::size_t feature_count() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& population_fill() const {
    return population_fill_;
  }
  // Index of a feature name, or feature_count() when absent.
  std::size_t index_of(const std::string& name) const;
  // FNV-1a over the names; stored in saved models to catch schema drift.
  std::uint64_t hash() const;

 private:
  std::vector<std::string> names_;
  std::vector<double> population_fill_;
};

// A W x D block of values with its observation mask. Row W-1 is the current
// step T. Cells with mask=false hold NaN until the window is prepared.
class Window {
 public:
  Window() = default;
  // values and mask are row-major W*D. Throws ShapeError on size mismatch or
  // an empty shape. Cell contents are checked by validate_dataset.
  Window(std::size_t window_length, std::size_t feature_count,
         std::vector<double> values, std::vector<std::uint8_t> mask,
         std::size_t end_time = 0);

  // Builds a window of exactly window_length rows from the trailing
  // rows.size() steps, front-padding with fully missing rows when the stay
  // is shorter than the window. Longer inputs keep only the most recent rows.
  static Window from_rows(std::size_t window_length, std::size_t feature_count,
                          std::span<const double> row_values,
                          std::span<const std::uint8_t> row_mask,
                          std::size_t end_time);

  std::size_t window_length() const { return window_length_; }
  std::size_t feature_count() const { return feature_count_; }
  std::size_t end_time() const { return end_time_; }

  double value(std::size_t t, std::size_t j) const {
    return values_[t * feature_count_ + j];
  }
  bool observed(std::size_t t, std::size_t j) const {
    return mask_[t * feature_count_ + j] != 0;
  }
  std::span<const double> row(std::size_t t) const {
    return {values_.data() + t * feature_count_, feature_count_};
  }
  std::span<const double> final_row() const {
    return row(window_length_ - 1);
  }
  std::span<const double> values() const { return values_; }
  std::span<const std::uint8_t> mask() const { return mask_; }

  // Copy with the final-step values replaced. The mask is kept.
  Window with_final_row(std::span<const double> row) const;
  // Copy with the given cell overwritten and its mask bit set.
  Window with_cell(std::size_t t, std::size_t j, double value,
                   bool observed) const;

  bool operator==(const Window& other) const;

 private:
  std::size_t window_length_ = 0;
  std::size_t feature_count_ = 0;
  std::size_t end_time_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

// Feature indices observed at the final step, ascending.
class ObservedSet {
 public:
  ObservedSet() = default;
  explicit ObservedSet(std::vector<std::size_t> ascending_indices)
      : indices_(std::move(ascending_indices)) {}

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  bool contains(std::size_t j) const;
  std::size_t operator[](std::size_t i) const { return indices_[i]; }

  bool operator==(const ObservedSet&) const = default;

 private:
  std::vector<std::size_t> indices_;
};

ObservedSet derive_observed_set(const Window& window);

struct LabeledInstance {
  Window window;
  int label = 0;
  std::string instance_id;
};

struct Dataset {
  FeatureSchema schema;
  std::vector<LabeledInstance> instances;
  std::size_t max_sequence_length = 1;

  std::size_t size() const { return instances.size(); }
};

struct Violation {
  std::string instance_id;
  // Cell coordinates when the violation concerns a single cell, -1 otherwise.
  long t = -1;
  long j = -1;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Collects every invariant violation; never throws.
ValidationReport validate_dataset(const Dataset& ds);

}  // namespace deltashap
