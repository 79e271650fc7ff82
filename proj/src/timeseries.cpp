#include "deltashap/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "deltashap/errors.hpp"

namespace deltashap {

FeatureSchema::FeatureSchema(std::vector<std::string> names,
                             std::vector<double> population_fill)
    : names_(std::move(names)), population_fill_(std::move(population_fill)) {
  if (names_.empty()) {
    throw ContractViolation("schema needs at least one feature");
  }
  if (population_fill_.size() != names_.size()) {
    throw ContractViolation("population_fill has " +
                            std::to_string(population_fill_.size()) +
                            " entries for " + std::to_string(names_.size()) +
                            " features");
  }
  std::set<std::string> seen;
  for (const auto& name : names_) {
    if (name.empty()) throw ContractViolation("empty feature name");
    if (!seen.insert(name).second) {
      throw ContractViolation("duplicate feature name '" + name + "'");
    }
  }
  for (double v : population_fill_) {
    if (!std::isfinite(v)) {
      throw ContractViolation("population_fill must be finite");
    }
  }
}

FeatureSchema FeatureSchema::with_default_names(std::size_t feature_count) {
  std::vector<std::string> names;
  names.reserve(feature_count);
  for (std::size_t j = 0; j < feature_count; ++j) {
    names.push_back("f" + std::to_string(j));
  }
  return FeatureSchema(std::move(names),
                       std::vector<double>(feature_count, 0.0));
}

std::size_t FeatureSchema::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return static_cast<std::size_t>(it - names_.begin());
}

std::uint64_t FeatureSchema::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& name : names_) {
    for (unsigned char c : name) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;  // separator, so {"ab"} and {"a","b"} differ
    h *= 1099511628211ULL;
  }
  return h;
}

Window::Window(std::size_t window_length, std::size_t feature_count,
               std::vector<double> values, std::vector<std::uint8_t> mask,
               std::size_t end_time)
    : window_length_(window_length),
      feature_count_(feature_count),
      end_time_(end_time),
      values_(std::move(values)),
      mask_(std::move(mask)) {
  if (window_length_ == 0 || feature_count_ == 0) {
    throw ShapeError("window needs W >= 1 and D >= 1");
  }
  const std::size_t cells = window_length_ * feature_count_;
  if (values_.size() != cells || mask_.size() != cells) {
    throw ShapeError("window of shape " + std::to_string(window_length_) +
                     "x" + std::to_string(feature_count_) + " given " +
                     std::to_string(values_.size()) + " values and " +
                     std::to_string(mask_.size()) + " mask cells");
  }
  for (auto& m : mask_) m = m ? 1 : 0;
}

Window Window::from_rows(std::size_t window_length, std::size_t feature_count,
                         std::span<const double> row_values,
                         std::span<const std::uint8_t> row_mask,
                         std::size_t end_time) {
  if (feature_count == 0 || row_values.size() % feature_count != 0 ||
      row_values.size() != row_mask.size()) {
    throw ShapeError("row data is not a whole number of rows");
  }
  const std::size_t rows = row_values.size() / feature_count;
  std::vector<double> values(window_length * feature_count,
                             std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint8_t> mask(window_length * feature_count, 0);
  const std::size_t kept = std::min(rows, window_length);
  const std::size_t src_row = rows - kept;
  const std::size_t dst_row = window_length - kept;
  std::copy_n(row_values.begin() + src_row * feature_count,
              kept * feature_count, values.begin() + dst_row * feature_count);
  std::copy_n(row_mask.begin() + src_row * feature_count, kept * feature_count,
              mask.begin() + dst_row * feature_count);
  return Window(window_length, feature_count, std::move(values),
                std::move(mask), end_time);
}

Window Window::with_final_row(std::span<const double> row) const {
  if (row.size() != feature_count_) {
    throw ShapeError("final row of length " + std::to_string(row.size()) +
                     " for D=" + std::to_string(feature_count_));
  }
  Window out = *this;
  std::copy(row.begin(), row.end(),
            out.values_.begin() + (window_length_ - 1) * feature_count_);
  return out;
}

Window Window::with_cell(std::size_t t, std::size_t j, double value,
                         bool observed) const {
  Window out = *this;
  out.values_[t * feature_count_ + j] = value;
  out.mask_[t * feature_count_ + j] = observed ? 1 : 0;
  return out;
}

bool Window::operator==(const Window& other) const {
  if (window_length_ != other.window_length_ ||
      feature_count_ != other.feature_count_ || end_time_ != other.end_time_ ||
      mask_ != other.mask_) {
    return false;
  }
  // NaN placeholders in unprepared windows compare equal to each other.
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double a = values_[i];
    const double b = other.values_[i];
    if (!(a == b || (std::isnan(a) && std::isnan(b)))) return false;
  }
  return true;
}

bool ObservedSet::contains(std::size_t j) const {
  return std::binary_search(indices_.begin(), indices_.end(), j);
}

ObservedSet derive_observed_set(const Window& window) {
  std::vector<std::size_t> indices;
  const std::size_t last = window.window_length() - 1;
  for (std::size_t j = 0; j < window.feature_count(); ++j) {
    if (window.observed(last, j)) indices.push_back(j);
  }
  return ObservedSet(std::move(indices));
}

ValidationReport validate_dataset(const Dataset& ds) {
  ValidationReport report;
  const std::size_t d = ds.schema.feature_count();
  if (d == 0) {
    report.violations.push_back({"", -1, -1, "schema has no features"});
  }
  std::set<std::string> ids;
  for (const auto& inst : ds.instances) {
    const Window& w = inst.window;
    if (!ids.insert(inst.instance_id).second) {
      report.violations.push_back(
          {inst.instance_id, -1, -1, "duplicate instance_id"});
    }
    if (inst.label != 0 && inst.label != 1) {
      report.violations.push_back({inst.instance_id, -1, -1,
                                   "label " + std::to_string(inst.label) +
                                       " is not in {0,1}"});
    }
    if (w.feature_count() != d) {
      report.violations.push_back(
          {inst.instance_id, -1, -1,
           "feature-count mismatch: window has " +
               std::to_string(w.feature_count()) + ", schema has " +
               std::to_string(d)});
    }
    if (w.window_length() == 0) {
      report.violations.push_back(
          {inst.instance_id, -1, -1, "empty window"});
    }
    if (w.window_length() > ds.max_sequence_length) {
      report.violations.push_back(
          {inst.instance_id, -1, -1,
           "window length " + std::to_string(w.window_length()) +
               " exceeds max_sequence_length " +
               std::to_string(ds.max_sequence_length)});
    }
    for (std::size_t t = 0; t < w.window_length(); ++t) {
      for (std::size_t j = 0; j < w.feature_count(); ++j) {
        if (w.observed(t, j) && !std::isfinite(w.value(t, j))) {
          report.violations.push_back({inst.instance_id, static_cast<long>(t),
                                       static_cast<long>(j),
                                       "observed cell is not finite"});
        }
      }
    }
  }
  return report;
}

}  // namespace deltashap
