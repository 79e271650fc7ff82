#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deltashap/attribution.hpp"
#include "deltashap/metrics.hpp"
#include "deltashap/timeseries.hpp"

namespace deltashap {

enum class DataFormat { csv, jsonl };

std::string to_string(DataFormat format);
DataFormat parse_data_format(const std::string& name);
// jsonl for *.jsonl / *.json, csv otherwise.
DataFormat format_from_extension(const std::string& path);

struct IngestOptions {
  // Rows per window; 0 means the longest stay in the file (L).
  std::size_t window_length = 0;
};

// Reads a dataset file. Missing cells become NaN with mask=false, windows
// are built from the most recent W time steps of each instance (front-padded
// when the stay is shorter), population_fill is set to the per-feature
// median of observed values, and validate_dataset is run.
//
// CSV, long:  instance_id,label,t,feature,value   (one measurement per row)
// CSV, wide:  instance_id,label,t,<feature>...    (one time step per row)
//   An empty field, "null" or "NA" marks a missing value. Time steps are
//   integers >= 0; they must not decrease within an instance (long) or must
//   strictly increase (wide).
// JSONL: a header object {"format":"deltashap-dataset","version":1,
//   "features":[...],"population_fill":[...],"window_length":W,
//   "max_sequence_length":L} followed by one object per instance
//   {"instance_id","label","end_time","values":[[v|null,...],...]}.
//
// Throws ParseError naming the line (and column for CSV fields).
Dataset ingest(const std::string& path, DataFormat format,
               const IngestOptions& options = {});
Dataset ingest_stream(std::istream& in, DataFormat format,
                      const IngestOptions& options = {});

// Canonical JSONL writer; `drivers` (ground-truth feature per instance) is
// written as an extra "driver" field when given.
void write_dataset_jsonl(
    std::ostream& out, const Dataset& ds,
    const std::vector<std::optional<std::size_t>>* drivers = nullptr);
// Long-format CSV writer. Only observed cells are emitted.
void write_dataset_csv(std::ostream& out, const Dataset& ds);

// {instance_id, method, delta, phi{name: value}, raw{...}, observed[...],
//  status, eval_count, seed, n, baseline}
nlohmann::ordered_json attribution_record(const AttributionResult& result,
                                          const std::string& instance_id,
                                          const FeatureSchema& schema);

// One record per method x direction x k plus per-method summaries and
// per-instance areas. Wall-clock time is left out.
nlohmann::ordered_json eval_report_json(const std::vector<EvalReport>& reports,
                                        const nlohmann::ordered_json& config,
                                        const Dataset& prepared);

// From an eval report document: (method, direction, metric, k, value) rows.
std::string plot_data_csv(const nlohmann::ordered_json& report);
// Fixed-width table of the six headline metrics per method.
std::string summary_table(const nlohmann::ordered_json& report);

// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double x);

}  // namespace deltashap
