#include "deltashap/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "deltashap/errors.hpp"
#include "deltashap/synthetic.hpp"

namespace deltashap {

namespace {

constexpr const char* kDatasetFormat = "deltashap-dataset";
constexpr const char* kEvalFormat = "deltashap-eval";
constexpr int kFileVersion = 1;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv(const std::string& line, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", lineno);
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && ws(static_cast<unsigned char>(s[start]))) ++start;
  return s.substr(start);
}

bool is_missing(const std::string& field) {
  return field.empty() || field == "null" || field == "NA";
}

double parse_number(const std::string& field, std::size_t line,
                    std::size_t column) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v)) {
    throw ParseError("cannot parse '" + field + "' as a finite number", line,
                     column);
  }
  return v;
}

long parse_step(const std::string& field, std::size_t line,
                std::size_t column) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0' || v < 0) {
    throw ParseError("time step '" + field + "' is not an integer >= 0", line,
                     column);
  }
  return v;
}

int parse_label(const std::string& field, std::size_t line,
                std::size_t column) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw ParseError("label '" + field + "' is not 0 or 1", line, column);
}

struct Cell {
  double value = kNaN;
  bool observed = false;
};

// Rows keyed by time step; each row holds one cell per feature slot.
struct PendingInstance {
  int label = 0;
  std::size_t first_line = 0;
  long last_step = -1;
  std::map<long, std::vector<Cell>> rows;
};

Dataset assemble(std::vector<std::string> ids,
                 std::map<std::string, PendingInstance>& pending,
                 std::vector<std::string> features,
                 std::optional<std::vector<double>> population_fill,
                 std::size_t window_length) {
  const std::size_t d = features.size();
  std::size_t longest = 1;
  for (const auto& id : ids) {
    const auto& rows = pending.at(id).rows;
    if (!rows.empty()) {
      longest = std::max(longest,
                         static_cast<std::size_t>(rows.rbegin()->first) + 1);
    }
  }
  const std::size_t w_len = window_length ? window_length : longest;

  Dataset ds;
  ds.max_sequence_length = std::max(longest, w_len);
  for (const auto& id : ids) {
    auto& inst = pending.at(id);
    const long end = inst.rows.empty() ? 0 : inst.rows.rbegin()->first;
    std::vector<double> values(w_len * d, kNaN);
    std::vector<std::uint8_t> mask(w_len * d, 0);
    for (const auto& [step, row] : inst.rows) {
      const long offset = step - end + static_cast<long>(w_len) - 1;
      if (offset < 0) continue;
      for (std::size_t j = 0; j < row.size() && j < d; ++j) {
        if (!row[j].observed) continue;
        values[static_cast<std::size_t>(offset) * d + j] = row[j].value;
        mask[static_cast<std::size_t>(offset) * d + j] = 1;
      }
    }
    ds.instances.push_back({Window(w_len, d, std::move(values),
                                   std::move(mask),
                                   static_cast<std::size_t>(end)),
                            inst.label, id});
  }
  ds.schema = FeatureSchema(features, std::vector<double>(d, 0.0));
  ds.schema = FeatureSchema(std::move(features),
                            population_fill ? *population_fill
                                            : observed_medians(ds));
  return ds;
}

void require_valid(const Dataset& ds) {
  const auto report = validate_dataset(ds);
  if (report.ok()) return;
  std::string msg = "dataset failed validation:";
  std::size_t shown = 0;
  for (const auto& v : report.violations) {
    if (shown++ == 5) {
      msg += " ...";
      break;
    }
    msg += " [" + v.instance_id;
    if (v.t >= 0) {
      msg += " t=" + std::to_string(v.t) + " j=" + std::to_string(v.j);
    }
    msg += ": " + v.message + "]";
  }
  throw ContractViolation(msg);
}

Dataset ingest_csv(std::istream& in, const IngestOptions& options) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("empty file", 1);
  auto header = split_csv(trim(line), lineno);
  for (auto& h : header) h = trim(h);
  if (header.size() < 4 || header[0] != "instance_id" ||
      header[1] != "label" || header[2] != "t") {
    throw ParseError(
        "header must start with instance_id,label,t (long format: "
        "instance_id,label,t,feature,value)",
        1);
  }
  const bool long_format =
      header.size() == 5 && header[3] == "feature" && header[4] == "value";

  std::vector<std::string> features;
  std::map<std::string, std::size_t> feature_index;
  if (!long_format) {
    features.assign(header.begin() + 3, header.end());
    for (std::size_t j = 0; j < features.size(); ++j) {
      if (features[j].empty() ||
          !feature_index.emplace(features[j], j).second) {
        throw ParseError("feature column '" + features[j] +
                             "' is empty or repeated",
                         1, j + 4);
      }
    }
  }

  std::vector<std::string> ids;
  std::map<std::string, PendingInstance> pending;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line, lineno);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(fields.size()),
                       lineno);
    }
    const std::string id = trim(fields[0]);
    if (id.empty()) throw ParseError("empty instance_id", lineno, 1);
    const int label = parse_label(trim(fields[1]), lineno, 2);
    const long step = parse_step(trim(fields[2]), lineno, 3);

    auto [it, inserted] = pending.try_emplace(id);
    PendingInstance& inst = it->second;
    if (inserted) {
      ids.push_back(id);
      inst.label = label;
      inst.first_line = lineno;
    } else if (inst.label != label) {
      throw ParseError("label differs from line " +
                           std::to_string(inst.first_line) + " for instance '" +
                           id + "'",
                       lineno, 2);
    }
    const bool monotone =
        long_format ? step >= inst.last_step : step > inst.last_step;
    if (!monotone) {
      throw ParseError("non-monotone time step " + std::to_string(step) +
                           " after " + std::to_string(inst.last_step) +
                           " for instance '" + id + "'",
                       lineno, 3);
    }
    inst.last_step = step;

    if (long_format) {
      const std::string name = trim(fields[3]);
      if (name.empty()) throw ParseError("empty feature name", lineno, 4);
      auto [fit, added] = feature_index.try_emplace(name, features.size());
      if (added) features.push_back(name);
      auto& row = inst.rows[step];
      if (row.size() <= fit->second) row.resize(fit->second + 1);
      Cell& cell = row[fit->second];
      const std::string raw = trim(fields[4]);
      if (cell.observed && !is_missing(raw)) {
        throw ParseError("duplicate measurement of '" + name + "' at t=" +
                             std::to_string(step),
                         lineno, 5);
      }
      if (!is_missing(raw)) {
        cell.value = parse_number(raw, lineno, 5);
        cell.observed = true;
      }
    } else {
      auto& row = inst.rows[step];
      row.resize(features.size());
      for (std::size_t j = 0; j < features.size(); ++j) {
        const std::string raw = trim(fields[j + 3]);
        if (is_missing(raw)) continue;
        row[j].value = parse_number(raw, lineno, j + 4);
        row[j].observed = true;
      }
    }
  }
  if (ids.empty()) throw ParseError("no data rows", lineno);
  if (features.empty()) throw ParseError("no features", lineno);
  Dataset ds = assemble(std::move(ids), pending, std::move(features),
                        std::nullopt, options.window_length);
  require_valid(ds);
  return ds;
}

Dataset ingest_jsonl(std::istream& in, const IngestOptions& options) {
  std::string line;
  std::size_t lineno = 0;
  nlohmann::json header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON header: ") + e.what(), lineno);
  }
  std::vector<std::string> features;
  std::optional<std::vector<double>> fill;
  std::size_t w_len = options.window_length;
  std::size_t declared_max = 0;
  try {
    if (header.value("format", "") != kDatasetFormat) {
      throw ParseError("first line must be a deltashap-dataset header", lineno);
    }
    if (header.at("version").get<int>() != kFileVersion) {
      throw ParseError("unsupported dataset version", lineno);
    }
    features = header.at("features").get<std::vector<std::string>>();
    if (header.contains("population_fill")) {
      fill = header.at("population_fill").get<std::vector<double>>();
    }
    if (w_len == 0 && header.contains("window_length")) {
      w_len = header.at("window_length").get<std::size_t>();
    }
    declared_max = header.value("max_sequence_length", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed header: ") + e.what(), lineno);
  }
  const std::size_t d = features.size();
  if (d == 0) throw ParseError("header lists no features", lineno);

  std::vector<std::string> ids;
  std::map<std::string, PendingInstance> pending;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    try {
      const std::string id = rec.at("instance_id").get<std::string>();
      const int label = rec.at("label").get<int>();
      if (label != 0 && label != 1) {
        throw ParseError("label is not 0 or 1", lineno);
      }
      const auto& rows = rec.at("values");
      if (!rows.is_array() || rows.empty()) {
        throw ParseError("values must be a non-empty array of rows", lineno);
      }
      const long end =
          rec.value("end_time", static_cast<long>(rows.size()) - 1);
      if (end + 1 < static_cast<long>(rows.size())) {
        throw ParseError("end_time is earlier than the number of rows allows",
                         lineno);
      }
      auto [it, inserted] = pending.try_emplace(id);
      if (!inserted) throw ParseError("duplicate instance '" + id + "'", lineno);
      ids.push_back(id);
      PendingInstance& inst = it->second;
      inst.label = label;
      inst.first_line = lineno;
      const long first = end - static_cast<long>(rows.size()) + 1;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (!row.is_array() || row.size() != d) {
          throw ParseError("row " + std::to_string(r) + " does not have " +
                               std::to_string(d) + " entries",
                           lineno);
        }
        auto& cells = inst.rows[first + static_cast<long>(r)];
        cells.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
          if (row[j].is_null()) continue;
          if (!row[j].is_number()) {
            throw ParseError("row " + std::to_string(r) + " entry " +
                                 std::to_string(j) + " is not a number",
                             lineno);
          }
          cells[j].value = row[j].get<double>();
          cells[j].observed = true;
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed instance: ") + e.what(), lineno);
    }
  }
  if (ids.empty()) throw ParseError("no instances", lineno);
  Dataset ds = assemble(std::move(ids), pending, std::move(features), fill,
                        w_len);
  ds.max_sequence_length = std::max(ds.max_sequence_length, declared_max);
  require_valid(ds);
  return ds;
}

}  // namespace

std::string to_string(DataFormat format) {
  return format == DataFormat::csv ? "csv" : "jsonl";
}

DataFormat parse_data_format(const std::string& name) {
  if (name == "csv") return DataFormat::csv;
  if (name == "jsonl") return DataFormat::jsonl;
  throw ConfigError("unknown format '" + name + "' (expected csv or jsonl)");
}

DataFormat format_from_extension(const std::string& path) {
  const auto ends_with = [&](const std::string& suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) ==
               0;
  };
  return ends_with(".jsonl") || ends_with(".json") ? DataFormat::jsonl
                                                   : DataFormat::csv;
}

Dataset ingest_stream(std::istream& in, DataFormat format,
                      const IngestOptions& options) {
  return format == DataFormat::csv ? ingest_csv(in, options)
                                   : ingest_jsonl(in, options);
}

Dataset ingest(const std::string& path, DataFormat format,
               const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  return ingest_stream(in, format, options);
}

std::string format_double(double x) {
  if (!std::isfinite(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_dataset_jsonl(
    std::ostream& out, const Dataset& ds,
    const std::vector<std::optional<std::size_t>>* drivers) {
  nlohmann::ordered_json header;
  header["format"] = kDatasetFormat;
  header["version"] = kFileVersion;
  header["features"] = ds.schema.names();
  header["population_fill"] = ds.schema.population_fill();
  header["window_length"] = ds.instances.empty()
                                ? std::size_t{0}
                                : ds.instances.front().window.window_length();
  header["max_sequence_length"] = ds.max_sequence_length;
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const auto& inst = ds.instances[i];
    const Window& w = inst.window;
    nlohmann::ordered_json rec;
    rec["instance_id"] = inst.instance_id;
    rec["label"] = inst.label;
    rec["end_time"] = w.end_time();
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < w.window_length(); ++t) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (std::size_t j = 0; j < w.feature_count(); ++j) {
        if (w.observed(t, j)) {
          row.push_back(w.value(t, j));
        } else {
          row.push_back(nullptr);
        }
      }
      rows.push_back(std::move(row));
    }
    rec["values"] = std::move(rows);
    if (drivers && i < drivers->size()) {
      const auto& drv = (*drivers)[i];
      if (drv) {
        rec["driver"] = ds.schema.names()[*drv];
      } else {
        rec["driver"] = nullptr;
      }
    }
    out << rec.dump() << '\n';
  }
}

void write_dataset_csv(std::ostream& out, const Dataset& ds) {
  out << "instance_id,label,t,feature,value\n";
  const auto& names = ds.schema.names();
  for (const auto& inst : ds.instances) {
    const Window& w = inst.window;
    const long end = static_cast<long>(w.end_time());
    const long w_len = static_cast<long>(w.window_length());
    for (long t = 0; t < w_len; ++t) {
      const long step = end - (w_len - 1 - t);
      if (step < 0) continue;
      const bool last = t == w_len - 1;
      for (std::size_t j = 0; j < w.feature_count(); ++j) {
        const auto row = static_cast<std::size_t>(t);
        // Missing final-step cells are written as empty values so the
        // instance keeps its end time on re-ingest.
        if (!w.observed(row, j) && !last) continue;
        out << inst.instance_id << ',' << inst.label << ',' << step << ','
            << names[j] << ',';
        if (w.observed(row, j)) out << format_double(w.value(row, j));
        out << '\n';
      }
    }
  }
}

nlohmann::ordered_json attribution_record(const AttributionResult& result,
                                          const std::string& instance_id,
                                          const FeatureSchema& schema) {
  nlohmann::ordered_json rec;
  rec["instance_id"] = instance_id;
  rec["method"] = result.method;
  rec["delta"] = result.delta;
  nlohmann::ordered_json phi = nlohmann::ordered_json::object();
  nlohmann::ordered_json raw = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < schema.feature_count(); ++j) {
    phi[schema.names()[j]] = j < result.phi.size() ? result.phi[j] : 0.0;
    raw[schema.names()[j]] = j < result.raw.size() ? result.raw[j] : 0.0;
  }
  rec["phi"] = std::move(phi);
  rec["raw"] = std::move(raw);
  nlohmann::ordered_json observed = nlohmann::ordered_json::array();
  for (std::size_t j : result.observed.indices()) {
    observed.push_back(schema.names()[j]);
  }
  rec["observed"] = std::move(observed);
  rec["status"] = to_string(result.status);
  rec["eval_count"] = result.model_eval_count;
  rec["seed"] = result.seed;
  rec["n"] = result.permutations;
  rec["baseline"] = to_string(result.baseline);
  return rec;
}

nlohmann::ordered_json eval_report_json(const std::vector<EvalReport>& reports,
                                        const nlohmann::ordered_json& config,
                                        const Dataset& prepared) {
  nlohmann::ordered_json doc;
  doc["format"] = kEvalFormat;
  doc["version"] = kFileVersion;
  doc["config"] = config;
  doc["instances"] = prepared.instances.size();
  doc["feature_count"] = prepared.schema.feature_count();

  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  nlohmann::ordered_json per_instance = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json s;
    s["method"] = r.method;
    s["p"] = r.p;
    s["aupd"] = r.aupd();
    s["auaucd"] = r.auaucd();
    s["auaprd"] = r.auaprd();
    s["aupp"] = r.aupp();
    s["auaucp"] = r.auaucp();
    s["auaprp"] = r.auaprp();
    s["model_evals"] = r.model_evals;
    summary.push_back(std::move(s));

    for (const DirectionReport* dir : {&r.most, &r.least}) {
      for (std::size_t k = 0; k < dir->auc_by_k.size(); ++k) {
        nlohmann::ordered_json rec;
        rec["method"] = r.method;
        rec["direction"] = to_string(dir->direction);
        rec["k"] = k;
        rec["auc"] = dir->auc_by_k[k];
        rec["apr"] = dir->apr_by_k[k];
        rec["mean_cumulative"] = dir->mean_cumulative_by_k[k];
        records.push_back(std::move(rec));
      }
    }
    for (std::size_t i = 0; i < prepared.instances.size(); ++i) {
      nlohmann::ordered_json rec;
      rec["method"] = r.method;
      rec["instance_id"] = prepared.instances[i].instance_id;
      rec["budget_most"] = r.most.budgets[i];
      rec["cpd"] = r.most.cumulative_at_budget[i];
      if (r.most.area[i]) {
        rec["aupd"] = *r.most.area[i];
      } else {
        rec["aupd"] = nullptr;
      }
      rec["budget_least"] = r.least.budgets[i];
      rec["cpp"] = r.least.cumulative_at_budget[i];
      if (r.least.area[i]) {
        rec["aupp"] = *r.least.area[i];
      } else {
        rec["aupp"] = nullptr;
      }
      per_instance.push_back(std::move(rec));
    }
  }
  doc["summary"] = std::move(summary);
  doc["records"] = std::move(records);
  doc["per_instance"] = std::move(per_instance);
  return doc;
}

std::string plot_data_csv(const nlohmann::ordered_json& report) {
  if (report.value("format", "") != kEvalFormat) {
    throw ConfigError("not a deltashap evaluation report");
  }
  std::ostringstream out;
  out << "method,direction,metric,k,value\n";
  for (const char* metric : {"auc", "apr", "mean_cumulative"}) {
    for (const auto& rec : report.at("records")) {
      out << rec.at("method").get<std::string>() << ','
          << rec.at("direction").get<std::string>() << ',' << metric << ','
          << rec.at("k").get<std::size_t>() << ','
          << format_double(rec.at(metric).get<double>()) << '\n';
    }
  }
  return out.str();
}

std::string summary_table(const nlohmann::ordered_json& report) {
  if (report.value("format", "") != kEvalFormat) {
    throw ConfigError("not a deltashap evaluation report");
  }
  static const char* kColumns[] = {"aupd", "auaucd", "auaprd",
                                   "aupp", "auaucp", "auaprp"};
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-10s", "method");
  out << buf;
  for (const char* c : kColumns) {
    std::string upper(c);
    std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
    std::snprintf(buf, sizeof(buf), " %10s", upper.c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), " %12s", "model_evals");
  out << buf << '\n';
  for (const auto& s : report.at("summary")) {
    std::snprintf(buf, sizeof(buf), "%-10s",
                  s.at("method").get<std::string>().c_str());
    out << buf;
    for (const char* c : kColumns) {
      std::snprintf(buf, sizeof(buf), " %10.6f", s.at(c).get<double>());
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), " %12zu",
                  s.at("model_evals").get<std::size_t>());
    out << buf << '\n';
  }
  return out.str();
}

}  // namespace deltashap
