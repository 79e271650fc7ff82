#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deltashap/synthetic.hpp"

namespace deltashap {

// Everything a CLI run needs. Filled from flags, optionally preloaded from a
// flat `key = value` config file whose keys are the long flag names.
struct RunConfig {
  std::string command;
  std::string data;         // input dataset
  std::string train;        // training dataset for --model tiny
  std::string input;        // report: evaluation file to render
  std::string out = "-";    // "-" = stdout
  std::string summary;      // report: optional summary-table file
  std::string format;       // csv | jsonl; empty = from extension
  std::string model = "tiny";  // tiny | interaction | linear | <model file>
  std::string save_model;
  std::string baseline = "forward_fill";
  std::vector<std::string> methods;
  std::size_t n = 25;
  std::uint64_t seed = 0;
  double p = 0.25;
  std::size_t k_max = 0;  // 0 = per-direction largest adaptive budget
  std::size_t cap = 20;
  std::size_t window = 0;  // ingest window length; 0 = longest stay
  std::size_t afo_draws = 10;
  std::size_t threads = 0;
  double learning_rate = 0.5;
  std::size_t epochs = 200;
  SyntheticSpec synthetic;

  // Throws ConfigError when N, p or the method list is invalid.
  void validate() const;
  // Deterministic echo of the settings that shape an output artifact.
  nlohmann::ordered_json to_json() const;
};

// Entry point behind the deltashap executable. Subcommands: gen-data,
// attribute, oracle, evaluate, report. Returns 0 on success; diagnostics go
// to `err`, and "-" outputs go to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace deltashap
