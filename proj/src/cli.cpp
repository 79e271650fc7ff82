#include "deltashap/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "deltashap/attribution.hpp"
#include "deltashap/errors.hpp"
#include "deltashap/imputation.hpp"
#include "deltashap/io.hpp"
#include "deltashap/metrics.hpp"
#include "deltashap/parallel.hpp"
#include "deltashap/predictor.hpp"
#include "deltashap/random.hpp"

namespace deltashap {

namespace {

const std::set<std::string> kMethods = {"deltashap", "fo", "afo", "random"};

void write_output(const std::string& path, const std::string& content,
                  std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot write '" + path + "'");
  file << content;
  if (!file) throw ConfigError("failed writing '" + path + "'");
}

DataFormat data_format(const RunConfig& cfg, const std::string& path) {
  return cfg.format.empty() ? format_from_extension(path)
                            : parse_data_format(cfg.format);
}

Dataset load_dataset(const RunConfig& cfg, const std::string& path) {
  if (path.empty()) throw ConfigError("--data is required");
  return ingest(path, data_format(cfg, path), {cfg.window});
}

std::unique_ptr<Predictor> resolve_model(const RunConfig& cfg,
                                         const Dataset& prepared,
                                         const BaselineStrategy& strategy,
                                         std::ostream& err) {
  const std::size_t w_len = prepared.instances.front().window.window_length();
  const std::size_t d = prepared.schema.feature_count();
  std::unique_ptr<Predictor> model;
  if (cfg.model == "interaction" || cfg.model == "linear") {
    model = builtin_scorer(cfg.model, w_len, d);
  } else if (cfg.model == "tiny") {
    Dataset train = prepared;
    if (!cfg.train.empty()) {
      Dataset raw = load_dataset(cfg, cfg.train);
      if (raw.schema.names() != prepared.schema.names()) {
        throw ConfigError("training data features differ from --data");
      }
      train = prepare_dataset(raw, strategy);
    }
    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.epochs = cfg.epochs;
    tc.seed = CounterRng::substream(cfg.seed, "model").key();
    auto trained = std::make_unique<TinyLogisticScorer>(
        train_tiny_logistic(train, tc));
    err << "trained tiny_logistic: accuracy "
        << trained->accuracy(train) << ", final loss "
        << trained->loss_history().back() << "\n";
    model = std::move(trained);
  } else {
    model = load_model(cfg.model, prepared.schema);
  }
  if (model->window_length() != w_len || model->feature_count() != d) {
    throw ShapeError("model expects " + std::to_string(model->window_length()) +
                     "x" + std::to_string(model->feature_count()) +
                     " windows, data has " + std::to_string(w_len) + "x" +
                     std::to_string(d));
  }
  if (!cfg.save_model.empty()) {
    save_model(*model, prepared.schema, cfg.save_model);
  }
  return model;
}

// Attribution for instance i under one method. Every method draws from its
// own named sub-stream of the root seed, indexed by instance.
AttributionResult attribute_one(const std::string& method,
                                const Predictor& model, const Window& window,
                                std::size_t i, const RunConfig& cfg,
                                const BaselineStrategy& strategy,
                                const std::vector<std::vector<double>>& pool) {
  if (method == "deltashap") {
    const std::uint64_t seed =
        CounterRng::substream(cfg.seed, "permutations", i).key();
    return deltashap(model, window, cfg.n, seed, strategy);
  }
  if (method == "exact") {
    return exact_shapley(model, window, strategy, cfg.cap);
  }
  AttributionResult r;
  r.method = method;
  r.delta = std::numeric_limits<double>::quiet_NaN();
  r.observed = derive_observed_set(window);
  r.baseline = strategy.kind;
  r.status = NormalizationStatus::not_applicable;
  const std::size_t m = r.observed.size();
  if (method == "random") {
    CounterRng rng = CounterRng::substream(cfg.seed, "random", i);
    r.seed = rng.key();
    r.raw = random_attribution(r.observed, window.feature_count(), rng);
  } else {
    OcclusionConfig oc;
    oc.kind = method == "fo" ? OcclusionKind::zero
                             : OcclusionKind::training_sample;
    oc.n_draws = cfg.afo_draws;
    if (oc.kind == OcclusionKind::training_sample) oc.pool = pool;
    CounterRng rng = CounterRng::substream(cfg.seed, "afo-draws", i);
    r.seed = oc.kind == OcclusionKind::training_sample ? rng.key() : 0;
    r.raw = feature_occlusion(model, window, oc, rng);
    r.model_eval_count =
        1 + m * (oc.kind == OcclusionKind::training_sample ? oc.n_draws : 1);
  }
  r.phi = r.raw;
  return r;
}

std::vector<AttributionResult> attribute_all(
    const std::string& method, const Predictor& model, const Dataset& prepared,
    const RunConfig& cfg, const BaselineStrategy& strategy,
    const std::vector<std::vector<double>>& pool) {
  std::vector<AttributionResult> results(prepared.instances.size());
  parallel_for(
      results.size(),
      [&](std::size_t i) {
        results[i] = attribute_one(method, model, prepared.instances[i].window,
                                   i, cfg, strategy, pool);
      },
      cfg.threads);
  return results;
}

std::string records_jsonl(const std::vector<AttributionResult>& results,
                          const Dataset& prepared) {
  std::string text;
  for (std::size_t i = 0; i < results.size(); ++i) {
    text += attribution_record(results[i], prepared.instances[i].instance_id,
                               prepared.schema)
                .dump();
    text += '\n';
  }
  return text;
}

int cmd_gen_data(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  SyntheticSpec spec = cfg.synthetic;
  spec.seed = CounterRng::substream(cfg.seed, "data").key();
  const GeneratedData gen = generate(spec);
  std::ostringstream text;
  const DataFormat fmt = cfg.format.empty() && cfg.out == "-"
                             ? DataFormat::jsonl
                             : data_format(cfg, cfg.out);
  if (fmt == DataFormat::jsonl) {
    write_dataset_jsonl(text, gen.dataset, &gen.drivers);
  } else {
    write_dataset_csv(text, gen.dataset);
  }
  write_output(cfg.out, text.str(), out);
  err << "generated " << gen.dataset.size() << " instances, positive rate "
      << gen.positive_rate << "\n";
  return 0;
}

struct Prepared {
  Dataset data;
  BaselineStrategy strategy;
};

Prepared prepare_input(const RunConfig& cfg) {
  const Dataset raw = load_dataset(cfg, cfg.data);
  BaselineStrategy strategy(parse_baseline_kind(cfg.baseline), raw.schema);
  return {prepare_dataset(raw, strategy), std::move(strategy)};
}

int cmd_attribute(const RunConfig& cfg, bool oracle, std::ostream& out,
                  std::ostream& err) {
  const Prepared in = prepare_input(cfg);
  const auto model = resolve_model(cfg, in.data, in.strategy, err);
  std::vector<std::string> methods =
      oracle ? std::vector<std::string>{"exact"} : cfg.methods;
  if (methods.empty()) methods = {"deltashap"};
  if (oracle) {
    // Refuse up front rather than after part of the output is computed.
    for (const auto& inst : in.data.instances) {
      const std::size_t m = derive_observed_set(inst.window).size();
      if (m > cfg.cap) {
        throw BudgetExceeded(
            "instance '" + inst.instance_id + "' has " + std::to_string(m) +
            " observed features; exact Shapley needs 2^" + std::to_string(m) +
            " model evaluations, above the cap of 2^" +
            std::to_string(cfg.cap));
      }
    }
  }
  std::vector<std::vector<double>> pool;
  if (std::find(methods.begin(), methods.end(), "afo") != methods.end()) {
    pool = training_value_pool(in.data);
  }
  std::string text;
  for (const auto& method : methods) {
    text += records_jsonl(
        attribute_all(method, *model, in.data, cfg, in.strategy, pool),
        in.data);
  }
  write_output(cfg.out, text, out);
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Prepared in = prepare_input(cfg);
  const auto model = resolve_model(cfg, in.data, in.strategy, err);
  std::vector<std::string> methods = cfg.methods;
  if (methods.empty()) methods = {"deltashap", "fo", "afo", "random"};
  std::vector<std::vector<double>> pool;
  if (std::find(methods.begin(), methods.end(), "afo") != methods.end()) {
    pool = training_value_pool(in.data);
  }
  const std::optional<std::size_t> k_max =
      cfg.k_max ? std::optional<std::size_t>(cfg.k_max) : std::nullopt;

  std::vector<EvalReport> reports;
  for (const auto& method : methods) {
    const auto start = std::chrono::steady_clock::now();
    const auto results =
        attribute_all(method, *model, in.data, cfg, in.strategy, pool);
    std::vector<std::vector<double>> phis;
    std::size_t attribution_evals = 0;
    phis.reserve(results.size());
    for (const auto& r : results) {
      phis.push_back(r.phi);
      attribution_evals += r.model_eval_count;
    }
    const double attribution_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    EvalReport report = dataset_degradation(*model, in.data, phis, cfg.p,
                                            in.strategy, k_max, method);
    err << method << ": attribution " << attribution_seconds << " s ("
        << attribution_evals << " model evals), metrics "
        << report.wall_clock_seconds << " s\n";
    report.wall_clock_seconds += attribution_seconds;
    report.model_evals += attribution_evals;
    reports.push_back(std::move(report));
  }
  const auto doc = eval_report_json(reports, cfg.to_json(), in.data);
  write_output(cfg.out, doc.dump(2) + "\n", out);
  return 0;
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw ConfigError("--in is required");
  std::ifstream in(cfg.input, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + cfg.input + "'");
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("report input is not valid JSON: ") +
                      e.what());
  }
  write_output(cfg.out, plot_data_csv(doc), out);
  write_output(cfg.summary, summary_table(doc), out);
  return 0;
}

}  // namespace

void RunConfig::validate() const {
  if (n == 0) throw ConfigError("--n must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("--p must lie in (0, 1]");
  for (const auto& m : methods) {
    if (!kMethods.count(m)) {
      throw ConfigError("unknown method '" + m +
                        "' (expected deltashap, fo, afo or random)");
    }
  }
  parse_baseline_kind(baseline);
  if (!format.empty()) parse_data_format(format);
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["model"] = model;
  j["baseline"] = baseline;
  j["methods"] = methods;
  j["n"] = n;
  j["seed"] = seed;
  j["p"] = p;
  j["k_max"] = k_max;
  j["afo_draws"] = afo_draws;
  j["learning_rate"] = learning_rate;
  j["epochs"] = epochs;
  return j;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Shapley attribution of prediction changes in online "
               "time-series monitoring"};
  app.name("deltashap");
  app.set_config("--config", "", "Flat key = value file of long flag names");
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--data", cfg.data, "Input dataset (csv or jsonl)");
  app.add_option("--train", cfg.train, "Training dataset for --model tiny");
  app.add_option("--in", cfg.input, "Evaluation report to render (report)");
  app.add_option("--out", cfg.out, "Output path, - for stdout");
  app.add_option("--summary", cfg.summary, "Summary table path (report)");
  app.add_option("--format", cfg.format, "Dataset format: csv | jsonl");
  app.add_option("--model", cfg.model,
                 "tiny | interaction | linear | path to a model file");
  app.add_option("--save-model", cfg.save_model, "Write the model used here");
  app.add_option("--baseline", cfg.baseline,
                 "forward_fill | zero | population");
  app.add_option("--method", cfg.methods, "deltashap, fo, afo, random")
      ->delimiter(',');
  app.add_option("--n", cfg.n, "Sampled permutations per instance");
  app.add_option("--seed", cfg.seed, "Root seed");
  app.add_option("--p", cfg.p, "Adaptive removal fraction");
  app.add_option("--k-max", cfg.k_max, "Removal steps for AUC/APR curves");
  app.add_option("--cap", cfg.cap, "Largest observed set for exact Shapley");
  app.add_option("--window", cfg.window, "Window length W");
  app.add_option("--afo-draws", cfg.afo_draws, "Samples per feature for AFO");
  app.add_option("--threads", cfg.threads, "Worker threads, 0 = all cores");
  app.add_option("--learning-rate", cfg.learning_rate);
  app.add_option("--epochs", cfg.epochs);
  app.add_option("--instances", cfg.synthetic.instances);
  app.add_option("--features", cfg.synthetic.feature_count);
  app.add_option("--obs-prob", cfg.synthetic.observation_prob)
      ->delimiter(',');
  app.add_option("--ar", cfg.synthetic.ar_coefficient)->delimiter(',');
  app.add_option("--scorer", cfg.synthetic.scorer, "interaction | linear");
  std::string labeling = "bernoulli";
  app.add_option("--labeling", labeling, "bernoulli | threshold");
  app.add_option("--label-noise", cfg.synthetic.label_noise);

  app.add_subcommand("gen-data", "Write a synthetic dataset");
  app.add_subcommand("attribute", "Attribute the final step of each instance");
  app.add_subcommand("oracle", "Exact Shapley attributions (capped)");
  app.add_subcommand("evaluate", "Faithfulness report comparing methods");
  app.add_subcommand("report", "Plot data and summary table from a report");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    cfg.synthetic.labeling = parse_label_mode(labeling);
    if (cfg.window) cfg.synthetic.window_length = cfg.window;
    cfg.validate();
    if (cfg.command == "gen-data") return cmd_gen_data(cfg, out, err);
    if (cfg.command == "attribute") return cmd_attribute(cfg, false, out, err);
    if (cfg.command == "oracle") return cmd_attribute(cfg, true, out, err);
    if (cfg.command == "evaluate") return cmd_evaluate(cfg, out, err);
    return cmd_report(cfg, out);
  } catch (const BudgetExceeded& e) {
    err << "deltashap: refused: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "deltashap: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace deltashap
