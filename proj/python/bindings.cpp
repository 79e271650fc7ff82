#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <memory>
#include <optional>
#include <sstream>

#include "deltashap/attribution.hpp"
#include "deltashap/cli.hpp"
#include "deltashap/errors.hpp"
#include "deltashap/imputation.hpp"
#include "deltashap/io.hpp"
#include "deltashap/metrics.hpp"
#include "deltashap/predictor.hpp"
#include "deltashap/synthetic.hpp"

namespace py = pybind11;
using namespace deltashap;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Window window_from_array(const Array& values, std::optional<Array> mask,
                         std::size_t end_time) {
  if (values.ndim() != 2) throw ShapeError("window values must be 2-D (W, D)");
  const auto w = static_cast<std::size_t>(values.shape(0));
  const auto d = static_cast<std::size_t>(values.shape(1));
  std::vector<double> v(values.data(), values.data() + w * d);
  std::vector<std::uint8_t> m(w * d);
  if (mask) {
    if (mask->ndim() != 2 || static_cast<std::size_t>(mask->shape(0)) != w ||
        static_cast<std::size_t>(mask->shape(1)) != d) {
      throw ShapeError("mask must have the same (W, D) shape as values");
    }
    for (std::size_t c = 0; c < w * d; ++c) m[c] = mask->data()[c] != 0.0;
  } else {
    for (std::size_t c = 0; c < w * d; ++c) m[c] = !std::isnan(v[c]);
  }
  return Window(w, d, std::move(v), std::move(m), end_time);
}

py::array_t<double> to_array(std::span<const double> xs, std::size_t rows,
                             std::size_t cols) {
  py::array_t<double> out({rows, cols});
  std::copy(xs.begin(), xs.end(), out.mutable_data());
  return out;
}

BaselineStrategy strategy_for(const std::string& kind,
                              const std::optional<std::vector<double>>& fill,
                              std::size_t d) {
  return BaselineStrategy(parse_baseline_kind(kind),
                          fill ? *fill : std::vector<double>(d, 0.0));
}

// Wraps a Python callable f(batch) -> probabilities, batch shaped (B, W, D).
class CallableModel final : public Predictor {
 public:
  CallableModel(py::function fn, std::size_t w, std::size_t d)
      : fn_(std::move(fn)), w_(w), d_(d) {}

  std::size_t window_length() const override { return w_; }
  std::size_t feature_count() const override { return d_; }
  std::string kind() const override { return "python"; }
  nlohmann::json parameters() const override { return nlohmann::json::object(); }

 protected:
  void score_batch(std::span<const Window> windows,
                   std::span<double> out) const override {
    py::gil_scoped_acquire gil;
    try {
      py::array_t<double> batch({windows.size(), w_, d_});
      double* dst = batch.mutable_data();
      for (const auto& win : windows) {
        dst = std::copy(win.values().begin(), win.values().end(), dst);
      }
      const Array result(fn_(batch));
      if (static_cast<std::size_t>(result.size()) != windows.size()) {
        throw ModelFault("callable returned " + std::to_string(result.size()) +
                         " scores for a batch of " +
                         std::to_string(windows.size()));
      }
      std::copy(result.data(), result.data() + result.size(), out.begin());
    } catch (py::error_already_set& e) {
      throw ModelFault(std::string("python model raised: ") + e.what());
    }
  }

 private:
  py::function fn_;
  std::size_t w_;
  std::size_t d_;
};

py::dict direction_dict(const DirectionReport& r) {
  py::dict d;
  d["budgets"] = r.budgets;
  d["cumulative_at_budget"] = r.cumulative_at_budget;
  d["area"] = r.area;
  d["mean_area"] = r.mean_area;
  d["auc_by_k"] = r.auc_by_k;
  d["apr_by_k"] = r.apr_by_k;
  d["mean_cumulative_by_k"] = r.mean_cumulative_by_k;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Shapley attribution of prediction changes in monitoring models";

  auto base = py::register_exception<Error>(m, "DeltaShapError",
                                            PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<ModelFault>(m, "ModelFault", base);
  py::register_exception<ContractViolation>(m, "ContractViolation", base);
  py::register_exception<DegenerateLabels>(m, "DegenerateLabels", base);
  py::register_exception<UndefinedMetric>(m, "UndefinedMetric", base);
  py::register_exception<BudgetExceeded>(m, "BudgetExceeded", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ParseError>(m, "ParseError", base);

  py::class_<Window>(m, "Window")
      .def(py::init(&window_from_array), py::arg("values"),
           py::arg("mask") = py::none(), py::arg("end_time") = 0,
           "Window from a (W, D) array; NaN cells are unobserved unless a "
           "mask is given.")
      .def_property_readonly("shape",
                             [](const Window& w) {
                               return py::make_tuple(w.window_length(),
                                                     w.feature_count());
                             })
      .def_property_readonly("end_time", &Window::end_time)
      .def_property_readonly("values",
                             [](const Window& w) {
                               return to_array(w.values(), w.window_length(),
                                               w.feature_count());
                             })
      .def_property_readonly(
          "mask",
          [](const Window& w) {
            py::array_t<bool> out({w.window_length(), w.feature_count()});
            std::copy(w.mask().begin(), w.mask().end(), out.mutable_data());
            return out;
          })
      .def_property_readonly("observed",
                             [](const Window& w) {
                               return derive_observed_set(w).indices();
                             })
      .def("__eq__", &Window::operator==)
      .def("__repr__", [](const Window& w) {
        return "Window(W=" + std::to_string(w.window_length()) +
               ", D=" + std::to_string(w.feature_count()) + ")";
      });

  py::class_<FeatureSchema>(m, "FeatureSchema")
      .def(py::init<std::vector<std::string>, std::vector<double>>(),
           py::arg("names"), py::arg("population_fill"))
      .def_property_readonly("names", &FeatureSchema::names)
      .def_property_readonly("population_fill",
                             &FeatureSchema::population_fill)
      .def_property_readonly("feature_count", &FeatureSchema::feature_count);

  py::class_<LabeledInstance>(m, "LabeledInstance")
      .def_readonly("window", &LabeledInstance::window)
      .def_readonly("label", &LabeledInstance::label)
      .def_readonly("instance_id", &LabeledInstance::instance_id);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("schema", &Dataset::schema)
      .def_readonly("instances", &Dataset::instances)
      .def_readonly("max_sequence_length", &Dataset::max_sequence_length)
      .def("__len__", &Dataset::size)
      .def_property_readonly("labels", [](const Dataset& ds) {
        std::vector<int> out;
        for (const auto& inst : ds.instances) out.push_back(inst.label);
        return out;
      });

  py::class_<Predictor>(m, "Predictor")
      .def_property_readonly("window_length", &Predictor::window_length)
      .def_property_readonly("feature_count", &Predictor::feature_count)
      .def_property_readonly("kind", &Predictor::kind)
      .def("predict", &Predictor::predict, py::arg("window"))
      .def(
          "predict_batch",
          [](const Predictor& p, const std::vector<Window>& ws) {
            return p.predict_batch(ws);
          },
          py::arg("windows"));

  py::class_<LinearLogitModel, Predictor>(m, "LinearLogitModel")
      .def(py::init([](const Array& weights, double bias,
                       const std::string& link) {
             if (weights.ndim() != 2) {
               throw ShapeError("weights must be 2-D (W, D)");
             }
             return LinearLogitModel(
                 weights.shape(0), weights.shape(1),
                 {weights.data(), weights.data() + weights.size()}, bias,
                 parse_link(link));
           }),
           py::arg("weights"), py::arg("bias") = 0.0,
           py::arg("link") = "sigmoid");

  py::class_<InteractionSyntheticModel, Predictor>(m,
                                                   "InteractionSyntheticModel")
      .def(py::init([](std::size_t w, double intercept,
                       std::vector<double> linear,
                       const std::vector<std::tuple<std::size_t, std::size_t,
                                                    double>>& pairs,
                       std::optional<std::vector<double>> history) {
             std::vector<PairTerm> terms;
             for (const auto& [a, b, c] : pairs) terms.push_back({a, b, c});
             std::vector<double> h =
                 history ? *history : std::vector<double>(linear.size(), 0.0);
             return InteractionSyntheticModel(w, intercept, std::move(linear),
                                              std::move(terms), std::move(h));
           }),
           py::arg("window_length"), py::arg("intercept"), py::arg("linear"),
           py::arg("pairs") = std::vector<std::tuple<std::size_t, std::size_t,
                                                     double>>{},
           py::arg("history") = py::none())
      .def("logit", &InteractionSyntheticModel::logit);

  py::class_<TinyLogisticScorer, Predictor>(m, "TinyLogisticScorer")
      .def_property_readonly("weights", &TinyLogisticScorer::weights)
      .def_property_readonly("bias", &TinyLogisticScorer::bias)
      .def_property_readonly("loss_history", &TinyLogisticScorer::loss_history)
      .def("accuracy", &TinyLogisticScorer::accuracy, py::arg("prepared"));

  py::class_<CallableModel, Predictor>(m, "CallableModel",
                                       "Python callable scoring (B, W, D) "
                                       "batches into probabilities.")
      .def(py::init<py::function, std::size_t, std::size_t>(),
           py::arg("fn"), py::arg("window_length"), py::arg("feature_count"));

  py::class_<CountingPredictor, Predictor>(m, "CountingPredictor")
      .def(py::init<const Predictor&>(), py::arg("inner"), py::keep_alive<1, 2>())
      .def_property_readonly("count", &CountingPredictor::count)
      .def("reset", &CountingPredictor::reset);

  m.def(
      "builtin_scorer",
      [](const std::string& id, std::size_t w, std::size_t d) {
        return builtin_scorer(id, w, d);
      },
      py::arg("id"), py::arg("window_length"), py::arg("feature_count"));

  m.def(
      "train_tiny_logistic",
      [](const Dataset& prepared, double lr, std::size_t epochs,
         std::uint64_t seed) {
        return train_tiny_logistic(prepared, {lr, epochs, seed});
      },
      py::arg("prepared"), py::arg("learning_rate") = 0.5,
      py::arg("epochs") = 200, py::arg("seed") = 0);

  m.def(
      "prepare_window",
      [](const Window& w, const std::string& baseline,
         std::optional<std::vector<double>> fill) {
        return prepare_window(w,
                              strategy_for(baseline, fill, w.feature_count()));
      },
      py::arg("window"), py::arg("baseline") = "forward_fill",
      py::arg("population_fill") = py::none());

  m.def(
      "prepare_dataset",
      [](const Dataset& ds, const std::string& baseline) {
        return prepare_dataset(
            ds, BaselineStrategy(parse_baseline_kind(baseline), ds.schema));
      },
      py::arg("dataset"), py::arg("baseline") = "forward_fill");

  py::class_<AttributionResult>(m, "AttributionResult")
      .def_readonly("method", &AttributionResult::method)
      .def_readonly("delta", &AttributionResult::delta)
      .def_readonly("raw", &AttributionResult::raw)
      .def_readonly("phi", &AttributionResult::phi)
      .def_property_readonly("observed",
                             [](const AttributionResult& r) {
                               return r.observed.indices();
                             })
      .def_property_readonly(
          "status", [](const AttributionResult& r) { return to_string(r.status); })
      .def_readonly("model_eval_count", &AttributionResult::model_eval_count)
      .def_readonly("permutations", &AttributionResult::permutations)
      .def_readonly("seed", &AttributionResult::seed);

  // Windows are prepared on entry; preparing is idempotent.
  m.def(
      "deltashap",
      [](const Predictor& model, const Window& window, std::size_t n,
         std::uint64_t seed, const std::string& baseline,
         std::optional<std::vector<double>> fill) {
        const auto s = strategy_for(baseline, fill, window.feature_count());
        py::gil_scoped_release release;
        return deltashap::deltashap(model, prepare_window(window, s), n, seed,
                                    s);
      },
      py::arg("model"), py::arg("window"), py::arg("n") = kDefaultPermutations,
      py::arg("seed") = 0, py::arg("baseline") = "forward_fill",
      py::arg("population_fill") = py::none());

  m.def(
      "exact_shapley",
      [](const Predictor& model, const Window& window, std::size_t cap,
         const std::string& baseline,
         std::optional<std::vector<double>> fill) {
        const auto s = strategy_for(baseline, fill, window.feature_count());
        py::gil_scoped_release release;
        return exact_shapley(model, prepare_window(window, s), s, cap);
      },
      py::arg("model"), py::arg("window"), py::arg("cap") = kDefaultExactCap,
      py::arg("baseline") = "forward_fill",
      py::arg("population_fill") = py::none());

  m.def(
      "prediction_delta",
      [](const Predictor& model, const Window& window,
         const std::string& baseline,
         std::optional<std::vector<double>> fill) {
        const auto s = strategy_for(baseline, fill, window.feature_count());
        return prediction_delta(model, prepare_window(window, s), s);
      },
      py::arg("model"), py::arg("window"),
      py::arg("baseline") = "forward_fill",
      py::arg("population_fill") = py::none());

  m.def(
      "feature_occlusion",
      [](const Predictor& model, const Window& window, const std::string& kind,
         std::vector<std::vector<double>> pool, std::size_t n_draws,
         std::uint64_t seed, const std::string& baseline,
         std::optional<std::vector<double>> fill) {
        OcclusionConfig cfg;
        if (kind == "zero") {
          cfg.kind = OcclusionKind::zero;
        } else if (kind == "training_sample") {
          cfg.kind = OcclusionKind::training_sample;
        } else {
          throw ConfigError("occlusion kind must be zero or training_sample");
        }
        cfg.pool = std::move(pool);
        cfg.n_draws = n_draws;
        CounterRng rng(seed);
        const auto s = strategy_for(baseline, fill, window.feature_count());
        return feature_occlusion(model, prepare_window(window, s), cfg, rng);
      },
      py::arg("model"), py::arg("window"), py::arg("kind") = "zero",
      py::arg("pool") = std::vector<std::vector<double>>{},
      py::arg("n_draws") = 10, py::arg("seed") = 0,
      py::arg("baseline") = "forward_fill",
      py::arg("population_fill") = py::none());

  m.def(
      "random_attribution",
      [](const Window& window, std::uint64_t seed) {
        CounterRng rng(seed);
        return random_attribution(derive_observed_set(window),
                                  window.feature_count(), rng);
      },
      py::arg("window"), py::arg("seed") = 0);

  m.def(
      "normalize",
      [](const std::vector<double>& raw, double delta,
         std::vector<std::size_t> observed) {
        const auto r = normalize(raw, delta, ObservedSet(std::move(observed)));
        return py::make_tuple(r.phi, to_string(r.status));
      },
      py::arg("raw"), py::arg("delta"), py::arg("observed"));

  using PathMetric = double (*)(const Predictor&, const Window&,
                                std::span<const double>, std::size_t,
                                const BaselineStrategy&);
  const auto bind_path_metric = [&m](const char* name, PathMetric fn) {
    m.def(
        name,
        [fn](const Predictor& model, const Window& window,
             const std::vector<double>& phi, std::size_t k,
             const std::string& baseline,
             std::optional<std::vector<double>> fill) {
          const auto s = strategy_for(baseline, fill, window.feature_count());
          return fn(model, prepare_window(window, s), phi, k, s);
        },
        py::arg("model"), py::arg("window"), py::arg("phi"), py::arg("k"),
        py::arg("baseline") = "forward_fill",
        py::arg("population_fill") = py::none());
  };
  bind_path_metric("cpd", &cpd);
  bind_path_metric("cpp", &cpp);
  bind_path_metric("aupd", &aupd);
  bind_path_metric("aupp", &aupp);

  m.def(
      "auc",
      [](const std::vector<double>& s, const std::vector<int>& l) {
        return auc(s, l);
      },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "apr",
      [](const std::vector<double>& s, const std::vector<int>& l) {
        return apr(s, l);
      },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "evaluate",
      [](const Predictor& model, const Dataset& prepared,
         const std::vector<std::vector<double>>& phis, double p,
         std::optional<std::size_t> k_max, const std::string& baseline,
         const std::string& method) {
        const BaselineStrategy s(parse_baseline_kind(baseline),
                                 prepared.schema);
        EvalReport r;
        {
          py::gil_scoped_release release;
          r = dataset_degradation(model, prepared, phis, p, s, k_max, method);
        }
        py::dict out;
        out["method"] = r.method;
        out["p"] = r.p;
        out["aupd"] = r.aupd();
        out["auaucd"] = r.auaucd();
        out["auaprd"] = r.auaprd();
        out["aupp"] = r.aupp();
        out["auaucp"] = r.auaucp();
        out["auaprp"] = r.auaprp();
        out["model_evals"] = r.model_evals;
        out["most_salient"] = direction_dict(r.most);
        out["least_salient"] = direction_dict(r.least);
        return out;
      },
      py::arg("model"), py::arg("prepared"), py::arg("phis"),
      py::arg("p") = kDefaultRemovalFraction, py::arg("k_max") = py::none(),
      py::arg("baseline") = "forward_fill", py::arg("method") = "");

  m.def(
      "generate",
      [](std::size_t instances, std::size_t features, std::size_t w,
         std::vector<double> obs, std::vector<double> ar,
         const std::string& scorer, const std::string& labeling, double noise,
         std::uint64_t seed) {
        SyntheticSpec spec;
        spec.instances = instances;
        spec.feature_count = features;
        spec.window_length = w;
        spec.observation_prob = std::move(obs);
        spec.ar_coefficient = std::move(ar);
        spec.scorer = scorer;
        spec.labeling = parse_label_mode(labeling);
        spec.label_noise = noise;
        spec.seed = seed;
        GeneratedData g = generate(spec);
        return py::make_tuple(std::move(g.dataset), g.drivers);
      },
      py::arg("instances") = 500, py::arg("features") = 6,
      py::arg("window_length") = 6,
      py::arg("observation_prob") = std::vector<double>{0.7},
      py::arg("ar_coefficient") = std::vector<double>{0.8},
      py::arg("scorer") = "interaction", py::arg("labeling") = "bernoulli",
      py::arg("label_noise") = 0.0, py::arg("seed") = 0,
      "Synthetic dataset and the per-instance ground-truth driver feature.");

  m.def(
      "ingest",
      [](const std::string& path, std::optional<std::string> format,
         std::size_t window_length) {
        const DataFormat fmt = format ? parse_data_format(*format)
                                      : format_from_extension(path);
        return ingest(path, fmt, {window_length});
      },
      py::arg("path"), py::arg("format") = py::none(),
      py::arg("window_length") = 0);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a CLI command in-process: (exit_code, stdout, stderr).");
}
