#include "deltashap/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "deltashap/errors.hpp"
#include "deltashap/imputation.hpp"
#include "deltashap/random.hpp"

namespace deltashap {

namespace {

std::vector<double> broadcast(const std::vector<double>& v, std::size_t d,
                              const char* name) {
  if (v.size() == d) return v;
  if (v.size() == 1) return std::vector<double>(d, v.front());
  throw ConfigError(std::string(name) + " needs 1 or D entries");
}

std::vector<double> builtin_linear(std::size_t d) {
  std::vector<double> linear(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double frac =
        d > 1 ? static_cast<double>(j) / static_cast<double>(d - 1) : 0.0;
    linear[j] = (j % 2 == 0 ? 1.0 : -1.0) * (2.0 - 1.5 * frac);
  }
  return linear;
}

std::vector<PairTerm> builtin_pairs(std::size_t d) {
  std::vector<PairTerm> pairs;
  if (d >= 2) pairs.push_back({0, 1, 0.3});
  if (d >= 4) pairs.push_back({2, 3, -0.25});
  return pairs;
}

std::vector<double> builtin_history(std::size_t d) {
  std::vector<double> history(d, 0.0);
  history[0] = 0.5;
  if (d >= 2) history[1] = -0.3;
  return history;
}

std::string instance_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "syn-%06zu", i);
  return buf;
}

}  // namespace

std::string to_string(LabelMode mode) {
  return mode == LabelMode::bernoulli ? "bernoulli" : "threshold";
}

LabelMode parse_label_mode(const std::string& name) {
  if (name == "bernoulli") return LabelMode::bernoulli;
  if (name == "threshold") return LabelMode::threshold;
  throw ConfigError("unknown labeling '" + name +
                    "' (expected bernoulli or threshold)");
}

std::unique_ptr<Predictor> builtin_scorer(const std::string& id,
                                          std::size_t window_length,
                                          std::size_t feature_count) {
  if (window_length == 0 || feature_count == 0) {
    throw ConfigError("built-in scorers need W >= 1 and D >= 1");
  }
  const auto linear = builtin_linear(feature_count);
  const auto history = builtin_history(feature_count);
  if (id == "interaction") {
    return std::make_unique<InteractionSyntheticModel>(
        window_length, 0.0, linear, builtin_pairs(feature_count), history);
  }
  if (id == "linear") {
    std::vector<double> weights(window_length * feature_count, 0.0);
    const std::size_t past = window_length - 1;
    for (std::size_t t = 0; t < past; ++t) {
      for (std::size_t j = 0; j < feature_count; ++j) {
        weights[t * feature_count + j] =
            history[j] / static_cast<double>(past);
      }
    }
    std::copy(linear.begin(), linear.end(),
              weights.begin() + past * feature_count);
    return std::make_unique<LinearLogitModel>(window_length, feature_count,
                                              std::move(weights), 0.0,
                                              Link::sigmoid);
  }
  throw ConfigError("unknown built-in scorer '" + id +
                    "' (expected interaction or linear)");
}

std::vector<double> logit_contributions(const InteractionSyntheticModel& model,
                                        const Window& prepared,
                                        const std::vector<double>& baseline) {
  const auto x = prepared.final_row();
  const std::size_t d = x.size();
  const ObservedSet observed = derive_observed_set(prepared);
  std::vector<double> out(d, 0.0);
  for (std::size_t j : observed.indices()) {
    out[j] = model.linear()[j] * (x[j] - baseline[j]);
  }
  // For c * y_j * y_k the Shapley share of j is c (x_j - b_j)(x_k + b_k) / 2;
  // an unobserved partner has x_k = b_k.
  for (const auto& p : model.pairs()) {
    const std::size_t a = p.first;
    const std::size_t b = p.second;
    if (observed.contains(a)) {
      out[a] += p.coefficient * (x[a] - baseline[a]) * (x[b] + baseline[b]) / 2;
    }
    if (observed.contains(b)) {
      out[b] += p.coefficient * (x[b] - baseline[b]) * (x[a] + baseline[a]) / 2;
    }
  }
  return out;
}

std::vector<double> observed_medians(const Dataset& ds) {
  const std::size_t d = ds.schema.feature_count();
  std::vector<std::vector<double>> seen(d);
  for (const auto& inst : ds.instances) {
    const Window& w = inst.window;
    for (std::size_t t = 0; t < w.window_length(); ++t) {
      for (std::size_t j = 0; j < d && j < w.feature_count(); ++j) {
        if (w.observed(t, j) && std::isfinite(w.value(t, j))) {
          seen[j].push_back(w.value(t, j));
        }
      }
    }
  }
  std::vector<double> medians(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    auto& v = seen[j];
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    medians[j] = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  }
  return medians;
}

GeneratedData generate(const SyntheticSpec& spec) {
  const std::size_t d = spec.feature_count;
  const std::size_t w_len = spec.window_length;
  if (d == 0 || w_len == 0 || spec.instances == 0) {
    throw ConfigError("synthetic spec needs D, W and instances >= 1");
  }
  const auto obs_prob = broadcast(spec.observation_prob, d, "observation_prob");
  const auto ar = broadcast(spec.ar_coefficient, d, "ar_coefficient");
  for (double q : obs_prob) {
    if (!(q > 0.0 && q <= 1.0)) {
      throw ConfigError("observation probabilities must lie in (0, 1]");
    }
  }
  for (double a : ar) {
    if (!(a >= 0.0 && a < 1.0)) {
      throw ConfigError("AR(1) coefficients must lie in [0, 1)");
    }
  }
  if (!(spec.label_noise >= 0.0 && spec.label_noise <= 0.5)) {
    throw ConfigError("label_noise must lie in [0, 0.5]");
  }
  const auto scorer = builtin_scorer(spec.scorer, w_len, d);

  CounterRng latent_rng = CounterRng::substream(spec.seed, "data-latent");
  CounterRng label_rng = CounterRng::substream(spec.seed, "data-label");
  CounterRng mask_rng = CounterRng::substream(spec.seed, "data-mask");

  GeneratedData out;
  out.dataset.max_sequence_length = w_len;
  std::vector<int> labels(spec.instances);
  std::vector<Window> latents;
  latents.reserve(spec.instances);
  const std::vector<std::uint8_t> full_mask(w_len * d, 1);

  std::size_t positives = 0;
  for (std::size_t i = 0; i < spec.instances; ++i) {
    std::vector<double> values(w_len * d);
    for (std::size_t j = 0; j < d; ++j) {
      const double innovation = std::sqrt(1.0 - ar[j] * ar[j]);
      double x = latent_rng.normal();
      values[j] = x;
      for (std::size_t t = 1; t < w_len; ++t) {
        x = ar[j] * x + innovation * latent_rng.normal();
        values[t * d + j] = x;
      }
    }
    Window latent(w_len, d, std::move(values), full_mask, w_len - 1);
    const double prob = scorer->predict(latent);
    int label = spec.labeling == LabelMode::threshold
                    ? (prob >= 0.5 ? 1 : 0)
                    : (label_rng.uniform() < prob ? 1 : 0);
    if (spec.label_noise > 0.0 && label_rng.uniform() < spec.label_noise) {
      label = 1 - label;
    }
    labels[i] = label;
    positives += static_cast<std::size_t>(label);
    latents.push_back(std::move(latent));
  }
  if (positives == 0 || positives == spec.instances) {
    throw DegenerateLabels(
        "generated labels are all " + std::to_string(positives ? 1 : 0) +
        "; regenerate with more instances, another seed, or label noise");
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < spec.instances; ++i) {
    std::vector<double> values(latents[i].values().begin(),
                               latents[i].values().end());
    std::vector<std::uint8_t> mask(w_len * d, 1);
    for (std::size_t t = 0; t < w_len; ++t) {
      for (std::size_t j = 0; j < d; ++j) {
        if (mask_rng.uniform() >= obs_prob[j]) {
          mask[t * d + j] = 0;
          values[t * d + j] = nan;
        }
      }
    }
    out.dataset.instances.push_back(
        {Window(w_len, d, std::move(values), std::move(mask), w_len - 1),
         labels[i], instance_name(i)});
  }

  out.dataset.schema = FeatureSchema::with_default_names(d);
  out.dataset.schema = FeatureSchema(out.dataset.schema.names(),
                                     observed_medians(out.dataset));
  out.positive_rate =
      static_cast<double>(positives) / static_cast<double>(spec.instances);

  // Both scorers share final-step linear terms; only "interaction" has pairs.
  const InteractionSyntheticModel model(
      w_len, 0.0, builtin_linear(d),
      spec.scorer == "interaction" ? builtin_pairs(d) : std::vector<PairTerm>{},
      builtin_history(d));
  const BaselineStrategy ff(BaselineKind::forward_fill, out.dataset.schema);
  for (const auto& inst : out.dataset.instances) {
    const Window prepared = prepare_window(inst.window, ff);
    const ObservedSet observed = derive_observed_set(prepared);
    if (observed.empty()) {
      out.drivers.push_back(std::nullopt);
      continue;
    }
    const auto contrib =
        logit_contributions(model, prepared, baseline_row(prepared, ff).values);
    std::size_t best = observed[0];
    for (std::size_t j : observed.indices()) {
      if (std::abs(contrib[j]) > std::abs(contrib[best])) best = j;
    }
    out.drivers.push_back(best);
  }
  return out;
}

}  // namespace deltashap
