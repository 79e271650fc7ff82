#include "deltashap/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "deltashap/errors.hpp"
#include "deltashap/random.hpp"

namespace deltashap {

namespace {

constexpr int kModelFormatVersion = 1;
constexpr const char* kModelFormat = "deltashap-model";

void check_shape(const Window& w, std::size_t expected_w,
                 std::size_t expected_d, std::size_t index) {
  if (w.window_length() != expected_w || w.feature_count() != expected_d) {
    throw ShapeError("window " + std::to_string(index) + " has shape " +
                     std::to_string(w.window_length()) + "x" +
                     std::to_string(w.feature_count()) + ", model expects " +
                     std::to_string(expected_w) + "x" +
                     std::to_string(expected_d));
  }
  for (double v : w.values()) {
    if (!std::isfinite(v)) {
      throw ShapeError("window " + std::to_string(index) +
                       " has an unfilled or non-finite cell; prepare it first");
    }
  }
}

}  // namespace

std::vector<double> Predictor::predict_batch(
    std::span<const Window> windows) const {
  const std::size_t w = window_length();
  const std::size_t d = feature_count();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    check_shape(windows[i], w, d, i);
  }
  std::vector<double> out(windows.size(), 0.0);
  score_batch(windows, out);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i]) || out[i] < 0.0 || out[i] > 1.0) {
      throw ModelFault(kind() + " produced " + std::to_string(out[i]) +
                       " for window " + std::to_string(i));
    }
  }
  return out;
}

double Predictor::predict(const Window& window) const {
  return predict_batch(std::span<const Window>(&window, 1)).front();
}

std::string to_string(Link link) {
  return link == Link::sigmoid ? "sigmoid" : "identity_clamped";
}

Link parse_link(const std::string& name) {
  if (name == "sigmoid") return Link::sigmoid;
  if (name == "identity_clamped") return Link::identity_clamped;
  throw ConfigError("unknown link '" + name + "'");
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// LinearLogitModel

LinearLogitModel::LinearLogitModel(std::size_t window_length,
                                   std::size_t feature_count,
                                   std::vector<double> weights, double bias,
                                   Link link)
    : window_length_(window_length),
      feature_count_(feature_count),
      weights_(std::move(weights)),
      bias_(bias),
      link_(link) {
  if (window_length_ == 0 || feature_count_ == 0 ||
      weights_.size() != window_length_ * feature_count_) {
    throw ShapeError("linear model weights must be W*D");
  }
}

LinearLogitModel LinearLogitModel::final_step(std::size_t window_length,
                                              std::vector<double> final_weights,
                                              double bias, Link link) {
  const std::size_t d = final_weights.size();
  std::vector<double> weights(window_length * d, 0.0);
  std::copy(final_weights.begin(), final_weights.end(),
            weights.begin() + (window_length - 1) * d);
  return LinearLogitModel(window_length, d, std::move(weights), bias, link);
}

void LinearLogitModel::score_batch(std::span<const Window> windows,
                                   std::span<double> out) const {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto values = windows[i].values();
    double score = bias_;
    for (std::size_t c = 0; c < values.size(); ++c) {
      score += weights_[c] * values[c];
    }
    out[i] = link_ == Link::sigmoid ? sigmoid(score)
                                    : std::clamp(score, 0.0, 1.0);
  }
}

nlohmann::json LinearLogitModel::parameters() const {
  return {{"window_length", window_length_},
          {"feature_count", feature_count_},
          {"weights", weights_},
          {"bias", bias_},
          {"link", to_string(link_)}};
}

// ---------------------------------------------------------------------------
// InteractionSyntheticModel

InteractionSyntheticModel::InteractionSyntheticModel(
    std::size_t window_length, double intercept, std::vector<double> linear,
    std::vector<PairTerm> pairs, std::vector<double> history)
    : window_length_(window_length),
      intercept_(intercept),
      linear_(std::move(linear)),
      pairs_(std::move(pairs)),
      history_(std::move(history)) {
  if (window_length_ == 0 || linear_.empty()) {
    throw ShapeError("interaction model needs W >= 1 and D >= 1");
  }
  if (history_.empty()) history_.assign(linear_.size(), 0.0);
  if (history_.size() != linear_.size()) {
    throw ShapeError("history coefficients must have length D");
  }
  for (const auto& p : pairs_) {
    if (p.first >= linear_.size() || p.second >= linear_.size() ||
        p.first == p.second) {
      throw ShapeError("pair term indices must be distinct features < D");
    }
  }
}

double InteractionSyntheticModel::logit(const Window& window) const {
  const auto x = window.final_row();
  double score = intercept_;
  for (std::size_t j = 0; j < linear_.size(); ++j) score += linear_[j] * x[j];
  for (const auto& p : pairs_) {
    score += p.coefficient * x[p.first] * x[p.second];
  }
  const std::size_t past = window.window_length() - 1;
  if (past > 0) {
    for (std::size_t j = 0; j < history_.size(); ++j) {
      if (history_[j] == 0.0) continue;
      double sum = 0.0;
      for (std::size_t t = 0; t < past; ++t) sum += window.value(t, j);
      score += history_[j] * sum / static_cast<double>(past);
    }
  }
  return score;
}

void InteractionSyntheticModel::score_batch(std::span<const Window> windows,
                                            std::span<double> out) const {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out[i] = sigmoid(logit(windows[i]));
  }
}

nlohmann::json InteractionSyntheticModel::parameters() const {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : pairs_) {
    pairs.push_back({p.first, p.second, p.coefficient});
  }
  return {{"window_length", window_length_},
          {"intercept", intercept_},
          {"linear", linear_},
          {"pairs", pairs},
          {"history", history_}};
}

// ---------------------------------------------------------------------------
// TinyLogisticScorer

TinyLogisticScorer::TinyLogisticScorer(std::size_t window_length,
                                       std::size_t feature_count,
                                       std::vector<double> center,
                                       std::vector<double> scale,
                                       std::vector<double> weights,
                                       double bias)
    : window_length_(window_length),
      feature_count_(feature_count),
      center_(std::move(center)),
      scale_(std::move(scale)),
      weights_(std::move(weights)),
      bias_(bias) {
  const std::size_t p = window_length_ * feature_count_;
  if (p == 0 || center_.size() != p || scale_.size() != p ||
      weights_.size() != p) {
    throw ShapeError("tiny logistic parameters must all be W*D");
  }
}

double TinyLogisticScorer::linear_score(const Window& w) const {
  const auto values = w.values();
  double score = bias_;
  for (std::size_t c = 0; c < values.size(); ++c) {
    score += weights_[c] * (values[c] - center_[c]) / scale_[c];
  }
  return score;
}

void TinyLogisticScorer::score_batch(std::span<const Window> windows,
                                     std::span<double> out) const {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out[i] = sigmoid(linear_score(windows[i]));
  }
}

double TinyLogisticScorer::accuracy(const Dataset& prepared) const {
  if (prepared.instances.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& inst : prepared.instances) {
    const int guess = predict(inst.window) >= 0.5 ? 1 : 0;
    hits += guess == inst.label ? 1 : 0;
  }
  return static_cast<double>(hits) /
         static_cast<double>(prepared.instances.size());
}

nlohmann::json TinyLogisticScorer::parameters() const {
  return {{"window_length", window_length_},
          {"feature_count", feature_count_},
          {"center", center_},
          {"scale", scale_},
          {"weights", weights_},
          {"bias", bias_}};
}

namespace {

double mean_log_loss(const std::vector<double>& z, std::size_t n,
                     std::size_t p, std::span<const double> labels,
                     std::span<const double> w, double b) {
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = b;
    for (std::size_t c = 0; c < p; ++c) s += w[c] * z[i * p + c];
    // log(1 + e^s) - y s, evaluated without overflow.
    const double softplus =
        s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
    loss += softplus - labels[i] * s;
  }
  return loss / static_cast<double>(n);
}

}  // namespace

TinyLogisticScorer train_tiny_logistic(const Dataset& prepared,
                                       const TrainConfig& config) {
  const std::size_t n = prepared.instances.size();
  if (n == 0) throw ContractViolation("cannot train on an empty dataset");
  std::size_t positives = 0;
  for (const auto& inst : prepared.instances) positives += inst.label == 1;
  if (positives == 0 || positives == n) {
    throw DegenerateLabels("training labels contain a single class");
  }
  if (!(config.learning_rate > 0.0)) {
    throw ConfigError("learning_rate must be positive");
  }

  const Window& first = prepared.instances.front().window;
  const std::size_t w_len = first.window_length();
  const std::size_t d = first.feature_count();
  const std::size_t p = w_len * d;

  std::vector<double> z(n * p);
  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Window& w = prepared.instances[i].window;
    if (w.window_length() != w_len || w.feature_count() != d) {
      throw ShapeError("training windows must share one shape");
    }
    const auto v = w.values();
    for (std::size_t c = 0; c < p; ++c) {
      if (!std::isfinite(v[c])) {
        throw ShapeError("training window " + std::to_string(i) +
                         " is not prepared");
      }
      z[i * p + c] = v[c];
    }
    labels[i] = prepared.instances[i].label;
  }

  std::vector<double> center(p, 0.0);
  std::vector<double> scale(p, 1.0);
  for (std::size_t c = 0; c < p; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += z[i * p + c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = z[i * p + c] - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(n);
    center[c] = mean;
    scale[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i * p + c] = (z[i * p + c] - center[c]) / scale[c];
    }
  }

  // The log-loss gradient is Lipschitz with constant 0.25 * lambda_max of the
  // (bias-augmented) Gram matrix. Gershgorin bounds lambda_max; capping the
  // step at 1/L makes every full-batch step a descent step.
  double gershgorin = 0.0;
  for (std::size_t a = 0; a <= p; ++a) {
    double row_sum = 0.0;
    for (std::size_t b = 0; b <= p; ++b) {
      double g = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double za = a == p ? 1.0 : z[i * p + a];
        const double zb = b == p ? 1.0 : z[i * p + b];
        g += za * zb;
      }
      row_sum += std::abs(g) / static_cast<double>(n);
    }
    gershgorin = std::max(gershgorin, row_sum);
  }
  const double step =
      std::min(config.learning_rate, 1.0 / (0.25 * gershgorin));

  CounterRng rng = CounterRng::substream(config.seed, "tiny-logistic-init");
  std::vector<double> weights(p);
  for (auto& wt : weights) wt = 0.01 * rng.normal();
  double bias = 0.0;

  std::vector<double> loss_history;
  loss_history.reserve(config.epochs + 1);
  loss_history.push_back(mean_log_loss(z, n, p, labels, weights, bias));

  std::vector<double> grad(p);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = bias;
      for (std::size_t c = 0; c < p; ++c) s += weights[c] * z[i * p + c];
      const double r = sigmoid(s) - labels[i];
      for (std::size_t c = 0; c < p; ++c) grad[c] += r * z[i * p + c];
      grad_b += r;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t c = 0; c < p; ++c) weights[c] -= step * grad[c] * inv_n;
    bias -= step * grad_b * inv_n;
    loss_history.push_back(mean_log_loss(z, n, p, labels, weights, bias));
  }

  TinyLogisticScorer model(w_len, d, std::move(center), std::move(scale),
                           std::move(weights), bias);
  model.loss_history_ = std::move(loss_history);
  return model;
}

// ---------------------------------------------------------------------------
// CountingPredictor

void CountingPredictor::score_batch(std::span<const Window> windows,
                                    std::span<double> out) const {
  const auto inner = inner_.predict_batch(windows);
  std::copy(inner.begin(), inner.end(), out.begin());
  count_ += windows.size();
  batches_ += 1;
}

// ---------------------------------------------------------------------------
// Persistence

std::string model_to_string(const Predictor& model,
                            const FeatureSchema& schema) {
  nlohmann::json doc;
  doc["format"] = kModelFormat;
  doc["version"] = kModelFormatVersion;
  doc["kind"] = model.kind();
  doc["schema_hash"] = schema.hash();
  doc["parameters"] = model.parameters();
  return doc.dump(2) + "\n";
}

void save_model(const Predictor& model, const FeatureSchema& schema,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write model file '" + path + "'");
  out << model_to_string(model, schema);
}

std::unique_ptr<Predictor> model_from_string(const std::string& text,
                                             const FeatureSchema& schema) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.value("format", "") != kModelFormat) {
      throw ConfigError("not a deltashap model file");
    }
    if (doc.at("version").get<int>() != kModelFormatVersion) {
      throw ConfigError("unsupported model file version " +
                        doc.at("version").dump());
    }
    if (doc.at("schema_hash").get<std::uint64_t>() != schema.hash()) {
      throw ConfigError("model was saved for a different feature schema");
    }
    const auto& p = doc.at("parameters");
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "linear") {
      return std::make_unique<LinearLogitModel>(
          p.at("window_length").get<std::size_t>(),
          p.at("feature_count").get<std::size_t>(),
          p.at("weights").get<std::vector<double>>(),
          p.at("bias").get<double>(),
          parse_link(p.at("link").get<std::string>()));
    }
    if (kind == "interaction") {
      std::vector<PairTerm> pairs;
      for (const auto& t : p.at("pairs")) {
        pairs.push_back({t.at(0).get<std::size_t>(),
                         t.at(1).get<std::size_t>(), t.at(2).get<double>()});
      }
      return std::make_unique<InteractionSyntheticModel>(
          p.at("window_length").get<std::size_t>(),
          p.at("intercept").get<double>(),
          p.at("linear").get<std::vector<double>>(), std::move(pairs),
          p.at("history").get<std::vector<double>>());
    }
    if (kind == "tiny_logistic") {
      return std::make_unique<TinyLogisticScorer>(
          p.at("window_length").get<std::size_t>(),
          p.at("feature_count").get<std::size_t>(),
          p.at("center").get<std::vector<double>>(),
          p.at("scale").get<std::vector<double>>(),
          p.at("weights").get<std::vector<double>>(),
          p.at("bias").get<double>());
    }
    throw ConfigError("unknown model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
}

std::unique_ptr<Predictor> load_model(const std::string& path,
                                      const FeatureSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read model file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_string(buffer.str(), schema);
}

}  // namespace deltashap
