#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deltashap/timeseries.hpp"

namespace deltashap {

// Black-box scorer mapping windows to probabilities in [0, 1].
//
// predict_batch validates shapes and outputs around the model-specific
// score_batch. Implementations must be deterministic, order-preserving and
// batch-size independent, and safe to call concurrently (const, no shared
// mutable state).
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::size_t window_length() const = 0;
  virtual std::size_t feature_count() const = 0;
  // Stable model identifier used in saved files and reports.
  virtual std::string kind() const = 0;

  // Throws ShapeError if any window has the wrong shape or a non-finite
  // cell, ModelFault if the model returns anything outside [0, 1].
  std::vector<double> predict_batch(std::span<const Window> windows) const;
  double predict(const Window& window) const;

  // Parameters for save_model. The "kind" key is filled in by the caller.
  virtual nlohmann::json parameters() const = 0;

 protected:
  virtual void score_batch(std::span<const Window> windows,
                           std::span<double> out) const = 0;
};

enum class Link { sigmoid, identity_clamped };

std::string to_string(Link link);
Link parse_link(const std::string& name);

double sigmoid(double x);

// score = bias + sum_{t,j} weights[t][j] * values[t][j], then the link.
class LinearLogitModel final : public Predictor {
 public:
  // weights is row-major W*D.
  LinearLogitModel(std::size_t window_length, std::size_t feature_count,
                   std::vector<double> weights, double bias, Link link);

  // Weights only on the final step; every history weight is zero.
  static LinearLogitModel final_step(std::size_t window_length,
                                     std::vector<double> final_weights,
                                     double bias, Link link);

  std::size_t window_length() const override { return window_length_; }
  std::size_t feature_count() const override { return feature_count_; }
  std::string kind() const override { return "linear"; }
  nlohmann::json parameters() const override;

  double weight(std::size_t t, std::size_t j) const {
    return weights_[t * feature_count_ + j];
  }
  double bias() const { return bias_; }
  Link link() const { return link_; }

 protected:
  void score_batch(std::span<const Window> windows,
                   std::span<double> out) const override;

 private:
  std::size_t window_length_;
  std::size_t feature_count_;
  std::vector<double> weights_;
  double bias_;
  Link link_;
};

struct PairTerm {
  std::size_t first = 0;
  std::size_t second = 0;
  double coefficient = 0.0;
};

// sigmoid(intercept + sum_j linear[j] x_{T,j}
//         + sum_pairs c_jk x_{T,j} x_{T,k} + sum_j history[j] mean_{t<T} x_{t,j})
//
// The final step only enters through the linear and pairwise terms; the
// history term reads rows 0..W-2 (it is zero when W = 1).
class InteractionSyntheticModel final : public Predictor {
 public:
  InteractionSyntheticModel(std::size_t window_length, double intercept,
                            std::vector<double> linear,
                            std::vector<PairTerm> pairs,
                            std::vector<double> history);

  std::size_t window_length() const override { return window_length_; }
  std::size_t feature_count() const override { return linear_.size(); }
  std::string kind() const override { return "interaction"; }
  nlohmann::json parameters() const override;

  // Pre-sigmoid score, exposed for tests and ground-truth bookkeeping.
  double logit(const Window& window) const;

  double intercept() const { return intercept_; }
  const std::vector<double>& linear() const { return linear_; }
  const std::vector<PairTerm>& pairs() const { return pairs_; }
  const std::vector<double>& history() const { return history_; }

 protected:
  void score_batch(std::span<const Window> windows,
                   std::span<double> out) const override;

 private:
  std::size_t window_length_;
  double intercept_;
  std::vector<double> linear_;
  std::vector<PairTerm> pairs_;
  std::vector<double> history_;
};

struct TrainConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
};

// Logistic regression over the flattened, standardized window.
class TinyLogisticScorer final : public Predictor {
 public:
  TinyLogisticScorer(std::size_t window_length, std::size_t feature_count,
                     std::vector<double> center, std::vector<double> scale,
                     std::vector<double> weights, double bias);

  std::size_t window_length() const override { return window_length_; }
  std::size_t feature_count() const override { return feature_count_; }
  std::string kind() const override { return "tiny_logistic"; }
  nlohmann::json parameters() const override;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  // Mean log-loss after each epoch; index 0 is the loss of the initial
  // weights. Empty for models loaded from disk.
  const std::vector<double>& loss_history() const { return loss_history_; }
  // Fraction of instances whose thresholded prediction matches the label.
  double accuracy(const Dataset& prepared) const;

 protected:
  void score_batch(std::span<const Window> windows,
                   std::span<double> out) const override;

 private:
  friend TinyLogisticScorer train_tiny_logistic(const Dataset&,
                                                const TrainConfig&);
  double linear_score(const Window& w) const;

  std::size_t window_length_;
  std::size_t feature_count_;
  std::vector<double> center_;
  std::vector<double> scale_;
  std::vector<double> weights_;
  double bias_;
  std::vector<double> loss_history_;
};

// Full-batch gradient descent on mean log-loss. The dataset must already be
// prepared (no NaN cells). Throws ContractViolation on an empty dataset and
// DegenerateLabels when only one class is present.
TinyLogisticScorer train_tiny_logistic(const Dataset& prepared,
                                       const TrainConfig& config);

// Forwards to another predictor and counts every window it scores.
class CountingPredictor final : public Predictor {
 public:
  explicit CountingPredictor(const Predictor& inner) : inner_(inner) {}

  std::size_t window_length() const override {
    return inner_.window_length();
  }
  std::size_t feature_count() const override {
    return inner_.feature_count();
  }
  std::string kind() const override { return inner_.kind(); }
  nlohmann::json parameters() const override { return inner_.parameters(); }

  std::size_t count() const { return count_.load(); }
  std::size_t batches() const { return batches_.load(); }
  void reset() {
    count_ = 0;
    batches_ = 0;
  }

 protected:
  void score_batch(std::span<const Window> windows,
                   std::span<double> out) const override;

 private:
  const Predictor& inner_;
  mutable std::atomic<std::size_t> count_{0};
  mutable std::atomic<std::size_t> batches_{0};
};

// Versioned JSON model file: {"format","version","kind","schema_hash",...}.
void save_model(const Predictor& model, const FeatureSchema& schema,
                const std::string& path);
std::string model_to_string(const Predictor& model,
                            const FeatureSchema& schema);
// Throws ConfigError for unknown kinds, versions or a schema hash that does
// not match `schema`.
std::unique_ptr<Predictor> load_model(const std::string& path,
                                      const FeatureSchema& schema);
std::unique_ptr<Predictor> model_from_string(const std::string& text,
                                             const FeatureSchema& schema);

}  // namespace deltashap
