// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "deltashap/attribution.hpp"
#include "deltashap/cli.hpp"
#include "deltashap/imputation.hpp"
#include "deltashap/metrics.hpp"
#include "deltashap/predictor.hpp"
#include "deltashap/random.hpp"
#include "deltashap/synthetic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace ds = deltashap;
namespace dt = deltashap::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double sum(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

Outcome oracle_cross_validation() {
  const auto start = Clock::now();
  const auto model = dt::interaction_d4_model();
  const auto strategy = dt::forward_fill(4);
  ds::CounterRng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const ds::Window w = ds::prepare_window(
        dt::random_raw_window(3, 4, 0.6, rng, true), strategy);
    const auto exact = ds::exact_shapley(model, w, strategy);
    const auto oracle = dt::oracle_permutation_enumeration(
        model, w, dt::oracle_forward_baseline(w, {0, 0, 0, 0}));
    for (std::size_t j = 0; j < 4; ++j) {
      worst = std::max(worst, std::abs(exact.phi[j] - oracle[j]));
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-9 && secs < 5.0,
          "max |exact - enumeration| = " + fmt("%.3g", worst) + ", " +
              fmt("%.3f", secs) + " s"};
}

Outcome efficiency() {
  ds::CounterRng rng(202);
  std::size_t applied = 0;
  std::size_t violations = 0;
  double worst_exact = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = 2 + rng.below(7);
    const auto model = dt::random_interaction_model(3, d, rng);
    const auto strategy = dt::forward_fill(d);
    const ds::Window w = ds::prepare_window(
        dt::random_raw_window(3, d, 0.7, rng), strategy);
    const auto r = ds::deltashap(model, w, 1 + rng.below(30), rng.next_u64(),
                                 strategy);
    if (r.status == ds::NormalizationStatus::applied) {
      ++applied;
      if (std::abs(sum(r.phi) - r.delta) >
          1e-9 * std::max(1.0, std::abs(r.delta))) {
        ++violations;
      }
    }
    const auto e = ds::exact_shapley(model, w, strategy);
    worst_exact = std::max(worst_exact, std::abs(sum(e.phi) - e.delta) /
                                            std::max(1.0, std::abs(e.delta)));
  }
  return {violations == 0 && worst_exact <= 1e-9 && applied > 0,
          std::to_string(applied) + " applied results, " +
              std::to_string(violations) + " violations; exact worst " +
              fmt("%.3g", worst_exact)};
}

Outcome unbiasedness() {
  const auto model = dt::interaction_d4_model();
  const auto strategy = dt::forward_fill(4);
  const ds::Window w =
      ds::prepare_window(dt::interaction_d4_raw(), strategy);
  const auto exact = ds::exact_shapley(model, w, strategy).phi;
  const std::size_t r_runs = 500;
  std::vector<double> m1(4, 0.0), m2(4, 0.0);
  for (std::size_t r = 0; r < r_runs; ++r) {
    const auto seed = ds::CounterRng::substream(0, "permutations", r).key();
    const auto raw = ds::deltashap(model, w, 5, seed, strategy).raw;
    for (std::size_t j = 0; j < 4; ++j) {
      m1[j] += raw[j];
      m2[j] += raw[j] * raw[j];
    }
  }
  const double z = 2.5758293035489;  // two-sided 99%
  std::size_t outside = 0;
  std::string worst;
  double worst_z = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    const double mean = m1[j] / r_runs;
    const double var = (m2[j] - r_runs * mean * mean) / (r_runs - 1);
    const double se = std::sqrt(std::max(var, 0.0) / r_runs);
    const double score = se > 0 ? std::abs(mean - exact[j]) / se : 0.0;
    worst_z = std::max(worst_z, score);
    if (score > z) ++outside;
  }
  return {outside <= 1, std::to_string(outside) +
                            " of 4 features outside the 99% band, max |z| = " +
                            fmt("%.2f", worst_z)};
}

Outcome additive_closed_form() {
  const std::vector<double> wts = {0.08, -0.06, 0.05, 0.03, -0.04, 0.02};
  const auto model =
      ds::LinearLogitModel::final_step(3, wts, 0.5, ds::Link::identity_clamped);
  const auto strategy = dt::forward_fill(6);
  ds::CounterRng rng(404);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const ds::Window w = ds::prepare_window(
        dt::random_raw_window(3, 6, 0.7, rng), strategy);
    const auto base = dt::oracle_forward_baseline(w, std::vector<double>(6));
    const auto r = ds::deltashap(model, w, 1, rng.next_u64(), strategy);
    for (std::size_t j = 0; j < 6; ++j) {
      const double closed =
          w.observed(2, j) ? wts[j] * (w.value(2, j) - base[j]) : 0.0;
      worst = std::max(worst, std::abs(r.phi[j] - closed));
    }
  }
  return {worst <= 1e-12, "max deviation " + fmt("%.3g", worst)};
}

Outcome convergence() {
  const auto model = dt::interaction_d6_model();
  const auto strategy = dt::forward_fill(6);
  const ds::Window w =
      ds::prepare_window(dt::interaction_d6_raw(), strategy);
  const auto oracle = dt::oracle_permutation_enumeration(
      model, w, dt::oracle_forward_baseline(w, std::vector<double>(6)));
  std::vector<double> mae;
  std::string detail = "MAE";
  for (std::size_t n : {1, 5, 25, 100}) {
    double total = 0.0;
    for (std::size_t s = 0; s < 100; ++s) {
      const auto seed = ds::CounterRng::substream(5, "permutations", s).key();
      const auto raw = ds::deltashap(model, w, n, seed, strategy).raw;
      for (std::size_t j = 0; j < 6; ++j) total += std::abs(raw[j] - oracle[j]);
    }
    mae.push_back(total / 600.0);
    detail += " N=" + std::to_string(n) + ":" + fmt("%.3g", mae.back());
  }
  bool monotone = true;
  for (std::size_t i = 1; i < mae.size(); ++i) {
    monotone = monotone && mae[i] < mae[i - 1];
  }
  return {monotone, detail};
}

Outcome budget_accounting() {
  ds::CounterRng rng(606);
  bool ok = true;
  double ratio_15 = 0.0;
  for (std::size_t d : {1, 4, 9, 15}) {
    const auto model = dt::random_interaction_model(2, d, rng);
    ds::CountingPredictor counter(model);
    const auto strategy = dt::forward_fill(d);
    const ds::Window w = ds::prepare_window(
        dt::random_raw_window(2, d, 0.5, rng, true), strategy);
    const std::size_t m = ds::derive_observed_set(w).size();
    std::size_t sampled = 0;
    for (std::size_t n : {1, 7, 25}) {
      counter.reset();
      ds::deltashap(counter, w, n, 3, strategy);
      ok = ok && counter.count() == n * (m + 1) + 2;
      if (n == 25) sampled = counter.count();
    }
    counter.reset();
    ds::exact_shapley(counter, w, strategy);
    const std::size_t exact = counter.count();
    ok = ok && exact == (std::size_t{1} << m) + 1;
    if (m == 15) ratio_15 = static_cast<double>(exact) / sampled;
  }
  return {ok && ratio_15 >= 80.0,
          "counts match formulas; |F_obs|=15, N=25 reduction " +
              fmt("%.1f", ratio_15) + "x"};
}

Outcome metric_fixtures() {
  // score = -0.3 + x0 + x1 at T; removal drops 0.4 then 0.1.
  const auto model = ds::LinearLogitModel::final_step(
      2, {1.0, 1.0}, -0.3, ds::Link::identity_clamped);
  const auto strategy = dt::forward_fill(2);
  const ds::Window w(2, 2, {0.3, 0.2, 0.7, 0.3}, {1, 1, 1, 1});
  const std::vector<double> phi = {0.4, 0.1};
  bool ok = std::abs(ds::cpd(model, w, phi, 1, strategy) - 0.4) <= 1e-12 &&
            std::abs(ds::cpd(model, w, phi, 2, strategy) - 0.5) <= 1e-12 &&
            std::abs(ds::aupd(model, w, phi, 2, strategy) - 0.45) <= 1e-12 &&
            std::abs(ds::aupp(model, w, phi, 2, strategy) - 0.3) <= 1e-12;
  const std::vector<double> scores = {0.9, 0.8, 0.7, 0.1};
  const std::vector<int> labels = {1, 0, 1, 0};
  ok = ok && std::abs(ds::auc(scores, labels) - 0.75) <= 1e-12 &&
       std::abs(ds::apr(scores, labels) - 5.0 / 6.0) <= 1e-12;

  ds::CounterRng rng(707);
  std::size_t decreasing = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = 2 + rng.below(6);
    const auto m = dt::random_interaction_model(3, d, rng);
    const auto s = dt::forward_fill(d);
    const ds::Window x =
        ds::prepare_window(dt::random_raw_window(3, d, 0.7, rng), s);
    const auto obs = ds::derive_observed_set(x);
    const auto attr = ds::random_attribution(obs, d, rng);
    double prev = 0.0;
    for (std::size_t k = 0; k <= obs.size(); ++k) {
      const double c = ds::cpd(m, x, attr, k, s);
      if (c < prev) ++decreasing;
      prev = c;
    }
  }
  ok = ok && decreasing == 0;
  return {ok, "fixture values exact; " + std::to_string(decreasing) +
                  " CPD decreases over 1000 instances"};
}

struct RunScores {
  ds::EvalReport shap, random, fo;
};

RunScores faithfulness_run(std::uint64_t root) {
  ds::SyntheticSpec spec;
  spec.instances = 2000;
  spec.seed = ds::CounterRng::substream(root, "data").key();
  const ds::Dataset test_raw = ds::generate(spec).dataset;
  spec.seed = ds::CounterRng::substream(root, "train-data").key();
  const ds::Dataset train_raw = ds::generate(spec).dataset;

  const ds::BaselineStrategy strategy(ds::BaselineKind::forward_fill,
                                      train_raw.schema);
  const ds::Dataset train = ds::prepare_dataset(train_raw, strategy);
  const ds::Dataset test = ds::prepare_dataset(test_raw, strategy);
  ds::TrainConfig tc;
  tc.seed = ds::CounterRng::substream(root, "model").key();
  const auto model = ds::train_tiny_logistic(train, tc);

  const std::size_t n = test.size();
  std::vector<std::vector<double>> shap(n), rnd(n), fo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ds::Window& w = test.instances[i].window;
    shap[i] = ds::deltashap(
                  model, w, ds::kDefaultPermutations,
                  ds::CounterRng::substream(root, "permutations", i).key(),
                  strategy)
                  .phi;
    ds::CounterRng r = ds::CounterRng::substream(root, "random", i);
    rnd[i] = ds::random_attribution(ds::derive_observed_set(w),
                                    w.feature_count(), r);
    fo[i] = ds::feature_occlusion(model, w, {}, r);
  }
  return {ds::dataset_degradation(model, test, shap, 0.25, strategy),
          ds::dataset_degradation(model, test, rnd, 0.25, strategy),
          ds::dataset_degradation(model, test, fo, 0.25, strategy)};
}

Outcome faithfulness() {
  const auto start = Clock::now();
  std::size_t wins_random = 0;
  std::size_t wins_fo = 0;
  double gap_aupd = 0.0;
  for (std::uint64_t run = 0; run < 20; ++run) {
    const RunScores s = faithfulness_run(run);
    const bool beat = s.shap.aupd() > s.random.aupd() &&
                      s.shap.auaucd() > s.random.auaucd() &&
                      s.shap.aupp() < s.random.aupp() &&
                      s.shap.auaucp() < s.random.auaucp();
    wins_random += beat;
    wins_fo += s.shap.aupd() > s.fo.aupd();
    gap_aupd += s.shap.aupd() - s.random.aupd();
  }
  const double secs = seconds_since(start);
  return {wins_random >= 19 && wins_fo > 10 && secs < 120.0,
          "beats random on all four in " + std::to_string(wins_random) +
              "/20, beats FO-zero on AUPD in " + std::to_string(wins_fo) +
              "/20, mean AUPD gap " + fmt("%.4f", gap_aupd / 20) + ", " +
              fmt("%.1f", secs) + " s"};
}

Outcome cli_determinism() {
  const std::vector<std::string> args = {"evaluate", "--data", DELTASHAP_FIXTURE,
                                         "--seed", "0"};
  std::ostringstream out_a, out_b, err_a, err_b;
  const int a = ds::run_cli(args, out_a, err_a);
  const int b = ds::run_cli(args, out_b, err_b);
  const bool same = out_a.str() == out_b.str();
  return {a == 0 && b == 0 && same && !out_a.str().empty(),
          "exit " + std::to_string(a) + "/" + std::to_string(b) + ", " +
              std::to_string(out_a.str().size()) + " bytes, " +
              (same ? "identical" : "different") +
              (a ? "; " + err_a.str() : std::string())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria =
      {{"oracle cross-validation", oracle_cross_validation},
       {"efficiency", efficiency},
       {"unbiasedness", unbiasedness},
       {"additive closed form", additive_closed_form},
       {"convergence", convergence},
       {"budget accounting", budget_accounting},
       {"metric fixtures", metric_fixtures},
       {"faithfulness separation", faithfulness},
       {"determinism", cli_determinism}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
